//! Convergence of the marginal law of `X_n` across independent replicates.

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;
type SamplerFn = dyn Fn(&mut StreamRng) -> f64 + Send + Sync;

/// Law the pooled replicates are compared against.
pub enum Reference {
    /// Continuous law on the real line, given by its CDF and quantile
    /// function.
    Continuous { cdf: Box<ScalarFn>, quantile: Box<ScalarFn> },
    /// Law on the states `0, 1, …, k−1`; replicate values are state indices.
    Discrete(Vec<f64>),
    /// Only an exact sampler is available: two-sample KS against `count`
    /// draws, no histogram distance.
    Sampler { draw: Box<SamplerFn>, count: usize },
}

impl Reference {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        let n = Normal::new(mean, sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let q = n;
        Ok(Reference::Continuous { cdf: Box::new(move |x| n.cdf(x)), quantile: Box::new(move |p| q.inverse_cdf(p)) })
    }
}

/// Statistics of the pooled sample at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCheckpoint {
    pub n: usize,
    pub pooled: usize,
    pub ks: f64,
    /// `Σ|Δ|` between binned empirical and reference frequencies.
    pub hist_tv: Option<f64>,
    pub ks_critical_1pct: f64,
}

/// One-sample KS statistic `sup_x |F_n(x) − F(x)|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0f64, |d, (i, x)| {
        let f = cdf(*x);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    })
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic KS critical value at level `alpha` for a sample of size `n`,
/// with Stephens' small-sample correction.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let sn = (n as f64).sqrt();
    c / (sn + 0.12 + 0.11 / sn)
}

/// Quantile `q` of the two-sample KS statistic between independent exact
/// samples of size `pool_size`: the noise floor a converged chain cannot
/// beat.
pub fn null_ks_floor<R, S>(mut draw: S, pool_size: usize, boot_reps: usize, q: f64, rng: &mut R) -> f64
where
    R: Rng + ?Sized,
    S: FnMut(&mut R) -> f64,
{
    let mut stats: Vec<f64> = (0..boot_reps)
        .map(|_| {
            let a: Vec<f64> = (0..pool_size).map(|_| draw(rng)).collect();
            let b: Vec<f64> = (0..pool_size).map(|_| draw(rng)).collect();
            ks_two_sample(&a, &b)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let idx = ((q * boot_reps as f64).ceil() as usize).clamp(1, boot_reps) - 1;
    stats[idx]
}

/// Freedman–Diaconis edges from the reference: width `2 IQR N^{-1/3}` over
/// the central `[q(0.001), q(0.999)]` range. The two outer bins are
/// unbounded.
fn fd_edges(quantile: &ScalarFn, pooled: usize) -> Vec<f64> {
    let iqr = quantile(0.75) - quantile(0.25);
    let width = 2.0 * iqr / (pooled as f64).cbrt();
    let (lo, hi) = (quantile(0.001), quantile(0.999));
    let bins = ((hi - lo) / width).ceil().max(1.0) as usize;
    (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect()
}

fn hist_tv_continuous(values: &[f64], edges: &[f64], cdf: &ScalarFn) -> f64 {
    let nb = edges.len() + 1;
    let mut counts = vec![0usize; nb];
    for v in values {
        let k = edges.partition_point(|e| e <= v);
        counts[k] += 1;
    }
    let n = values.len() as f64;
    let mut tv = 0.0;
    for k in 0..nb {
        let lo = if k == 0 { 0.0 } else { cdf(edges[k - 1]) };
        let hi = if k == nb - 1 { 1.0 } else { cdf(edges[k]) };
        tv += (counts[k] as f64 / n - (hi - lo)).abs();
    }
    tv
}

fn discrete_stats(values: &[f64], probs: &[f64]) -> Result<(f64, f64)> {
    let mut counts = vec![0usize; probs.len()];
    for v in values {
        let s = v.round();
        if s < 0.0 || s as usize >= probs.len() || s != *v {
            return Err(Error::InvalidInput(format!("value {v} is not a state of the discrete reference")));
        }
        counts[s as usize] += 1;
    }
    let n = values.len() as f64;
    let (mut tv, mut ks) = (0.0f64, 0.0f64);
    let (mut fe, mut fr) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(probs) {
        let e = *c as f64 / n;
        tv += (e - p).abs();
        fe += e;
        fr += p;
        ks = ks.max((fe - fr).abs());
    }
    Ok((ks, tv))
}

/// Runs `n_replicates` independent replicates (in parallel, merged by
/// replicate index) and compares the pooled values at each checkpoint with
/// `reference`.
///
/// `runner(r, checkpoints)` must return the scalar summary of `X_n` for
/// replicate `r` at every checkpoint, in order.
pub fn marginal_convergence_test<F>(
    runner: F,
    checkpoints: &[usize],
    n_replicates: usize,
    reference: &Reference,
    stream: RngStream,
) -> Result<Vec<MarginalCheckpoint>>
where
    F: Fn(usize, &[usize]) -> Result<Vec<f64>> + Sync,
{
    if checkpoints.is_empty() || n_replicates < 2 {
        return Err(Error::InvalidInput("need at least one checkpoint and two replicates".into()));
    }
    let per_rep: Vec<Vec<f64>> = (0..n_replicates)
        .into_par_iter()
        .map(|r| {
            let v = runner(r, checkpoints)?;
            if v.len() != checkpoints.len() {
                return Err(Error::InvalidInput(format!(
                    "replicate {r} returned {} values for {} checkpoints",
                    v.len(),
                    checkpoints.len()
                )));
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;

    let edges = match reference {
        Reference::Continuous { quantile, .. } => Some(fd_edges(quantile.as_ref(), n_replicates)),
        _ => None,
    };
    let mut reference_pool = match reference {
        Reference::Sampler { draw, count } => {
            let mut rng = stream.rng();
            Some((0..*count).map(|_| draw(&mut rng)).collect::<Vec<f64>>())
        }
        _ => None,
    };

    let crit = ks_critical_value(n_replicates, 0.01);
    let mut out = Vec::with_capacity(checkpoints.len());
    for (c, &n) in checkpoints.iter().enumerate() {
        let pooled: Vec<f64> = per_rep.iter().map(|v| v[c]).collect();
        let (ks, hist_tv) = match reference {
            Reference::Continuous { cdf, .. } => {
                let ks = ks_statistic(&pooled, cdf.as_ref());
                let tv = hist_tv_continuous(&pooled, edges.as_ref().expect("continuous"), cdf.as_ref());
                (ks, Some(tv))
            }
            Reference::Discrete(probs) => {
                let (ks, tv) = discrete_stats(&pooled, probs)?;
                (ks, Some(tv))
            }
            Reference::Sampler { .. } => {
                let pool = reference_pool.as_mut().expect("sampler reference");
                (ks_two_sample(&pooled, pool), None)
            }
        };
        out.push(MarginalCheckpoint { n, pooled: pooled.len(), ks, hist_tv, ks_critical_1pct: crit });
    }
    Ok(out)
}
