use crate::error::{Error, Result};
use crate::samplers::{ChainTrace, Point};

/// Running ergodic averages `n⁻¹ Σ_{k ≤ n} f(X_k)` with a batch-means
/// error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicReport {
    /// `running_means[k]` is the mean of the first `k + 1` values, summed
    /// left to right.
    pub running_means: Vec<f64>,
    pub target_value: Option<f64>,
    pub final_mean: f64,
    /// `|final_mean − target_value|`, when a target is given.
    pub final_abs_error: Option<f64>,
    /// Batch-means standard error of `final_mean`.
    pub std_error: f64,
    pub n_effective: f64,
}

/// `(standard error, effective sample size)` of the mean of `values` from
/// `⌊√n⌋` non-overlapping batches.
pub fn batch_means(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let n_batches = (n as f64).sqrt().floor() as usize;
    if n_batches < 2 {
        return (f64::NAN, n as f64);
    }
    let size = n / n_batches;
    let used = n_batches * size;
    let mean_used = values[..used].iter().sum::<f64>() / used as f64;
    let batch_var = values[..used]
        .chunks_exact(size)
        .map(|c| {
            let m = c.iter().sum::<f64>() / size as f64;
            (m - mean_used).powi(2)
        })
        .sum::<f64>()
        / (n_batches - 1) as f64;
    // variance of the mean over `size` correlated draws, scaled up to one draw
    let sigma2 = size as f64 * batch_var;
    let mean = values.iter().sum::<f64>() / n as f64;
    let sample_var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (sigma2 / n as f64).sqrt();
    let n_eff = if sigma2 > 0.0 { n as f64 * sample_var / sigma2 } else { n as f64 };
    (se, n_eff)
}

pub fn ergodic_average_values(values: &[f64], target: Option<f64>) -> Result<ErgodicReport> {
    if values.is_empty() {
        return Err(Error::InvalidInput("ergodic average of an empty trace".into()));
    }
    let mut running_means = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (k, v) in values.iter().enumerate() {
        sum += v;
        running_means.push(sum / (k + 1) as f64);
    }
    let final_mean = *running_means.last().expect("non-empty");
    let (std_error, n_effective) = batch_means(values);
    Ok(ErgodicReport {
        running_means,
        target_value: target,
        final_mean,
        final_abs_error: target.map(|t| (final_mean - t).abs()),
        std_error,
        n_effective,
    })
}

/// Ergodic average of `f` along the recorded states of `trace`.
pub fn ergodic_average<F: Fn(&Point) -> f64>(trace: &ChainTrace, f: F, target: Option<f64>) -> Result<ErgodicReport> {
    let values: Vec<f64> = trace.states.iter().map(f).collect();
    ergodic_average_values(&values, target)
}
