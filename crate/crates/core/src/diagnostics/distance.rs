use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::samplers::{AmSampler, EmpiricalMeasure};
use crate::target::{DriftFunction, LogDensity};

const DIST_TOL: f64 = 1e-9;

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidInput(format!("{what}: empty distribution")));
    }
    if p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what}: entries must be finite and non-negative")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DIST_TOL {
        return Err(Error::InvalidInput(format!("{what}: entries sum to {s}, not 1")));
    }
    Ok(())
}

/// `Σ_i |p_i − q_i|`, in `[0, 2]`.
pub fn tv_distance_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension { expected: p.len(), got: q.len() });
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum())
}

/// Row-stochastic matrix on at most 16 states.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernelOracle {
    matrix: DMatrix<f64>,
}

impl DiscreteKernelOracle {
    pub const MAX_STATES: usize = 16;

    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("kernel matrix must be square".into()));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || n > Self::MAX_STATES || !matrix.is_square() {
            return Err(Error::InvalidInput(format!(
                "kernel must be square with 1..={} states, got {}x{}",
                Self::MAX_STATES,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for (i, row) in matrix.row_iter().enumerate() {
            if row.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::InvalidInput(format!("kernel row {i} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("kernel row {i} sums to {s}")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn n_states(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    /// `p P`, `p` a row vector.
    pub fn left_apply(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n_states();
        (0..n).map(|j| (0..n).map(|i| p[i] * self.matrix[(i, j)]).sum()).collect()
    }

    /// `(P f)(i) = Σ_j P(i, j) f(j)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n_states();
        (0..n).map(|i| (0..n).map(|j| self.matrix[(i, j)] * f[j]).sum()).collect()
    }
}

/// `max_x Σ_y |P₁(x, y) − P₂(x, y)|`.
pub fn kernel_tv_sup(p1: &DiscreteKernelOracle, p2: &DiscreteKernelOracle) -> Result<f64> {
    if p1.n_states() != p2.n_states() {
        return Err(Error::Dimension { expected: p1.n_states(), got: p2.n_states() });
    }
    (0..p1.n_states())
        .map(|x| tv_distance_discrete(&p1.row(x), &p2.row(x)))
        .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))
}

/// `2 d κ⁻¹ ‖Γ₁ − Γ₂‖_F`, the bound on the weighted kernel distance of two
/// Adaptive Metropolis parameters.
pub fn dv_bound_am(gamma1: &DMatrix<f64>, gamma2: &DMatrix<f64>, kappa: f64, d: usize) -> f64 {
    2.0 * d as f64 / kappa * (gamma1 - gamma2).norm()
}

/// Partial sums of `Σ_k k⁻¹ · dv_bound_am(Γ_k, Γ_{k−1}) · W(X_k)` at
/// checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationSeries {
    pub checkpoints: Vec<usize>,
    pub partial_sums: Vec<f64>,
}

impl AdaptationSeries {
    /// Increase of the partial sum between the last two checkpoints,
    /// relative to the sum at the earlier one.
    pub fn tail_increment_ratio(&self) -> f64 {
        let n = self.partial_sums.len();
        if n < 2 {
            return f64::NAN;
        }
        (self.partial_sums[n - 1] - self.partial_sums[n - 2]) / self.partial_sums[n - 2]
    }
}

/// Drives an Adaptive Metropolis sampler for `max(checkpoints)` steps and
/// accumulates the observable factors of the adaptation series. The
/// Lipschitz-type constants of the kernels are not observable and are left
/// out.
pub fn am_adaptation_series<D, R>(
    sampler: &mut AmSampler<D>,
    weight: &DriftFunction,
    checkpoints: &[usize],
    rng: &mut R,
) -> Result<AdaptationSeries>
where
    D: LogDensity,
    R: Rng + ?Sized,
{
    let steps = checkpoints.iter().copied().max().unwrap_or(0);
    let mut sums = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let kappa = sampler.state().kappa;
    let d = sampler.state().dim();
    for k in 1..=steps {
        let prev = sampler.state().cov.clone();
        sampler.step(rng)?;
        let w = weight.value(sampler.current().as_slice());
        acc += dv_bound_am(&sampler.state().cov, &prev, kappa, d) * w / k as f64;
        if checkpoints.contains(&k) {
            sums.push(acc);
        }
    }
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(AdaptationSeries { checkpoints: sorted, partial_sums: sums })
}

/// Largest `TV(θ_{n+m}, θ_n) − 2m/(n+m+1)` over the grid `ns × ms`, where
/// `θ_n` is the uniform measure on the first `n + 1` entries of `history`.
/// Non-positive values mean the bound holds everywhere.
pub fn empirical_bound_violation(history: &EmpiricalMeasure, ns: &[usize], ms: &[usize]) -> Result<f64> {
    let atoms = history.atoms();
    let mut worst = f64::NEG_INFINITY;
    for &n in ns {
        for &m in ms {
            if n + m + 1 > history.count() {
                return Err(Error::InvalidInput(format!(
                    "history of {} samples is too short for n = {n}, m = {m}",
                    history.count()
                )));
            }
            let tv = atoms.prefix_tv(n + 1, n + m + 1);
            let bound = 2.0 * m as f64 / (n + m + 1) as f64;
            worst = worst.max(tv - bound);
        }
    }
    Ok(worst)
}
