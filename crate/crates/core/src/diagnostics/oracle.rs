//! Exact one-step kernels of interacting tempering on small state spaces.

use nalgebra::DMatrix;

use super::DiscreteKernelOracle;
use crate::error::{Error, Result};

fn check_positive_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what}: entries must be positive")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("{what}: entries sum to {s}, not 1")));
    }
    Ok(())
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what}: entries must be non-negative")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("{what}: entries sum to {s}, not 1")));
    }
    Ok(())
}

/// `π^{1/T}`, renormalized.
pub fn tempered_distribution(pi: &[f64], temperature: f64) -> Vec<f64> {
    let w: Vec<f64> = pi.iter().map(|p| p.powf(1.0 / temperature)).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Metropolis kernel for `pi` under a symmetric proposal matrix `q`:
/// `P(x, y) = q(x, y) min(1, π(y)/π(x))` off the diagonal.
pub fn metropolis_kernel(pi: &[f64], q: &DMatrix<f64>) -> Result<DiscreteKernelOracle> {
    let n = pi.len();
    check_positive_distribution(pi, "pi")?;
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension { expected: n, got: q.nrows() });
    }
    let mut m = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut off = 0.0;
        for y in 0..n {
            if y != x {
                let v = q[(x, y)] * (pi[y] / pi[x]).min(1.0);
                m[(x, y)] = v;
                off += v;
            }
        }
        m[(x, x)] = 1.0 - off;
    }
    DiscreteKernelOracle::from_matrix(m)
}

/// `(1 − υ) P + υ K_θ` with
/// `K_θ(x, y) = α(x, y) θ(y)` for `y ≠ x`,
/// `K_θ(x, x) = θ(x) + Σ_y (1 − α(x, y)) θ(y)` and
/// `α(x, y) = min(1, (π(y)/π(x))^β)`.
pub fn brute_force_it_kernel(
    pi: &[f64],
    theta: &[f64],
    p_local: &DiscreteKernelOracle,
    upsilon: f64,
    beta: f64,
) -> Result<DiscreteKernelOracle> {
    let n = pi.len();
    check_positive_distribution(pi, "pi")?;
    check_distribution(theta, "theta")?;
    if theta.len() != n || p_local.n_states() != n {
        return Err(Error::Dimension { expected: n, got: theta.len().max(p_local.n_states()) });
    }
    if !(0.0..=1.0).contains(&upsilon) {
        return Err(Error::InvalidInput(format!("upsilon must lie in [0, 1], got {upsilon}")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!("beta must be a finite non-negative real, got {beta}")));
    }
    let alpha = |x: usize, y: usize| (pi[y] / pi[x]).powf(beta).min(1.0);
    let mut k = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut stay = theta[x];
        for y in 0..n {
            let a = alpha(x, y);
            stay += (1.0 - a) * theta[y];
            if y != x {
                k[(x, y)] = a * theta[y];
            }
        }
        k[(x, x)] = stay;
    }
    DiscreteKernelOracle::from_matrix(p_local.matrix() * (1.0 - upsilon) + k * upsilon)
}

/// `max_y |(π P)(y) − π(y)|`.
pub fn pi_invariance_max_abs_err(pi: &[f64], kernel: &DiscreteKernelOracle) -> f64 {
    kernel.left_apply(pi).iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// `max_{x ≠ y} |π(x) P(x, y) − π(y) P(y, x)|`.
pub fn detailed_balance_max_err(pi: &[f64], kernel: &DiscreteKernelOracle) -> f64 {
    let m = kernel.matrix();
    let n = pi.len();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            if x != y {
                worst = worst.max((pi[x] * m[(x, y)] - pi[y] * m[(y, x)]).abs());
            }
        }
    }
    worst
}

/// Errors of the limiting two-level kernel on a discrete space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItInvarianceReport {
    /// `max |π P_{θ*} − π|`.
    pub pi_invariance: f64,
    /// Detailed-balance error of `K_{θ*}` alone.
    pub interaction_balance: f64,
    /// Detailed-balance error of `P_{θ*}`.
    pub kernel_balance: f64,
}

impl ItInvarianceReport {
    pub fn max(&self) -> f64 {
        self.pi_invariance.max(self.interaction_balance).max(self.kernel_balance)
    }
}

/// Builds `θ* ∝ π^{1/T}`, a uniform-proposal Metropolis kernel for `π`, and
/// checks that `(1 − υ) P + υ K_{θ*}` leaves `π` invariant.
pub fn it_invariance_check(pi: &[f64], temperature: f64, upsilon: f64) -> Result<ItInvarianceReport> {
    if !(temperature > 1.0) {
        return Err(Error::InvalidInput(format!("temperature must exceed 1, got {temperature}")));
    }
    let n = pi.len();
    let theta_star = tempered_distribution(pi, temperature);
    let beta = 1.0 - 1.0 / temperature;
    let q = DMatrix::from_element(n, n, 1.0 / n as f64);
    let local = metropolis_kernel(pi, &q)?;
    let full = brute_force_it_kernel(pi, &theta_star, &local, upsilon, beta)?;
    let interaction = brute_force_it_kernel(pi, &theta_star, &local, 1.0, beta)?;
    Ok(ItInvarianceReport {
        pi_invariance: pi_invariance_max_abs_err(pi, &full),
        interaction_balance: detailed_balance_max_err(pi, &interaction),
        kernel_balance: detailed_balance_max_err(pi, &full),
    })
}
