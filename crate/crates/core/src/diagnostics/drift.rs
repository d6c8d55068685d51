//! Numerical confirmation of a geometric drift inequality `PW ≤ λW + b`.

use rand::Rng;

use super::DiscreteKernelOracle;
use crate::error::{Error, Result};
use crate::samplers::Point;
use crate::target::DriftFunction;

/// Candidate contraction factors `0.50, 0.51, …, 0.99`.
pub const DRIFT_LAMBDA_GRID: [f64; 50] = {
    let mut g = [0.0; 50];
    let mut i = 0;
    while i < 50 {
        g[i] = (50 + i) as f64 / 100.0;
        i += 1;
    }
    g
};

/// Width of the Monte Carlo band, in standard errors.
pub const DRIFT_BAND_Z: f64 = 3.0;

/// A fitted pair `(λ̂, b̂)` with the per-point estimates behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEstimate {
    pub lambda_hat: f64,
    pub b_hat: f64,
    pub test_points: Vec<Point>,
    /// `0` in exact mode.
    pub mc_reps: usize,
    pub w: Vec<f64>,
    pub pw_hat: Vec<f64>,
    /// Upper end of the confidence band of `PW` (equal to `pw_hat` in
    /// exact mode).
    pub pw_upper: Vec<f64>,
    /// No test point shows `PW < W`: the whole inequality is carried by
    /// `b̂` and nothing about contraction was learned.
    pub degenerate: bool,
}

impl DriftEstimate {
    /// `P̂W(x) ≤ λ̂ W(x) + b̂` at the upper band of every test point.
    pub fn is_satisfied(&self) -> bool {
        self.pw_upper.iter().zip(&self.w).all(|(pw, w)| *pw <= self.lambda_hat * w + self.b_hat + 1e-12)
    }
}

/// Smallest `b ≥ 0` with `upper_i ≤ λ w_i + b` for all `i`.
pub fn fit_drift_at(lambda: f64, w: &[f64], pw_upper: &[f64]) -> f64 {
    w.iter().zip(pw_upper).map(|(w, pw)| pw - lambda * w).fold(0.0, f64::max)
}

fn fit(
    test_points: Vec<Point>,
    mc_reps: usize,
    w: Vec<f64>,
    pw_hat: Vec<f64>,
    pw_upper: Vec<f64>,
) -> Result<DriftEstimate> {
    if w.iter().chain(&pw_upper).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("drift not numerically confirmed: non-finite W or PW at a test point".into()));
    }
    let mut best: Option<(f64, f64)> = None;
    for &lambda in DRIFT_LAMBDA_GRID.iter() {
        let b = fit_drift_at(lambda, &w, &pw_upper);
        // strict improvement only: ties keep the smaller λ
        if best.is_none_or(|(_, bb)| b < bb) {
            best = Some((lambda, b));
        }
    }
    let (lambda_hat, b_hat) = best.expect("grid is non-empty");
    // relative slack so that rounding in a Monte Carlo mean of constant
    // values does not count as contraction
    let degenerate = !w.iter().zip(&pw_upper).any(|(w, pw)| *pw < w * (1.0 - 1e-12));
    Ok(DriftEstimate { lambda_hat, b_hat, test_points, mc_reps, w, pw_hat, pw_upper, degenerate })
}

/// Estimates `PW(x)` at each test point from `mc_reps` independent one-step
/// transitions and fits `(λ̂, b̂)` on [`DRIFT_LAMBDA_GRID`], taking `b̂`
/// against the upper confidence band. Among equal `b̂` the smallest `λ̂` wins.
pub fn estimate_drift<F, R>(
    mut kernel_step: F,
    w: &DriftFunction,
    test_points: &[Point],
    mc_reps: usize,
    rng: &mut R,
) -> Result<DriftEstimate>
where
    F: FnMut(&Point, &mut R) -> Result<Point>,
    R: Rng + ?Sized,
{
    if test_points.is_empty() {
        return Err(Error::InvalidInput("drift estimation needs at least one test point".into()));
    }
    if mc_reps < 1000 {
        return Err(Error::InvalidInput(format!("mc_reps must be at least 1000, got {mc_reps}")));
    }
    let mut ws = Vec::with_capacity(test_points.len());
    let mut pw_hat = Vec::with_capacity(test_points.len());
    let mut pw_upper = Vec::with_capacity(test_points.len());
    for x in test_points {
        ws.push(w.value(x.as_slice()));
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..mc_reps {
            let y = kernel_step(x, rng)?;
            let v = w.value(y.as_slice());
            sum += v;
            sum_sq += v * v;
        }
        let n = mc_reps as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        pw_hat.push(mean);
        pw_upper.push(mean + DRIFT_BAND_Z * (var / n).sqrt());
    }
    fit(test_points.to_vec(), mc_reps, ws, pw_hat, pw_upper)
}

/// Exact mode for a discrete kernel: `PW` is a matrix-vector product and
/// carries no Monte Carlo error. `w_values[i]` is `W` at state `i`.
pub fn estimate_drift_exact(
    kernel: &DiscreteKernelOracle,
    w_values: &[f64],
    test_states: &[usize],
) -> Result<DriftEstimate> {
    if w_values.len() != kernel.n_states() {
        return Err(Error::Dimension { expected: kernel.n_states(), got: w_values.len() });
    }
    if test_states.is_empty() || test_states.iter().any(|&s| s >= kernel.n_states()) {
        return Err(Error::InvalidInput("test states must be non-empty and in range".into()));
    }
    if w_values.iter().any(|v| !(*v >= 1.0)) {
        return Err(Error::InvalidInput("drift function values must be >= 1".into()));
    }
    let pw = kernel.apply(w_values);
    let w: Vec<f64> = test_states.iter().map(|&s| w_values[s]).collect();
    let pw_hat: Vec<f64> = test_states.iter().map(|&s| pw[s]).collect();
    let points = test_states.iter().map(|&s| Point::from_element(1, s as f64)).collect();
    fit(points, 0, w, pw_hat.clone(), pw_hat)
}
