//! Adaptive Metropolis with a regularized running covariance.

use nalgebra::DMatrix;
use rand::Rng;

use super::{rwm_step, ChainTrace, MoveKind, Point, Proposal};
use crate::error::{check_dim, Error, Result};
use crate::rng::RngStream;
use crate::target::LogDensity;

/// `2.38²`, the numerator of the proposal scaling `2.38² / d`.
pub const AM_SCALE: f64 = 2.38 * 2.38;

/// The adapted parameter `θ = (μ, Γ)` after `count` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub mean: Point,
    pub cov: DMatrix<f64>,
    pub count: u64,
    pub kappa: f64,
}

impl AdaptiveState {
    /// Starts from `μ₀ = 0` and the given `Γ₀` (which may be zero).
    pub fn new(kappa: f64, gamma0: DMatrix<f64>) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Config(format!("kappa must be a positive real, got {kappa}")));
        }
        if !gamma0.is_square() || gamma0.nrows() == 0 {
            return Err(Error::Config("gamma0 must be a non-empty square matrix".into()));
        }
        let d = gamma0.nrows();
        Ok(Self { mean: Point::zeros(d), cov: symmetrize(gamma0), count: 0, kappa })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// In-place form of [`am_update`].
    pub fn update(&mut self, x_new: &Point) -> Result<()> {
        check_dim(self.dim(), x_new.len())?;
        let n = self.count as f64;
        let w = 1.0 / (n + 1.0);
        // The outer product uses the mean before this update.
        let innovation = x_new - &self.mean;
        let mut cov = &self.cov * (n * w);
        cov.ger(w, &innovation, &innovation, 1.0);
        for i in 0..self.dim() {
            cov[(i, i)] += w * self.kappa;
        }
        self.cov = symmetrize(cov);
        self.mean += &innovation * w;
        self.count += 1;
        Ok(())
    }

    /// Proposal covariance for the next step, with the `n = 0` fallback
    /// `(2.38²/d) κ Id` when `Γ₀` is not positive definite.
    pub fn proposal_cov_or_fallback(&self) -> Result<DMatrix<f64>> {
        match am_proposal_cov(self) {
            Ok(c) => Ok(c),
            Err(Error::NotPositiveDefinite(_)) if self.count == 0 => {
                let d = self.dim();
                Ok(DMatrix::from_diagonal_element(d, d, AM_SCALE / d as f64 * self.kappa))
            }
            Err(e) => Err(e),
        }
    }

    /// Smallest eigenvalue of `Γ`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.cov.clone().symmetric_eigenvalues().min()
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `μ_{n+1} = μ_n + (X_{n+1} − μ_n)/(n+1)` and
/// `Γ_{n+1} = n/(n+1) Γ_n + ((X_{n+1} − μ_n)(X_{n+1} − μ_n)ᵀ + κ Id)/(n+1)`.
pub fn am_update(state: &AdaptiveState, x_new: &Point) -> Result<AdaptiveState> {
    let mut next = state.clone();
    next.update(x_new)?;
    Ok(next)
}

/// `(2.38² / d) Γ`. Fails when `Γ` is not SPD, which can only happen before
/// the first update.
pub fn am_proposal_cov(state: &AdaptiveState) -> Result<DMatrix<f64>> {
    let d = state.dim();
    if state.cov.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite(format!("adaptive covariance at n = {}", state.count)));
    }
    Ok(&state.cov * (AM_SCALE / d as f64))
}

/// Settings for [`run_am`].
#[derive(Debug, Clone, PartialEq)]
pub struct AmConfig {
    pub kappa: f64,
    pub gamma0: DMatrix<f64>,
    pub steps: usize,
    pub burn_in: usize,
    /// Record a parameter snapshot every this many steps; `0` disables.
    pub snapshot_every: usize,
}

/// An Adaptive Metropolis chain: samples with `θ_n`, then adapts to
/// `θ_{n+1}` using the new state.
#[derive(Debug, Clone)]
pub struct AmSampler<D> {
    target: D,
    state: AdaptiveState,
    x: Point,
}

impl<D: LogDensity> AmSampler<D> {
    pub fn new(target: D, x0: Point, state: AdaptiveState) -> Result<Self> {
        check_dim(target.dim(), x0.len())?;
        check_dim(target.dim(), state.dim())?;
        Ok(Self { target, state, x: x0 })
    }

    pub fn state(&self) -> &AdaptiveState {
        &self.state
    }

    pub fn current(&self) -> &Point {
        &self.x
    }

    pub fn target(&self) -> &D {
        &self.target
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool> {
        let proposal = Proposal::new(&self.state.proposal_cov_or_fallback()?)?;
        let (y, accepted) = rwm_step(&self.x, &proposal, &self.target, rng)?;
        self.x = y;
        self.state.update(&self.x)?;
        Ok(accepted)
    }
}

/// Runs Adaptive Metropolis from `x0` with `μ₀ = 0`.
pub fn run_am<D>(target: &D, x0: &Point, cfg: &AmConfig, stream: RngStream) -> Result<ChainTrace>
where
    D: LogDensity + Clone,
{
    if cfg.steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    let state = AdaptiveState::new(cfg.kappa, cfg.gamma0.clone())?;
    let mut sampler = AmSampler::new(target.clone(), x0.clone(), state)?;
    let mut rng = stream.rng();
    let mut trace = ChainTrace::with_capacity(cfg.steps.saturating_sub(cfg.burn_in), cfg.burn_in + 1);
    for n in 0..cfg.steps {
        let accepted = sampler.step(&mut rng)?;
        if n >= cfg.burn_in {
            trace.push(sampler.current().clone(), accepted, MoveKind::Local);
        }
        if cfg.snapshot_every > 0 && (n + 1) % cfg.snapshot_every == 0 {
            trace.param_snapshots.push((n + 1, sampler.state().clone()));
        }
    }
    Ok(trace)
}
