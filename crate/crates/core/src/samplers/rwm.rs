use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{ChainTrace, MoveKind, Point};
use crate::error::{check_dim, Error, Result};
use crate::rng::RngStream;
use crate::target::LogDensity;

/// A Gaussian random-walk increment `N(0, Σ)`, stored as the lower
/// Cholesky factor of `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    chol: DMatrix<f64>,
}

impl Proposal {
    /// Factorizes `cov`. A matrix that is not SPD is a configuration error;
    /// it is never regularized here.
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() {
            return Err(Error::Config(format!(
                "proposal covariance must be square, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let chol = cov.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite("proposal covariance".into()))?;
        Ok(Self { chol: chol.l() })
    }

    /// Isotropic proposal with standard deviation `sd` in every coordinate.
    pub fn isotropic(dim: usize, sd: f64) -> Result<Self> {
        Self::new(&DMatrix::from_diagonal_element(dim, dim, sd * sd))
    }

    pub fn dim(&self) -> usize {
        self.chol.nrows()
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Draws `x + L z` with `z` standard normal, coordinates drawn in order.
    pub fn propose<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R) -> Point {
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        x + &self.chol * z
    }
}

/// Metropolis decision: accept iff `ln u < min(0, log_ratio)`.
#[inline]
pub fn metropolis_accept(log_ratio: f64, u: f64) -> bool {
    u.ln() < log_ratio.min(0.0)
}

/// One random-walk Metropolis step.
///
/// Draws the `d` normals of the increment, then one uniform, regardless of
/// the proposed value; the number of draws per step is fixed.
pub fn rwm_step<D, R>(x: &Point, proposal: &Proposal, target: &D, rng: &mut R) -> Result<(Point, bool)>
where
    D: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    check_dim(target.dim(), x.len())?;
    check_dim(target.dim(), proposal.dim())?;
    let lp_x = target.log_density(x.as_slice());
    if lp_x == f64::NEG_INFINITY || lp_x.is_nan() {
        return Err(Error::InvalidInput(format!(
            "current state has log-density {lp_x}; chain must start inside the support"
        )));
    }
    let y = proposal.propose(x, rng);
    let u: f64 = rng.gen();
    let lp_y = target.log_density(y.as_slice());
    if lp_y.is_nan() {
        return Err(Error::Numeric(format!("log-density is NaN at proposed {y:?}")));
    }
    if metropolis_accept(lp_y - lp_x, u) {
        Ok((y, true))
    } else {
        Ok((x.clone(), false))
    }
}

/// [`rwm_step`] with the covariance factorized on the spot.
pub fn rwm_step_cov<D, R>(x: &Point, proposal_cov: &DMatrix<f64>, target: &D, rng: &mut R) -> Result<(Point, bool)>
where
    D: LogDensity + ?Sized,
    R: Rng + ?Sized,
{
    rwm_step(x, &Proposal::new(proposal_cov)?, target, rng)
}

/// Plain symmetric random-walk Metropolis chain.
pub fn run_rwm<D: LogDensity + ?Sized>(
    target: &D,
    x0: &Point,
    proposal: &Proposal,
    steps: usize,
    burn_in: usize,
    stream: RngStream,
) -> Result<ChainTrace> {
    let mut rng = stream.rng();
    let mut trace = ChainTrace::with_capacity(steps.saturating_sub(burn_in), burn_in + 1);
    let mut x = x0.clone();
    for n in 0..steps {
        let (y, accepted) = rwm_step(&x, proposal, target, &mut rng)?;
        x = y;
        if n >= burn_in {
            trace.push(x.clone(), accepted, MoveKind::Local);
        }
    }
    Ok(trace)
}
