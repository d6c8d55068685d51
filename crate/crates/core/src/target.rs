//! Target densities, their tempered versions and drift functions.
//!
//! Everything is kept in log space. A target is an unnormalized
//! log-density together with an upper bound of its supremum, which drift
//! functions use as their normalizer.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Anything that can evaluate an unnormalized log-density on `R^dim`.
pub trait LogDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// Unchecked evaluation. Callers guarantee `x.len() == self.dim()`.
    fn log_density(&self, x: &[f64]) -> f64;

    /// Checked evaluation: validates the dimension and rejects NaN.
    fn log_density_at(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let v = self.log_density(x);
        if v.is_nan() {
            return Err(Error::Numeric(format!("log-density is NaN at {x:?}")));
        }
        Ok(v)
    }
}

type LogFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// An unnormalized target density `π` on `R^dim`.
///
/// Cloning is cheap; the evaluation closure is shared.
#[derive(Clone)]
pub struct TargetDensity {
    name: String,
    dim: usize,
    log_fn: Arc<LogFn>,
    sup_log_density: f64,
    normalization: Option<f64>,
}

impl fmt::Debug for TargetDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetDensity")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("sup_log_density", &self.sup_log_density)
            .field("normalization", &self.normalization)
            .finish()
    }
}

impl TargetDensity {
    /// Wraps an arbitrary log-density. `sup_log_density` must bound the
    /// log-density from above everywhere.
    pub fn from_fn<F>(name: impl Into<String>, dim: usize, sup_log_density: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidInput("target dimension must be positive".into()));
        }
        if sup_log_density.is_nan() {
            return Err(Error::InvalidInput("sup_log_density is NaN".into()));
        }
        Ok(Self { name: name.into(), dim, log_fn: Arc::new(f), sup_log_density, normalization: None })
    }

    pub fn with_normalization(mut self, log_z: f64) -> Self {
        self.normalization = Some(log_z);
        self
    }

    /// `exp(-|x|²/2)` on `R^dim`, peak value 1.
    pub fn standard_gaussian(dim: usize) -> Result<Self> {
        let log_z = 0.5 * dim as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(Self::from_fn("gaussian", dim, 0.0, |x| -0.5 * x.iter().map(|v| v * v).sum::<f64>())?
            .with_normalization(log_z))
    }

    /// `exp(-(x-m)ᵀ Σ⁻¹ (x-m) / 2)`, peak value 1 at the mean.
    pub fn gaussian(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::Dimension { expected: dim, got: cov.nrows() });
        }
        let chol = cov.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite("gaussian covariance".into()))?;
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let log_z = 0.5 * (dim as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        let l = chol.l();
        Ok(Self::from_fn("gaussian", dim, 0.0, move |x| {
            let centered = DVector::from_iterator(dim, x.iter().zip(mean.iter()).map(|(a, b)| a - b));
            let z = l.solve_lower_triangular(&centered).expect("cholesky factor has a positive diagonal");
            -0.5 * z.norm_squared()
        })?
        .with_normalization(log_z))
    }

    /// Equal-weight sum of two unit-covariance Gaussian kernels centred at
    /// `±separation · e₁`, each with peak value 1.
    ///
    /// The supremum bound is `ln 2`, the sum of the component peaks.
    pub fn bimodal_mixture(dim: usize, separation: f64) -> Result<Self> {
        if !separation.is_finite() {
            return Err(Error::InvalidInput("mixture separation must be finite".into()));
        }
        let log_z = std::f64::consts::LN_2 + 0.5 * dim as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(Self::from_fn("mixture", dim, std::f64::consts::LN_2, move |x| {
            let rest: f64 = x[1..].iter().map(|v| v * v).sum();
            let a = -0.5 * ((x[0] - separation).powi(2) + rest);
            let b = -0.5 * ((x[0] + separation).powi(2) + rest);
            log_add_exp(a, b)
        })?
        .with_normalization(log_z))
    }

    /// Constant log-density; every Metropolis ratio equals one.
    pub fn flat(dim: usize, level: f64) -> Result<Self> {
        Self::from_fn("flat", dim, level, move |_| level)
    }

    /// The two-state uniform target `[1/2, 1/2]`, embedded as a constant
    /// density on the real line.
    pub fn toy_uniform() -> Self {
        Self::flat(1, -std::f64::consts::LN_2).expect("dimension is positive")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sup_log_density(&self) -> f64 {
        self.sup_log_density
    }

    /// Log of the normalizing constant, when known.
    pub fn normalization(&self) -> Option<f64> {
        self.normalization
    }
}

impl LogDensity for TargetDensity {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn log_density(&self, x: &[f64]) -> f64 {
        (self.log_fn)(x)
    }
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `π^{1/T}`: the base log-density divided by the temperature.
#[derive(Debug, Clone)]
pub struct TemperedDensity<D = TargetDensity> {
    base: D,
    temperature: f64,
}

impl<D: LogDensity> TemperedDensity<D> {
    pub fn new(base: D, temperature: f64) -> Result<Self> {
        if !(temperature >= 1.0) || !temperature.is_finite() {
            return Err(Error::InvalidInput(format!("temperature must be a finite real >= 1, got {temperature}")));
        }
        Ok(Self { base, temperature })
    }

    pub fn base(&self) -> &D {
        &self.base
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

impl<D: LogDensity> LogDensity for TemperedDensity<D> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    #[inline]
    fn log_density(&self, x: &[f64]) -> f64 {
        let v = self.base.log_density(x);
        if self.temperature == 1.0 {
            v
        } else {
            v / self.temperature
        }
    }
}

/// Lyapunov function `W(x) = (π(x) / sup π)^{-τ}`, always `>= 1`.
#[derive(Debug, Clone)]
pub struct DriftFunction {
    base: TargetDensity,
    exponent: f64,
}

impl DriftFunction {
    pub fn new(base: TargetDensity, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent < 1.0) {
            return Err(Error::InvalidInput(format!("drift exponent must lie in (0, 1), got {exponent}")));
        }
        if !base.sup_log_density().is_finite() {
            return Err(Error::InvalidInput("drift function needs a finite sup_log_density".into()));
        }
        Ok(Self { base, exponent })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn base(&self) -> &TargetDensity {
        &self.base
    }

    /// `W(x)`; `+∞` where the density vanishes.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.value_from_log(self.base.log_density(x))
    }

    /// Like [`DriftFunction::value`], but a vanishing density is an error.
    pub fn checked_value(&self, x: &[f64]) -> Result<f64> {
        let lp = self.base.log_density_at(x)?;
        if lp == f64::NEG_INFINITY {
            return Err(Error::Numeric(format!("drift function is infinite at {x:?}")));
        }
        Ok(self.value_from_log(lp))
    }

    pub fn value_from_log(&self, log_density: f64) -> f64 {
        if log_density == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        (-self.exponent * (log_density - self.base.sup_log_density())).exp()
    }
}
