//! The two-state nonhomogeneous chain on `{0, 1}` with kernel
//! `[[θ, 1−θ], [1−θ, θ]]`.
//!
//! Marginals, mixing times and kernel distances are all closed form, so
//! this module checks the theory without Monte Carlo error. Note that
//! [`toy_tv_to_pi`] reports `|p₀ − 1/2|`, half of the `Σ|Δ|` distance used
//! by [`crate::diagnostics::tv_distance_discrete`].

use std::sync::Arc;

use rand::Rng;

use crate::diagnostics::DiscreteKernelOracle;
use crate::error::{Error, Result};
use crate::samplers::{ChainTrace, MoveKind, Point};

/// The kernel `P_θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyKernel {
    pub theta: f64,
}

impl ToyKernel {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidInput(format!("theta must lie in [0, 1], got {theta}")));
        }
        Ok(Self { theta })
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let t = self.theta;
        [[t, 1.0 - t], [1.0 - t, t]]
    }

    pub fn to_oracle(&self) -> DiscreteKernelOracle {
        let m = self.matrix();
        DiscreteKernelOracle::new(vec![m[0].to_vec(), m[1].to_vec()]).expect("toy kernel is stochastic")
    }

    /// `p · P_θ`.
    pub fn apply(&self, p: DistVec2) -> DistVec2 {
        let t = self.theta;
        DistVec2 { p0: p.p0 * t + p.p1 * (1.0 - t), p1: p.p0 * (1.0 - t) + p.p1 * t }
    }
}

/// Adaptation schedule `n ↦ θ_n`, defined for `n >= 1`.
#[derive(Clone)]
pub enum ToySchedule {
    /// `θ_n = n^{-exponent}`; the default uses exponent `1/4`.
    Power(f64),
    Constant(f64),
    Custom(Arc<dyn Fn(u64) -> f64 + Send + Sync>),
}

impl Default for ToySchedule {
    fn default() -> Self {
        ToySchedule::Power(0.25)
    }
}

impl std::fmt::Debug for ToySchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ToySchedule::Power(a) => write!(f, "Power({a})"),
            ToySchedule::Constant(t) => write!(f, "Constant({t})"),
            ToySchedule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl ToySchedule {
    /// `θ_n` for `n >= 1`.
    pub fn theta(&self, n: u64) -> f64 {
        debug_assert!(n >= 1, "the schedule starts at n = 1");
        match self {
            ToySchedule::Power(a) => (n as f64).powf(-a),
            ToySchedule::Constant(t) => *t,
            ToySchedule::Custom(f) => f(n),
        }
    }
}

/// A distribution on `{0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistVec2 {
    pub p0: f64,
    pub p1: f64,
}

impl DistVec2 {
    pub const UNIFORM: DistVec2 = DistVec2 { p0: 0.5, p1: 0.5 };

    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        if !(p0 >= 0.0 && p1 >= 0.0) || (p0 + p1 - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidInput(format!("({p0}, {p1}) is not a distribution")));
        }
        Ok(Self { p0, p1 })
    }

    pub fn point_mass(state: u8) -> Self {
        if state == 0 {
            DistVec2 { p0: 1.0, p1: 0.0 }
        } else {
            DistVec2 { p0: 0.0, p1: 1.0 }
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.p0, self.p1]
    }
}

/// `init · P_{θ_1} ⋯ P_{θ_n}`.
pub fn toy_exact_marginal(sched: &ToySchedule, init: DistVec2, n: u64) -> DistVec2 {
    (1..=n).fold(init, |p, k| ToyKernel { theta: sched.theta(k) }.apply(p))
}

/// `|p₀(n) − 1/2|`.
pub fn toy_tv_to_pi(sched: &ToySchedule, init: DistVec2, n: u64) -> f64 {
    (toy_exact_marginal(sched, init, n).p0 - 0.5).abs()
}

/// `toy_tv_to_pi` for every `n` in `0..=n_max`, in one pass.
pub fn toy_tv_series(sched: &ToySchedule, init: DistVec2, n_max: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut p = init;
    out.push((p.p0 - 0.5).abs());
    for k in 1..=n_max {
        p = ToyKernel { theta: sched.theta(k) }.apply(p);
        out.push((p.p0 - 0.5).abs());
    }
    out
}

/// `ln ε / ln|1 − 2θ|`.
///
/// `θ = 1/2` mixes in one step and returns the limit of the closed form, 0;
/// `θ ∈ {0, 1}` is reducible and returns `+∞`.
pub fn toy_mixing_time(theta: f64, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidInput(format!("theta must lie in [0, 1], got {theta}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    if theta == 0.0 || theta == 1.0 {
        return Ok(f64::INFINITY);
    }
    if theta == 0.5 {
        return Ok(0.0);
    }
    Ok(eps.ln() / (1.0 - 2.0 * theta).abs().ln())
}

/// `sup_x ‖P_θ(x,·) − P_θ'(x,·)‖ = 2|θ − θ'|`.
pub fn toy_adaptation_distance(theta: f64, theta_prime: f64) -> f64 {
    2.0 * (theta - theta_prime).abs()
}

/// Simulates `X_{n+1} ~ P_{θ_{n+1}}(X_n, ·)` for `steps` transitions. The
/// trace holds `X_1, …, X_steps` as one-dimensional points `0.0` / `1.0`.
pub fn run_toy_chain<R: Rng + ?Sized>(sched: &ToySchedule, x0: u8, steps: u64, rng: &mut R) -> Result<ChainTrace> {
    if x0 > 1 {
        return Err(Error::InvalidInput(format!("toy state must be 0 or 1, got {x0}")));
    }
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be at least 1".into()));
    }
    let mut trace = ChainTrace::with_capacity(steps as usize, 1);
    let mut x = x0;
    for n in 1..=steps {
        let theta = sched.theta(n);
        let u: f64 = rng.gen();
        if u >= theta {
            x = 1 - x;
        }
        trace.push(Point::from_element(1, x as f64), true, MoveKind::Local);
    }
    Ok(trace)
}
