//! Adaptive MCMC samplers and convergence diagnostics.
//!
//! * [`target`]: log-densities, tempering and drift functions.
//! * [`samplers`]: random-walk Metropolis, Adaptive Metropolis and the
//!   K-level interacting tempering ladder.
//! * [`toy`]: the two-state nonhomogeneous chain with exact marginals.
//! * [`diagnostics`]: distances, drift estimation, brute-force kernels,
//!   ergodic averages and marginal convergence statistics.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod diagnostics;
pub mod error;
pub mod rng;
pub mod samplers;
pub mod target;
pub mod toy;

pub use error::{Error, Result};
pub use rng::RngStream;
