//! Random-walk Metropolis, Adaptive Metropolis and interacting tempering.
//!
//! Every sampler threads an explicit RNG, so runs are reproducible given
//! the seeds of their [`RngStream`](crate::rng::RngStream)s.

mod am;
mod it;
mod measure;
mod rwm;
mod trace;

pub use am::{am_proposal_cov, am_update, run_am, AdaptiveState, AmConfig, AmSampler, AM_SCALE};
pub use it::{interaction_move, it_acceptance, it_step, ladder_streams, run_it_ladder, ItLadder, ItMove, LadderConfig};
pub use measure::{AtomIndex, EmpiricalMeasure};
pub use rwm::{metropolis_accept, run_rwm, rwm_step, rwm_step_cov, Proposal};
pub use trace::{ChainTrace, MoveKind};

/// A point of the state space.
pub type Point = nalgebra::DVector<f64>;
