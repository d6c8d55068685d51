//! Batch front-end for the `adaptmc` samplers: TOML run configurations in,
//! deterministic CSV traces and key-value summaries out.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod config;
pub mod output;
pub mod run;

pub use config::{Command, ConfigError, RunConfig};
pub use run::{run, RunError};
