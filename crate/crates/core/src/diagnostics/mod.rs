//! Runnable numerical checks for adaptive chains.
//!
//! Distances on discrete spaces use the convention
//! `‖μ − ν‖ = sup_{|f| ≤ 1} |μ(f) − ν(f)| = Σ|μ_i − ν_i|`, so two distinct
//! point masses are at distance 2.

mod distance;
mod drift;
mod ergodic;
mod marginal;
mod oracle;

pub use distance::{
    am_adaptation_series, dv_bound_am, empirical_bound_violation, kernel_tv_sup, tv_distance_discrete,
    AdaptationSeries, DiscreteKernelOracle,
};
pub use drift::{estimate_drift, estimate_drift_exact, fit_drift_at, DriftEstimate, DRIFT_BAND_Z, DRIFT_LAMBDA_GRID};
pub use ergodic::{batch_means, ergodic_average, ergodic_average_values, ErgodicReport};
pub use marginal::{
    ks_critical_value, ks_statistic, ks_two_sample, marginal_convergence_test, null_ks_floor, MarginalCheckpoint,
    Reference,
};
pub use oracle::{
    brute_force_it_kernel, detailed_balance_max_err, it_invariance_check, metropolis_kernel, pi_invariance_max_abs_err,
    tempered_distribution, ItInvarianceReport,
};
