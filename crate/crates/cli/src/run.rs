//! Dispatch of a validated [`RunConfig`] to the samplers and diagnostics.

use std::path::{Path, PathBuf};
use std::time::Instant;

use adaptmc::diagnostics::{
    empirical_bound_violation, estimate_drift, estimate_drift_exact, it_invariance_check, ItInvarianceReport,
};
use adaptmc::samplers::{run_am, run_it_ladder, rwm_step, AmConfig, ItLadder, Point, Proposal};
use adaptmc::target::{DriftFunction, LogDensity};
use adaptmc::toy::{
    run_toy_chain, toy_adaptation_distance, toy_mixing_time, toy_tv_series, DistVec2, ToyKernel, ToySchedule,
};
use adaptmc::RngStream;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Check, Command, ConfigError, RunConfig};
use crate::output::{fmt_f64, with_suffix, write_table, write_trace, Summary};

/// Role offset for diagnose check streams, clear of the ladder's roles.
const CHECK_ROLE: u64 = 1 << 19;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage {stage}: {source}")]
    Module { stage: String, source: adaptmc::Error },
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn stage(name: &str, replicate: usize) -> impl Fn(adaptmc::Error) -> RunError + '_ {
    move |source| RunError::Module { stage: format!("{name} (replicate {replicate})"), source }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

/// Output prefix of replicate `r`.
pub fn replicate_prefix(prefix: &Path, replicates: usize, r: usize) -> PathBuf {
    if replicates == 1 {
        prefix.to_path_buf()
    } else {
        with_suffix(prefix, &format!(".rep{r}"))
    }
}

/// Base random stream of replicate `r`.
pub fn replicate_stream(seed: u64, r: usize) -> RngStream {
    RngStream::new(seed, 0).derive(r as u64, 0)
}

/// Runs every replicate (in parallel) and returns the paths of the summary
/// files, in replicate order.
pub fn run(cfg: &RunConfig, prefix: &Path) -> Result<Vec<PathBuf>, RunError> {
    cfg.validate()?;
    let hash = cfg.hash();
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let started = Instant::now();
            let p = replicate_prefix(prefix, cfg.replicates, r);
            let stream = replicate_stream(cfg.seed, r);
            let mut summary = Summary::default();
            summary.push("command", cfg.command());
            summary.push("seed", cfg.seed);
            summary.push("replicate", r);
            summary.push("config_hash", &hash);
            summary.push("steps", cfg.steps);
            summary.push("burn_in", cfg.burn_in);
            summary.push("thinning", cfg.thinning);
            match cfg.command() {
                Command::RunAm => run_am_cmd(cfg, &p, stream, r, &mut summary)?,
                Command::RunIt => run_it_cmd(cfg, &p, stream, r, &mut summary)?,
                Command::Toy => run_toy_cmd(cfg, &p, stream, r, &mut summary)?,
                Command::Diagnose => run_diagnose_cmd(cfg, &p, stream, r, &mut summary)?,
            }
            summary.push_f64("wall_time_s", started.elapsed().as_secs_f64());
            let path = with_suffix(&p, ".summary.txt");
            summary.write(&path).map_err(io(&path))?;
            log::info!("replicate {r} done: {}", path.display());
            Ok(path)
        })
        .collect()
}

fn coordinate_means(states: &[Point]) -> Vec<f64> {
    let d = states.first().map_or(0, |x| x.len());
    let mut sums = vec![0.0; d];
    for x in states {
        for (s, v) in sums.iter_mut().zip(x.iter()) {
            *s += v;
        }
    }
    sums.into_iter().map(|s| s / states.len() as f64).collect()
}

fn run_am_cmd(cfg: &RunConfig, p: &Path, stream: RngStream, r: usize, s: &mut Summary) -> Result<(), RunError> {
    let am = cfg.am.as_ref().expect("validated");
    let target = cfg.target.as_ref().expect("validated").build()?;
    let x0 = cfg.am_x0()?;
    let amc = AmConfig {
        kappa: am.kappa,
        gamma0: cfg.am_gamma0()?,
        steps: cfg.steps,
        burn_in: cfg.burn_in,
        snapshot_every: am.snapshot_every,
    };
    let trace = run_am(&target, &x0, &amc, stream).map_err(stage("run-am", r))?;
    let path = with_suffix(p, ".csv");
    write_trace(&path, &trace, cfg.thinning, 0).map_err(io(&path))?;
    if !trace.param_snapshots.is_empty() {
        let d = x0.len();
        let mut header = String::from("step,min_eigenvalue");
        for i in 0..d {
            header.push_str(&format!(",mean_{i}"));
        }
        for i in 0..d {
            for j in 0..d {
                header.push_str(&format!(",gamma_{i}_{j}"));
            }
        }
        let rows: Vec<Vec<String>> = trace
            .param_snapshots
            .iter()
            .map(|(step, st)| {
                let mut row = vec![step.to_string(), fmt_f64(st.min_eigenvalue())];
                row.extend(st.mean.iter().map(|v| fmt_f64(*v)));
                for i in 0..d {
                    for j in 0..d {
                        row.push(fmt_f64(st.cov[(i, j)]));
                    }
                }
                row
            })
            .collect();
        let path = with_suffix(p, ".params.csv");
        write_table(&path, &header, &rows).map_err(io(&path))?;
    }
    s.push_f64("acceptance_rate", trace.acceptance_rate());
    for (i, m) in coordinate_means(&trace.states).into_iter().enumerate() {
        s.push_f64(format!("mean_x_{i}"), m);
    }
    Ok(())
}

fn run_it_cmd(cfg: &RunConfig, p: &Path, stream: RngStream, r: usize, s: &mut Summary) -> Result<(), RunError> {
    let target = cfg.target.as_ref().expect("validated").build()?;
    let (ladder, x0) = cfg.ladder()?;
    let traces = run_it_ladder(&ladder, &target, &x0, stream).map_err(stage("run-it", r))?;
    for (k, trace) in traces.iter().enumerate() {
        let path = with_suffix(p, &format!(".level{}.csv", k + 1));
        write_trace(&path, trace, cfg.thinning, 0).map_err(io(&path))?;
    }
    for (k, trace) in traces.iter().enumerate() {
        s.push_f64(format!("acceptance_rate_level{}", k + 1), trace.acceptance_rate());
        s.push_f64(format!("interaction_rate_level{}", k + 1), trace.interaction_rate());
    }
    for (i, m) in coordinate_means(&traces[0].states).into_iter().enumerate() {
        s.push_f64(format!("mean_x_{i}_level1"), m);
    }
    s.push("sign_changes_x_0_level1", traces[0].sign_changes(0));
    Ok(())
}

fn toy_schedule(cfg: &RunConfig) -> ToySchedule {
    let toy = cfg.toy_section();
    match toy.constant_theta {
        Some(t) => ToySchedule::Constant(t),
        None => ToySchedule::Power(toy.schedule_exponent),
    }
}

fn run_toy_cmd(cfg: &RunConfig, p: &Path, stream: RngStream, r: usize, s: &mut Summary) -> Result<(), RunError> {
    let toy = cfg.toy_section();
    let sched = toy_schedule(cfg);
    let mut rng = stream.rng();
    let trace = run_toy_chain(&sched, toy.x0, cfg.steps as u64, &mut rng).map_err(stage("toy", r))?;
    let path = with_suffix(p, ".csv");
    write_trace(&path, &trace, cfg.thinning, cfg.burn_in).map_err(io(&path))?;

    let tv = toy_tv_series(&sched, DistVec2::point_mass(toy.x0), cfg.steps as u64);
    let mut rows = Vec::new();
    let mut final_m = f64::NAN;
    for (n, tv_n) in tv.iter().enumerate().skip(1) {
        let theta = sched.theta(n as u64);
        let m = toy_mixing_time(theta, toy.epsilon).map_err(stage("toy", r))?;
        final_m = m;
        if n.is_multiple_of(cfg.thinning) {
            rows.push(vec![n.to_string(), fmt_f64(theta), fmt_f64(*tv_n), fmt_f64(m)]);
        }
    }
    let path = with_suffix(p, ".exact.csv");
    write_table(&path, "n,theta,tv_exact,mixing_time", &rows).map_err(io(&path))?;

    let recorded = &trace.states[cfg.burn_in..];
    let ones = recorded.iter().filter(|x| x[0] == 1.0).count();
    s.push_f64("fraction_state_1", ones as f64 / recorded.len() as f64);
    s.push_f64("tv_exact_final", tv[cfg.steps]);
    s.push_f64("mixing_time_final", final_m);
    Ok(())
}

fn random_distribution<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

fn run_diagnose_cmd(cfg: &RunConfig, p: &Path, stream: RngStream, r: usize, s: &mut Summary) -> Result<(), RunError> {
    let d = cfg.diagnose.as_ref().expect("validated");
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut row = |check: &str, item: String, metric: &str, value: f64| {
        rows.push(vec![check.to_string(), item, metric.to_string(), fmt_f64(value)]);
    };
    for (c, check) in d.checks.iter().enumerate() {
        let check_stream = stream.derive(0, CHECK_ROLE + c as u64);
        match check {
            Check::PiInvariance => {
                let mut rng = check_stream.rng();
                let mut worst =
                    ItInvarianceReport { pi_invariance: 0.0, interaction_balance: 0.0, kernel_balance: 0.0 };
                for i in 0..d.instances {
                    let pi = random_distribution(d.states, &mut rng);
                    let rep = it_invariance_check(&pi, d.temperature, d.upsilon)
                        .map_err(stage("diagnose pi-invariance", r))?;
                    row("pi-invariance", i.to_string(), "pi_invariance_abs_err", rep.pi_invariance);
                    row("pi-invariance", i.to_string(), "interaction_balance_abs_err", rep.interaction_balance);
                    row("pi-invariance", i.to_string(), "kernel_balance_abs_err", rep.kernel_balance);
                    worst.pi_invariance = worst.pi_invariance.max(rep.pi_invariance);
                    worst.interaction_balance = worst.interaction_balance.max(rep.interaction_balance);
                    worst.kernel_balance = worst.kernel_balance.max(rep.kernel_balance);
                }
                s.push_f64("pi_invariance_max_abs_err", worst.pi_invariance);
                s.push_f64("interaction_balance_max_abs_err", worst.interaction_balance);
                s.push_f64("kernel_balance_max_abs_err", worst.kernel_balance);
                s.push("pi_invariance_pass", worst.max() <= 1e-12);
            }
            Check::Toy => {
                let sched = ToySchedule::default();
                let tv = toy_tv_series(&sched, DistVec2::point_mass(0), cfg.steps as u64);
                let mut monotone = true;
                let mut max_scaled_distance: f64 = 0.0;
                for n in 1..=cfg.steps {
                    if n > 10 && tv[n] > tv[n - 1] {
                        monotone = false;
                    }
                    let dist = toy_adaptation_distance(sched.theta(n as u64 + 1), sched.theta(n as u64));
                    max_scaled_distance = max_scaled_distance.max(n as f64 * dist);
                }
                let mut n = 1;
                while n <= cfg.steps {
                    row("toy", n.to_string(), "tv_exact", tv[n]);
                    let m = toy_mixing_time(sched.theta(n as u64), 0.1).map_err(stage("diagnose toy", r))?;
                    row("toy", n.to_string(), "mixing_time", m);
                    n *= 10;
                }
                s.push_f64("toy_tv_exact_final", tv[cfg.steps]);
                s.push("toy_tv_nonincreasing_after_10", monotone);
                s.push_f64("toy_max_n_times_adaptation_distance", max_scaled_distance);
            }
            Check::Drift => {
                let target = cfg.target.as_ref().expect("validated").build()?;
                let dim = target.dim();
                let w = DriftFunction::new(target.clone(), d.drift_tau).map_err(stage("diagnose drift", r))?;
                let points: Vec<Point> = match &d.drift_points {
                    Some(pts) => pts.iter().map(|v| Point::from_column_slice(v)).collect(),
                    None => [0.0, 1.0, -1.0, 3.0, -3.0]
                        .iter()
                        .map(|a| {
                            let mut x = Point::zeros(dim);
                            x[0] = *a;
                            x
                        })
                        .collect(),
                };
                let proposal = Proposal::isotropic(dim, d.drift_proposal_sd).map_err(stage("diagnose drift", r))?;
                let mut rng = check_stream.rng();
                let est = estimate_drift(
                    |x, rng| rwm_step(x, &proposal, &target, rng).map(|(y, _)| y),
                    &w,
                    &points,
                    d.drift_mc_reps,
                    &mut rng,
                )
                .map_err(stage("diagnose drift", r))?;
                for (i, _) in est.test_points.iter().enumerate() {
                    row("drift", i.to_string(), "w", est.w[i]);
                    row("drift", i.to_string(), "pw_hat", est.pw_hat[i]);
                    row("drift", i.to_string(), "pw_upper", est.pw_upper[i]);
                }
                s.push_f64("drift_lambda_hat", est.lambda_hat);
                s.push_f64("drift_b_hat", est.b_hat);
                s.push("drift_degenerate", est.degenerate);
                s.push("drift_satisfied", est.is_satisfied());
            }
            Check::DriftExact => {
                let kernel = ToyKernel::new(d.drift_toy_theta).map_err(stage("diagnose drift-exact", r))?.to_oracle();
                let est =
                    estimate_drift_exact(&kernel, &[1.0, 2.0], &[0, 1]).map_err(stage("diagnose drift-exact", r))?;
                for i in 0..2 {
                    row("drift-exact", i.to_string(), "pw", est.pw_hat[i]);
                }
                s.push_f64("drift_exact_lambda_hat", est.lambda_hat);
                s.push_f64("drift_exact_b_hat", est.b_hat);
            }
            Check::EmpiricalBound => {
                let target = cfg.target.as_ref().expect("validated").build()?;
                let (ladder_cfg, x0) = cfg.ladder()?;
                let mut ladder =
                    ItLadder::new(ladder_cfg, &target, &x0, stream).map_err(stage("diagnose empirical-bound", r))?;
                for _ in 0..cfg.steps {
                    ladder.sweep().map_err(stage("diagnose empirical-bound", r))?;
                }
                let spacing = cfg.steps / (2 * d.bound_grid);
                let grid: Vec<usize> = (1..=d.bound_grid).map(|k| k * spacing).collect();
                let mut worst = f64::NEG_INFINITY;
                for k in 0..ladder.config().levels() {
                    let v = empirical_bound_violation(ladder.history(k), &grid, &grid)
                        .map_err(stage("diagnose empirical-bound", r))?;
                    row("empirical-bound", format!("level{}", k + 1), "max_violation", v);
                    worst = worst.max(v);
                }
                s.push_f64("empirical_bound_max_violation", worst);
                s.push("empirical_bound_pass", worst <= 1e-12);
            }
        }
    }
    let path = with_suffix(p, ".csv");
    write_table(&path, "check,item,metric,value", &rows).map_err(io(&path))?;
    Ok(())
}
