use adaptmc::diagnostics::{brute_force_it_kernel, ergodic_average, metropolis_kernel};
use adaptmc::samplers::*;
use adaptmc::target::{LogDensity, TargetDensity, TemperedDensity};
use adaptmc::RngStream;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn p(v: f64) -> Point {
    Point::from_element(1, v)
}

#[test]
fn rwm_acceptance_rate_matches_independent_long_run() {
    let t = TargetDensity::standard_gaussian(1).unwrap();
    let prop = Proposal::isotropic(1, 2.38).unwrap();

    // start from stationarity: x0 drawn from the target
    let mut init = RngStream::new(100, 9).rng();
    let x0 = p(init.sample(StandardNormal));
    let run = run_rwm(&t, &x0, &prop, 100_000, 0, RngStream::new(1, 0)).unwrap();
    let rate = run.acceptance_rate();
    let acc: Vec<f64> = run.accepted.iter().map(|&a| a as u8 as f64).collect();
    let se = adaptmc::diagnostics::batch_means(&acc).0;

    let oracle = run_rwm(&t, &x0, &prop, 1_000_000, 0, RngStream::new(777, 3)).unwrap().acceptance_rate();
    assert!((rate - oracle).abs() <= 3.0 * se, "rate {rate} oracle {oracle} se {se}");
    // closed form for a Gaussian target: (2/π) atan(2/s)
    let closed = 2.0 / std::f64::consts::PI * (2.0f64 / 2.38).atan();
    assert!((oracle - closed).abs() < 3e-3, "{oracle} vs {closed}");
}

#[test]
fn am_update_learns_iid_covariance() {
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
    let l = sigma.clone().cholesky().unwrap().l();
    let kappa = 0.05;
    let mut rng = RngStream::new(3, 0).rng();
    let mut state = AdaptiveState::new(kappa, DMatrix::zeros(2, 2)).unwrap();
    let mut draws = Vec::new();
    for _ in 0..100_000 {
        let z = Point::from_iterator(2, (0..2).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = &l * z;
        state.update(&x).unwrap();
        draws.push(x);
    }
    let n = draws.len() as f64;
    let mean = draws.iter().fold(Point::zeros(2), |a, x| a + x) / n;
    let mut batch = DMatrix::zeros(2, 2);
    for x in &draws {
        let d = x - &mean;
        batch += &d * d.transpose();
    }
    let oracle = batch / n + DMatrix::identity(2, 2) * kappa;
    let rel = (&state.cov - &oracle).norm() / oracle.norm();
    assert!(rel < 5e-3, "{rel}");
    assert!((&state.mean - &mean).norm() < 1e-10);
    let truth = &sigma + DMatrix::identity(2, 2) * kappa;
    assert!((&state.cov - &truth).norm() / truth.norm() < 0.03);
}

#[test]
fn run_am_is_bit_reproducible() {
    let t = TargetDensity::standard_gaussian(1).unwrap();
    let cfg = AmConfig { kappa: 0.1, gamma0: DMatrix::zeros(1, 1), steps: 5_000, burn_in: 100, snapshot_every: 250 };
    let a = run_am(&t, &p(1.0), &cfg, RngStream::new(42, 0)).unwrap();
    let b = run_am(&t, &p(1.0), &cfg, RngStream::new(42, 0)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 4_900);
    assert_eq!(a.param_snapshots.len(), 20);
    let c = run_am(&t, &p(1.0), &cfg, RngStream::new(43, 0)).unwrap();
    assert_ne!(a.states, c.states);
}

#[test]
fn am_mean_is_the_arithmetic_mean_of_the_chain() {
    let t = TargetDensity::bimodal_mixture(2, 1.5).unwrap();
    let cfg =
        AmConfig { kappa: 0.1, gamma0: DMatrix::identity(2, 2), steps: 20_000, burn_in: 0, snapshot_every: 20_000 };
    let trace = run_am(&t, &Point::zeros(2), &cfg, RngStream::new(8, 0)).unwrap();
    let mean = trace.states.iter().fold(Point::zeros(2), |a, x| a + x) / trace.len() as f64;
    let learned = &trace.param_snapshots[0].1.mean;
    for i in 0..2 {
        assert!((learned[i] - mean[i]).abs() <= 1e-10 * mean[i].abs().max(1.0));
    }
}

#[test]
fn am_covariance_learning_on_anisotropic_gaussian() {
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
    let kappa = 0.01;
    let t = TargetDensity::gaussian(Point::zeros(2), sigma.clone()).unwrap();
    let cfg = AmConfig { kappa, gamma0: DMatrix::identity(2, 2), steps: 200_000, burn_in: 0, snapshot_every: 200_000 };
    let trace = run_am(&t, &Point::zeros(2), &cfg, RngStream::new(5, 0)).unwrap();
    let truth = &sigma + DMatrix::identity(2, 2) * kappa;
    let gamma = &trace.param_snapshots[0].1.cov;
    assert!((gamma - &truth).norm() / truth.norm() < 0.15);

    // ergodic mean of the first coordinate within three batch-means errors
    let report = ergodic_average(&trace, |x| x[0], Some(0.0)).unwrap();
    assert!(report.final_abs_error.unwrap() <= 3.0 * report.std_error, "{report:?}");
}

/// Embeds the states `0, 1, 2` in the real line with a lookup log-density.
fn three_state_target(pi: [f64; 3]) -> TargetDensity {
    TargetDensity::from_fn("three-state", 1, 0.0, move |x| {
        let i = x[0] as usize;
        pi[i].ln()
    })
    .unwrap()
}

/// Largest `u` accepted by `interaction_move`, by bisection on the black box.
fn acceptance_measure(x: &Point, hist: &[Point], t: &TargetDensity, beta: f64, idx: usize) -> f64 {
    let accepts = |u: f64| interaction_move(x, hist, t, beta, u, idx).unwrap().1;
    if accepts(1.0 - f64::EPSILON) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if accepts(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn interaction_branch_matches_brute_force_kernel_on_three_states() {
    let pi = [0.2, 0.5, 0.3];
    let t = three_state_target(pi);
    let temperature = 3.0;
    let beta = 1.0 - 1.0 / temperature;
    let upsilon = 0.35;
    let hist: Vec<Point> = [0.0, 2.0, 2.0, 1.0, 2.0].iter().map(|v| p(*v)).collect();
    let mut theta = [0.0; 3];
    for h in &hist {
        theta[h[0] as usize] += 1.0 / hist.len() as f64;
    }
    let q = DMatrix::from_element(3, 3, 1.0 / 3.0);
    let local = metropolis_kernel(&pi, &q).unwrap();
    let expected = brute_force_it_kernel(&pi, &theta, &local, upsilon, beta).unwrap();

    for x in 0..3 {
        // enumerate: local branch with probability 1 − υ, otherwise each
        // history entry with probability 1/h, accepted on a set of measure a
        let mut row = local.row(x).iter().map(|v| v * (1.0 - upsilon)).collect::<Vec<_>>();
        for idx in 0..hist.len() {
            let a = acceptance_measure(&p(x as f64), &hist, &t, beta, idx);
            let z = hist[idx][0] as usize;
            let w = upsilon / hist.len() as f64;
            row[z] += w * a;
            row[x] += w * (1.0 - a);
        }
        for (y, v) in row.iter().enumerate() {
            assert!(
                (v - expected.matrix()[(x, y)]).abs() < 1e-12,
                "row {x} col {y}: {v} vs {}",
                expected.matrix()[(x, y)]
            );
        }
    }
}

#[test]
fn it_step_uses_one_uniform_for_the_branch() {
    let t = TargetDensity::standard_gaussian(1).unwrap();
    let level = TemperedDensity::new(t, 1.0).unwrap();
    let prop = Proposal::isotropic(1, 1.0).unwrap();
    let hist = vec![p(0.0)];
    let upsilon = 0.4;
    for seed in 0..200 {
        let mut peek = RngStream::new(seed, 1).rng();
        let branch: f64 = peek.gen();
        let mut ir = RngStream::new(seed, 1).rng();
        let mut lr = RngStream::new(seed, 0).rng();
        let mv = it_step(&p(2.0), &hist, &prop, &level, 0.5, upsilon, &mut ir, &mut lr).unwrap();
        let expect = if branch < upsilon { MoveKind::Interaction } else { MoveKind::Local };
        assert_eq!(mv.kind, expect);
        if mv.kind == MoveKind::Interaction {
            // moving from 2 toward the mode is uphill
            assert!(mv.accepted);
            assert_eq!(mv.point, p(0.0));
        }
    }
}

fn mixture_ladder(temps: &[f64], sds: &[f64], upsilon: f64, steps: usize) -> LadderConfig {
    LadderConfig {
        temperatures: temps.to_vec(),
        upsilon,
        proposal_covs: sds.iter().map(|s| DMatrix::from_element(1, 1, s * s)).collect(),
        steps,
        burn_in: 0,
    }
}

#[test]
fn vanishing_interaction_reproduces_plain_srwm() {
    let t = TargetDensity::bimodal_mixture(1, 5.0).unwrap();
    let cfg = mixture_ladder(&[1.0, 8.0], &[1.0, 4.0], 1e-9, 1_000);
    let stream = RngStream::new(12, 0);
    let traces = run_it_ladder(&cfg, &t, &[p(5.0), p(-5.0)], stream).unwrap();
    assert!(traces[0].move_kind.iter().all(|k| *k == MoveKind::Local));
    let (local, _) = ladder_streams(stream, 0);
    let plain = run_rwm(&t, &p(5.0), &Proposal::isotropic(1, 1.0).unwrap(), 1_000, 0, local).unwrap();
    assert_eq!(traces[0].states, plain.states);
    assert_eq!(traces[0].accepted, plain.accepted);
}

#[test]
fn interacting_tempering_crosses_modes_where_srwm_cannot() {
    // counts validated over seeds 0..10: IT records ~6.6e3 sign changes,
    // the plain chain at most 1
    let t = TargetDensity::bimodal_mixture(1, 5.0).unwrap();
    let cfg = mixture_ladder(&[1.0, 8.0], &[1.0, 4.0], 0.3, 100_000);
    let stream = RngStream::new(0, 0);
    let traces = run_it_ladder(&cfg, &t, &[p(5.0), p(5.0)], stream).unwrap();
    assert_eq!(traces.len(), 2);
    assert!(traces[0].sign_changes(0) >= 50);
    let plain = run_rwm(&t, &p(5.0), &Proposal::isotropic(1, 1.0).unwrap(), 100_000, 0, stream).unwrap();
    assert!(plain.sign_changes(0) < 5);
    assert!(traces[0].interaction_rate() > 0.25 && traces[0].interaction_rate() < 0.35);
    assert_eq!(traces[1].interaction_rate(), 0.0);
}

#[test]
fn ladder_burn_in_and_trace_lengths() {
    let t = TargetDensity::standard_gaussian(2).unwrap();
    let cfg = LadderConfig {
        temperatures: vec![1.0, 2.0, 5.0],
        upsilon: 0.2,
        proposal_covs: vec![DMatrix::identity(2, 2); 3],
        steps: 300,
        burn_in: 50,
    };
    let x0 = vec![Point::zeros(2); 3];
    let traces = run_it_ladder(&cfg, &t, &x0, RngStream::new(1, 0)).unwrap();
    for tr in &traces {
        assert_eq!(tr.len(), 250);
        assert_eq!(tr.accepted.len(), 250);
        assert_eq!(tr.move_kind.len(), 250);
        assert_eq!(tr.step_offset, 51);
    }
    let again = run_it_ladder(&cfg, &t, &x0, RngStream::new(1, 0)).unwrap();
    assert_eq!(traces, again);
    assert!(run_it_ladder(&cfg, &t, &x0[..2], RngStream::new(1, 0)).is_err());
    assert_eq!(t.dim(), 2);
}
