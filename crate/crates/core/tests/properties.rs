use adaptmc::diagnostics::*;
use adaptmc::samplers::*;
use adaptmc::target::*;
use adaptmc::toy::{toy_adaptation_distance, ToyKernel};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    })
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-8.0f64..8.0, d)
}

proptest! {
    #[test]
    fn tempering_composes(x in point(2), t1 in 1.0f64..20.0, t2 in 1.0f64..20.0) {
        let base = TargetDensity::bimodal_mixture(2, 3.0).unwrap();
        let nested = TemperedDensity::new(TemperedDensity::new(base.clone(), t1).unwrap(), t2).unwrap();
        let flat = TemperedDensity::new(base, t1 * t2).unwrap();
        let (a, b) = (nested.log_density(&x), flat.log_density(&x));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    #[test]
    fn drift_is_at_least_one(x in point(3), tau in 0.01f64..0.99) {
        for t in [
            TargetDensity::standard_gaussian(3).unwrap(),
            TargetDensity::bimodal_mixture(3, 5.0).unwrap(),
            TargetDensity::gaussian(Point::from_vec(vec![1.0, 0.0, -1.0]), DMatrix::from_diagonal_element(3, 3, 2.0)).unwrap(),
        ] {
            let w = DriftFunction::new(t, tau).unwrap();
            prop_assert!(w.value(&x) >= 1.0);
        }
        let w = DriftFunction::new(TargetDensity::toy_uniform(), tau).unwrap();
        prop_assert_eq!(w.value(&x[..1]), 1.0);
    }

    #[test]
    fn drift_is_monotone_in_density(a in -50.0f64..0.0, b in -50.0f64..0.0) {
        let w = DriftFunction::new(TargetDensity::standard_gaussian(1).unwrap(), 0.4).unwrap();
        if a <= b {
            prop_assert!(w.value_from_log(a) >= w.value_from_log(b));
        }
    }

    #[test]
    fn am_covariance_stays_symmetric_above_kappa(
        xs in prop::collection::vec(point(3), 1..60),
        kappa in 0.001f64..2.0,
    ) {
        let mut s = AdaptiveState::new(kappa, DMatrix::zeros(3, 3)).unwrap();
        for x in &xs {
            s.update(&Point::from_vec(x.clone())).unwrap();
            let asym = (&s.cov - s.cov.transpose()).abs().max();
            prop_assert!(asym <= 1e-12);
            prop_assert!(s.min_eigenvalue() >= kappa - 1e-9);
        }
        let mean = xs.iter().fold(Point::zeros(3), |a, x| a + Point::from_vec(x.clone())) / xs.len() as f64;
        for i in 0..3 {
            prop_assert!((s.mean[i] - mean[i]).abs() <= 1e-10 * mean[i].abs().max(1.0));
        }
    }

    #[test]
    fn it_acceptance_detailed_balance(x in -6.0f64..6.0, y in -6.0f64..6.0, t in 1.01f64..30.0) {
        let pi = TargetDensity::bimodal_mixture(1, 2.0).unwrap();
        let beta = 1.0 - 1.0 / t;
        let (px, py) = (Point::from_element(1, x), Point::from_element(1, y));
        let (lx, ly) = (pi.log_density(&[x]), pi.log_density(&[y]));
        // π(x) π^{1/T}(y) α(x, y) = π(y) π^{1/T}(x) α(y, x), in logs
        let lhs = lx + ly / t + it_acceptance(&px, &py, &pi, beta).unwrap().ln();
        let rhs = ly + lx / t + it_acceptance(&py, &px, &pi, beta).unwrap().ln();
        let both = (lx + ly / t).min(ly + lx / t);
        prop_assert!((lhs.exp() - rhs.exp()).abs() <= 1e-12 * both.exp());
        prop_assert!((lhs - both).abs() <= 1e-12 * both.abs().max(1.0));
    }

    #[test]
    fn toy_kernel_distance_is_twice_theta_gap(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let d = kernel_tv_sup(&ToyKernel::new(a).unwrap().to_oracle(), &ToyKernel::new(b).unwrap().to_oracle()).unwrap();
        prop_assert!((d - toy_adaptation_distance(a, b)).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn tv_distance_is_a_metric_in_range(p in distribution(6), q in distribution(6), r in distribution(6)) {
        let pq = tv_distance_discrete(&p, &q).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&pq));
        prop_assert!((pq - tv_distance_discrete(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert!(pq <= tv_distance_discrete(&p, &r).unwrap() + tv_distance_discrete(&r, &q).unwrap() + 1e-12);
    }

    #[test]
    fn empirical_measures_move_by_at_most_two_m_over_total(
        values in prop::collection::vec(0u8..6, 2..80),
    ) {
        // small alphabet forces repeated atoms
        let mut h = EmpiricalMeasure::new();
        for v in &values {
            h.push(Point::from_element(1, *v as f64));
        }
        let atoms = h.atoms();
        let total = values.len();
        for n in 0..total - 1 {
            for m in 1..total - n {
                let tv = atoms.prefix_tv(n + 1, n + m + 1);
                prop_assert!(tv <= 2.0 * m as f64 / (n + m + 1) as f64 + 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn it_kernel_rows_sum_to_one(
        pi in distribution(5),
        theta in distribution(5),
        upsilon in 0.0f64..=1.0,
        beta in 0.0f64..=1.0,
    ) {
        let q = DMatrix::from_element(5, 5, 0.2);
        let local = metropolis_kernel(&pi, &q).unwrap();
        let k = brute_force_it_kernel(&pi, &theta, &local, upsilon, beta).unwrap();
        for row in k.matrix().row_iter() {
            prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn limiting_interaction_kernel_is_reversible(pi in distribution(5), t in 1.01f64..50.0) {
        let theta_star = tempered_distribution(&pi, t);
        let q = DMatrix::from_element(5, 5, 0.2);
        let local = metropolis_kernel(&pi, &q).unwrap();
        let k = brute_force_it_kernel(&pi, &theta_star, &local, 1.0, 1.0 - 1.0 / t).unwrap();
        prop_assert!(detailed_balance_max_err(&pi, &k) <= 1e-12);
        let r = it_invariance_check(&pi, t, 0.3).unwrap();
        prop_assert!(r.max() <= 1e-12);
    }
}
