use std::f64::consts::PI;

use brw_core::criticality::{self, RecurrenceBasis};
use brw_core::quadrature::periodic_trapezoid;
use brw_core::spectral::{self, DeltaSystem};
use brw_core::{find_spectral_solution, ModelParams, SpectralOptions, TruncatedOperator};
use proptest::prelude::*;

fn fast_opts() -> SpectralOptions {
    SpectralOptions {
        scan_points: 2_000,
        ..SpectralOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zeta_lambda_bijection(zeta in 1e-6f64..0.999_999, kappa in 0.01f64..50.0) {
        let lambda = spectral::zeta_to_lambda(zeta, kappa).unwrap();
        let back = spectral::lambda_to_zeta(lambda, kappa).unwrap();
        prop_assert!((back - zeta).abs() <= 1e-12 * zeta);
    }

    #[test]
    fn zeta_to_lambda_is_decreasing(z1 in 0.01f64..0.98, dz in 1e-4f64..0.01, kappa in 0.1f64..10.0) {
        let a = spectral::zeta_to_lambda(z1, kappa).unwrap();
        let b = spectral::zeta_to_lambda(z1 + dz, kappa).unwrap();
        prop_assert!(a > b && b > 0.0);
    }

    #[test]
    fn poisson_integral_against_quadrature(
        n in -20i64..=20,
        b in 0.05f64..5.0,
        ratio in 1.001f64..100.0,
    ) {
        let a = b * ratio;
        let closed = spectral::cosine_poisson_integral(n, a, b).unwrap();
        let quad = periodic_trapezoid(|t| (n as f64 * t).cos() / (a - b * t.cos()), -PI, 2.0 * PI, 1e-12, 30)
            .unwrap()
            .value;
        prop_assert!((closed - quad).abs() <= 1e-10, "{} vs {}", closed, quad);
    }

    #[test]
    fn recurrence_equals_closed_form(n in 0u32..=60, x in 0.01f64..100.0) {
        let r = criticality::recurrence_i(n as i64, x, 1.0).unwrap();
        let c = RecurrenceBasis::new(x, 1.0).unwrap().closed_form_i(n);
        prop_assert!((r - c).abs() <= 1e-9 * r.abs());
    }

    #[test]
    fn finite_thresholds_stay_below_the_limit(n in 1u32..200, kappa in 0.05f64..20.0, b0 in 0.05f64..20.0) {
        let finite = criticality::beta_critical(n, kappa, b0).unwrap();
        let limit = criticality::beta_star_critical_inf(kappa, b0).unwrap() - b0;
        prop_assert!(finite <= limit + 1e-12 * limit.abs().max(1.0));
    }

    #[test]
    fn operator_diagonal_is_even(n in 0usize..10, extra in 1usize..20, beta in -3.0f64..3.0) {
        let p = ModelParams::with_beta(1.3, 0.4, n, beta).unwrap();
        let op = TruncatedOperator::new(&p, n + extra).unwrap();
        let d = op.diagonal();
        for i in 0..d.len() {
            prop_assert_eq!(d[i], d[d.len() - 1 - i]);
        }
    }

    #[test]
    fn deflated_endpoint_continuity(n in 1usize..8, kappa in 0.2f64..5.0, b0 in 0.2f64..5.0, beta in -3.0f64..3.0) {
        let s = DeltaSystem::new(n, kappa, beta, b0).unwrap();
        let end = s.endpoint();
        prop_assume!(end.abs() > 1e-6 * 2f64.powi(n as i32) * kappa.max(b0).powi(n as i32 + 1));
        // first-order approach to the analytic endpoint
        let gap = |h: f64| (s.deflated(1.0 - h) - end).abs() / end.abs();
        prop_assert!(gap(1e-6) <= 1e-3);
        let (g4, g5) = (gap(1e-4), gap(1e-5));
        prop_assert!(g5 <= 0.2 * g4 + 1e-9, "{} {}", g4, g5);
    }

    #[test]
    fn existence_matches_closed_form_sign(n in 1usize..8, kappa in 0.1f64..10.0, b0 in 0.1f64..10.0, beta in -5.0f64..5.0) {
        let p = ModelParams::with_beta(kappa, b0, n, beta).unwrap();
        let sol = find_spectral_solution(&p, &fast_opts()).unwrap();
        let j = criticality::compute_j(n as u32, kappa, b0, beta).unwrap();
        prop_assert_eq!(sol.is_some(), j > 0.0);
        if let Some(sol) = sol {
            prop_assert!(sol.lambda > 0.0 && sol.zeta_root > 0.0 && sol.zeta_root < 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The sign of J_n, the existence of a root of Delta_1 in (0, 1), and the
    /// sign of the truncated operator's top eigenvalue agree on both sides of
    /// the threshold.
    #[test]
    fn three_way_threshold_consistency(n in 1usize..6, kappa in 0.5f64..2.0, b0 in 0.5f64..2.0) {
        let bc = criticality::beta_critical(n as u32, kappa, b0).unwrap();
        for delta in [-0.1, -0.01, 0.01, 0.1] {
            let beta = bc + delta;
            let p = ModelParams::with_beta(kappa, b0, n, beta).unwrap();
            let j = criticality::compute_j(n as u32, kappa, b0, beta).unwrap();
            let root = find_spectral_solution(&p, &fast_opts()).unwrap();
            let top = TruncatedOperator::new(&p, 300).unwrap().top_eigenpair(1e-13).unwrap().value;
            let above = delta > 0.0;
            prop_assert_eq!(j > 0.0, above);
            prop_assert_eq!(root.is_some(), above);
            prop_assert_eq!(top > 0.0, above, "delta {} top {:e}", delta, top);
        }
    }
}

#[test]
fn truncated_top_eigenvalue_increases_to_spectral_value() {
    let p = ModelParams::with_beta(1.0, 1.0, 2, 1.2).unwrap();
    let lambda = find_spectral_solution(&p, &SpectralOptions::default()).unwrap().unwrap().lambda;
    assert!(lambda >= 0.05);
    let mut prev = f64::NEG_INFINITY;
    for l in [5usize, 10, 20, 40, 200] {
        let top = TruncatedOperator::new(&p, l).unwrap().top_eigenpair(1e-14).unwrap().value;
        assert!(top >= prev - 1e-13 && top <= lambda + 1e-12);
        prev = top;
    }
    assert!((prev - lambda).abs() <= 1e-8);
}

#[test]
fn truncated_eigenvector_matches_extended_eigenfunction() {
    let p = ModelParams::with_beta(1.0, 0.5, 3, 2.0).unwrap();
    let sol = find_spectral_solution(&p, &SpectralOptions::default()).unwrap().unwrap();
    let op = TruncatedOperator::new(&p, 200).unwrap();
    let pair = op.top_eigenpair(1e-13).unwrap();
    let scale = pair.vector[op.index(0).unwrap()];
    for x in -40..=40i64 {
        let v = pair.vector[op.index(x).unwrap()] / scale;
        assert!((v - sol.eigenfunction(x)).abs() < 1e-9, "x={x}: {v} vs {}", sol.eigenfunction(x));
    }
}

#[test]
fn thresholds_observed_monotone_in_n() {
    // Not asserted as an invariant in general; recorded for the default grid.
    for &kappa in &[0.5, 1.0, 2.0] {
        for &b0 in &[0.5, 1.0, 2.0] {
            let seq: Vec<f64> = (1..=30).map(|n| criticality::beta_critical(n, kappa, b0).unwrap()).collect();
            assert!(seq.windows(2).all(|w| w[1] >= w[0] - 1e-15), "kappa {kappa} b0 {b0}: {seq:?}");
        }
    }
}
