mod common;

use proptest::prelude::*;

use ovq_core::flow::{flow_moments, ld_variance, ld_variance_closed_form};
use ovq_core::heavy_traffic::{ht_mean_modulated, ht_mean_resampled, Scaling};
use ovq_core::inversion::invert_pgf;
use ovq_core::qbd::solve_r_matrix;
use ovq_core::transient::solve_two_point_stationary;
use ovq_core::{ClockLaw, PositiveLaw, ResampledSpec};

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn two_point_invariants((law, q) in common::arb_two_point(0.95)) {
        common::check_two_point(&law, q).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn modulated_invariants(spec in common::arb_modulated(4, 0.1..1.5)) {
        common::check_modulated(&spec).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn flow_cauchy_schwarz((law, q) in common::arb_two_point(0.95), shape in 0.3..4.0f64) {
        common::check_flows(&law, &ClockLaw::exponential(q).unwrap()).map_err(TestCaseError::fail)?;
        let gamma = ClockLaw::new(PositiveLaw::Gamma { shape, rate: shape * q }).unwrap();
        common::check_flows(&law, &gamma).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn qbd_levels_sum_to_one(spec in common::arb_modulated(3, 0.1..0.8)) {
        let sol = solve_r_matrix(&spec).unwrap();
        let p = sol.marginal(3000);
        let mass: f64 = p.iter().sum();
        prop_assert!((mass - 1.0).abs() < 1e-8, "mass {}", mass);
        prop_assert!(p.iter().all(|&x| x >= -1e-15));
        prop_assert!(sol.residual < 1e-10);
    }

    #[test]
    fn heavy_traffic_routes_agree((law, q) in common::arb_two_point(0.95)) {
        let spec = ResampledSpec::new(law.clone(), q).unwrap();
        let det = ht_mean_modulated(spec.modulated()).unwrap();
        let closed = ht_mean_resampled(&law.moments(), q, Scaling::Critical).unwrap();
        prop_assert!((det.approx.mean - closed.mean).abs() < 1e-8 * closed.mean);
        prop_assert!(det.diagnostic.is_none(), "{:?}", det.diagnostic);
    }

    #[test]
    fn ld_matches_closed_form((law, q) in common::arb_two_point(0.95), alpha in 0.0..1.0f64) {
        let clock = ClockLaw::exponential(q).unwrap();
        let r = ld_variance(&law, &clock, alpha).unwrap();
        let want = ld_variance_closed_form(&law.moments(), &clock, alpha);
        prop_assert!((r.variance - want).abs() < 1e-6 * want, "{} vs {}", r.variance, want);
        let f = flow_moments(&law.moments(), &clock).unwrap();
        prop_assert!((f.mixed_constant(alpha) - want).abs() < 1e-12 * want.max(1.0));
    }

    #[test]
    fn inverted_pgf_matches_qbd((law, q) in common::arb_two_point(0.9)) {
        let sol = solve_two_point_stationary(&law, q).unwrap();
        let p = invert_pgf(|z| sol.pgf_c(z), 200).unwrap();
        let spec = ResampledSpec::new(law, q).unwrap();
        let qbd = solve_r_matrix(spec.modulated()).unwrap().marginal(200);
        for (a, b) in p.iter().zip(&qbd) {
            prop_assert!((a - b).abs() < 1e-7, "{} vs {}", a, b);
        }
    }
}
