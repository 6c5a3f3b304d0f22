//! Property tests over randomized scattering configurations.

use proptest::prelude::*;

use tunneltime::kinematics::within_threshold_guard;
use tunneltime::phase_clock::barrier_phase_time;
use tunneltime::scattering::{solve_barrier, solve_piecewise, Segment};
use tunneltime::weak_time::{steinberg_time, time_ratio};
use tunneltime::{ParticleContext, PiecewisePotential};

fn ctx(m: f64, e: f64) -> ParticleContext {
    ParticleContext::new(m, e).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wavenumber_squares_to_twice_the_kinetic_term(m in 0.1f64..10.0, e in 0.01f64..50.0) {
        let c = ctx(m, e);
        let k2 = c.wavenumber() * c.wavenumber();
        prop_assert!((k2 - 2.0 * m * e).abs() <= 1e-12 * (2.0 * m * e));
    }

    #[test]
    fn flux_is_conserved_for_random_rectangles(
        m in 0.2f64..5.0,
        e in 0.05f64..20.0,
        v in -5.0f64..10.0,
        a in 0.05f64..4.0,
    ) {
        prop_assume!(!within_threshold_guard(e, v));
        let sol = solve_barrier(&ctx(m, e), v, a).unwrap();
        let drift = (sol.transmit_probability() + sol.reflect_probability() - 1.0).abs();
        prop_assert!(drift < 1e-10, "drift = {drift:.3e}");
        prop_assert!(sol.matching_residual() < 1e-10);
    }

    #[test]
    fn splitting_a_region_changes_nothing(
        e in 0.1f64..8.0,
        v in -3.0f64..6.0,
        a in 0.2f64..3.0,
        cut in 0.1f64..0.9,
    ) {
        prop_assume!(!within_threshold_guard(e, v));
        let c = ctx(1.0, e);
        let whole = solve_barrier(&c, v, a).unwrap();
        let split = PiecewisePotential::from_segments(vec![
            Segment { x_start: 0.0, x_end: cut * a, v },
            Segment { x_start: cut * a, x_end: a, v },
        ]).unwrap();
        let parts = solve_piecewise(&c, &split).unwrap();
        prop_assert!((whole.transmission - parts.transmission).norm() < 1e-10);
        prop_assert!((whole.reflection - parts.reflection).norm() < 1e-10);
    }

    #[test]
    fn weak_time_stays_below_clock_time(
        e_frac in 0.02f64..0.98,
        v in 0.2f64..8.0,
        a in 0.05f64..5.0,
    ) {
        let c = ctx(1.0, e_frac * v);
        let t = barrier_phase_time(&c, v, a).unwrap().value;
        let ts = steinberg_time(&c, v, a).unwrap().value;
        prop_assert!(ts < t, "T_s = {ts} should stay below T = {t}");
    }

    #[test]
    fn ratio_formula_agrees_with_division(
        e_frac in 0.02f64..0.98,
        v in 0.2f64..8.0,
        a in 0.05f64..5.0,
    ) {
        let e = e_frac * v;
        prop_assume!((v - 2.0 * e).abs() > 1e-6 * v);
        let c = ctx(1.0, e);
        let formula = time_ratio(&c, v, a).unwrap();
        let direct = barrier_phase_time(&c, v, a).unwrap().value
            / steinberg_time(&c, v, a).unwrap().value;
        prop_assert!((formula - direct).abs() <= 1e-8 * direct);
    }

    #[test]
    fn transmission_probability_is_a_probability(
        m in 0.2f64..5.0,
        e in 0.05f64..20.0,
        v in -5.0f64..10.0,
        a in 0.05f64..4.0,
    ) {
        prop_assume!(!within_threshold_guard(e, v));
        let sol = solve_barrier(&ctx(m, e), v, a).unwrap();
        let (pt, pr) = (sol.transmit_probability(), sol.reflect_probability());
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pt));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pr));
    }
}
