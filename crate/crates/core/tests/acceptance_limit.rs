use proptest::prelude::*;
use qident_core::estimation::{posterior_tail, posterior_tail_quadrature, solve_eps_lim, EstimationParams};

#[test]
fn tail_is_monotone_on_a_grid() {
    for s in [50usize, 300, 1000, 5000] {
        for j in 0..=20 {
            let eps_max = 0.01 + 0.01 * j as f64;
            let mut prev = 0.0;
            for i in 0..=40 {
                let e = i as f64 * 0.005;
                let t = posterior_tail(e, s, eps_max).unwrap();
                assert!(t >= prev * (1.0 - 1e-12), "s={s} e={e} eps_max={eps_max}");
                prev = t;
            }
        }
        for i in 0..=40 {
            let e = i as f64 * 0.005;
            let mut prev = 1.0;
            for j in 0..=20 {
                let t = posterior_tail(e, s, 0.01 + 0.01 * j as f64).unwrap();
                assert!(t <= prev * (1.0 + 1e-12), "s={s} e={e}");
                prev = t;
            }
        }
    }
}

#[test]
fn limit_stays_below_eps_max_and_approaches_it() {
    let mut gaps = Vec::new();
    for s in [1_000usize, 10_000, 100_000] {
        let lim = solve_eps_lim(&EstimationParams::new(s, 0.07, 1e-10).unwrap()).unwrap();
        assert!(lim < 0.07);
        gaps.push(0.07 - lim);
    }
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 0.006, "{gaps:?}");
}

#[test]
fn limit_meets_delta_and_the_next_step_does_not() {
    let p = EstimationParams::baseline();
    let lim = solve_eps_lim(&p).unwrap();
    assert!(posterior_tail(lim, p.s, p.eps_max).unwrap() <= p.delta);
    assert!(posterior_tail(lim + 2e-5, p.s, p.eps_max).unwrap() > p.delta);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn quadrature_matches_incomplete_beta(s in 20usize..3000, frac in 0.0f64..0.2, eps_max in 0.02f64..0.3) {
        let k = (frac * s as f64).round() as usize;
        let e = k as f64 / s as f64;
        let closed = posterior_tail(e, s, eps_max).unwrap();
        let quad = posterior_tail_quadrature(e, s, eps_max).unwrap();
        // Far tails underflow f64 in both routes.
        if closed > 1e-280 {
            prop_assert!((quad - closed).abs() <= 1e-8 * closed, "s={} e={} eps_max={}: {} vs {}", s, e, eps_max, quad, closed);
        }
    }
}
