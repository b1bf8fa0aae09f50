mod common;

use common::{finite_graph, finite_graphs, iv, stepped_g5};
use kmsgraph::series::{self, SeriesConfig};
use kmsgraph::{builtin, Interval, DEFAULT_PRECISION};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_cfg(n_max: usize) -> SeriesConfig {
    SeriesConfig {
        n_max,
        ..SeriesConfig::default()
    }
}

#[test]
fn renewal_identity_holds_on_random_graphs() {
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=6);
        let cycle: Vec<(u32, u32)> = (0..n)
            .map(|_| (rng.gen_range(1..=5), rng.gen_range(1..=3)))
            .collect();
        let extra: Vec<_> = (0..rng.gen_range(0..=2 * n))
            .map(|_| {
                (
                    rng.gen_range(0..n),
                    rng.gen_range(0..n),
                    rng.gen_range(1..=5),
                    rng.gen_range(1..=3),
                )
            })
            .collect();
        let g = finite_graph(n, &cycle, &extra);
        let v = g.base_vertices().next().unwrap();
        let beta = iv(&format!("0.{}", rng.gen_range(3..=9)));
        let t = series::first_return_series(&g, v, &beta, &small_cfg(20)).unwrap();
        for m in 1..=20 {
            let mut conv = Interval::zero(DEFAULT_PRECISION);
            for k in 1..=m {
                conv = &conv + &(&t.first_returns[k] * &t.loops[m - k]);
            }
            assert!(
                conv.overlaps(&t.loops[m]),
                "seed {seed}, n {m}: {} vs {conv}",
                t.loops[m]
            );
        }
    }
}

#[test]
fn deconvolved_first_returns_match_direct_propagation() {
    let g = builtin("PINWHEEL3").unwrap();
    let v = g.vertex_by_name("1").unwrap();
    let cfg = small_cfg(60);
    let direct = series::first_return_series(&g, v, &iv("0.8"), &cfg).unwrap();
    let renewal = series::first_return_weights(&direct);
    for n in 1..=60 {
        assert!(
            direct.first_returns[n].overlaps(&renewal.first_returns[n]),
            "n {n}"
        );
    }
}

/// `3e^{-β}/(e^{2β}-1) + x/(1-x)` with `x = e^{-2β} + e^{-β}`.
fn amalgam_return_sum(b: f64) -> f64 {
    let x = (-2.0 * b).exp() + (-b).exp();
    3.0 * (-b).exp() / ((2.0 * b).exp() - 1.0) + x / (1.0 - x)
}

#[test]
fn amalgam_root_matches_closed_form_equation() {
    let g = builtin("AMALGAM").unwrap();
    let v = g.vertex_by_name("t1").unwrap();
    let bc = series::beta_critical(&g, v, None, 1e-10, &SeriesConfig::default()).unwrap();
    let (mut lo, mut hi) = (0.9f64, 2.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if amalgam_return_sum(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((bc.interval.mid_f64() - lo).abs() < 1e-8);
}

#[test]
fn entropy_of_g5_is_half_log_of_one_plus_sqrt_three() {
    let g = builtin("G5").unwrap();
    let v = g.vertex_by_name("t1").unwrap();
    let h = series::gurevich_entropy(&g, v, 400, DEFAULT_PRECISION).unwrap();
    let exact = 0.5 * (1.0 + 3f64.sqrt()).ln();
    assert!(h.interval.lo_f64() - 1e-12 <= exact && exact <= h.interval.hi_f64() + 1e-12);
    assert!(h.interval.width_f64() <= 1e-4);
}

#[test]
fn stepped_g5_critical_point_has_closed_form() {
    let g = stepped_g5();
    let v = g.vertex_by_name("t1").unwrap();
    let bc = series::beta_critical(&g, v, None, 1e-10, &SeriesConfig::default()).unwrap();
    let exact = -((3f64.sqrt() - 1.0) / 2.0).ln();
    assert!((bc.interval.mid_f64() - exact).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn truncation_radius_beyond_n_max_is_exact(
        which in 0usize..3,
        n in 5usize..40,
        tenths in 6u32..20,
    ) {
        let (name, root) = [("G5", "t1"), ("PINWHEEL3", "1"), ("AMALGAM", "t1")][which];
        let g = builtin(name).unwrap();
        let v = g.vertex_by_name(root).unwrap();
        let beta = iv(&format!("{}.{}", tenths / 10, tenths % 10));
        let cfg = small_cfg(n);
        let a = series::loop_weights_with_radius(&g, v, &beta, &cfg, n).unwrap();
        let b = series::loop_weights_with_radius(&g, v, &beta, &cfg, n + 5).unwrap();
        for k in 0..=n {
            prop_assert_eq!(a.loops[k].mid(), b.loops[k].mid());
        }
    }

    #[test]
    fn return_sum_decreases_in_beta(g in finite_graphs(), b1 in 1u32..30, step in 1u32..10) {
        let v = g.base_vertices().next().unwrap();
        let cfg = small_cfg(60);
        let lo = iv(&format!("{}/10", b1));
        let hi = iv(&format!("{}/10", b1 + step));
        let s1 = series::classify_recurrence(&g, v, &lo, &cfg).unwrap().partial;
        let s2 = series::classify_recurrence(&g, v, &hi, &cfg).unwrap().partial;
        prop_assert!(!s1.certainly_lt(&s2), "{} < {}", s1, s2);
    }

    #[test]
    fn period_is_vertex_independent(g in finite_graphs()) {
        let periods: Vec<u64> = g
            .base_vertices()
            .map(|v| series::period(&g, v, 24).unwrap().period)
            .collect();
        prop_assert!(periods.windows(2).all(|w| w[0] == w[1]), "{:?}", periods);
    }
}
