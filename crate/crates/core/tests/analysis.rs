mod common;

use common::{finite_graphs, iv, stepped_g5};
use kmsgraph::classify::{self, FactorType, Subgroup};
use kmsgraph::exits::{self, Summability};
use kmsgraph::geodesics;
use kmsgraph::harmonic::{self, HarmonicOutcome};
use kmsgraph::interval::parse_decimal_rational;
use kmsgraph::series::{self, SeriesConfig};
use kmsgraph::{builtin, GraphSpec, Interval, PathPrefix, DEFAULT_PRECISION};
use proptest::prelude::*;

fn examples() -> Vec<(GraphSpec, &'static str)> {
    vec![
        (builtin("G5").unwrap(), "t1"),
        (stepped_g5(), "t1"),
        (builtin("PINWHEEL3").unwrap(), "1"),
        (builtin("AMALGAM").unwrap(), "t1"),
    ]
}

fn critical(g: &GraphSpec, root: &str) -> Interval {
    let v = g.vertex_by_name(root).unwrap();
    series::beta_critical(g, v, None, 1e-10, &SeriesConfig::default())
        .unwrap()
        .interval
}

#[test]
fn harmonic_threshold_matches_series_critical_point() {
    for (g, root) in examples() {
        let v = g.vertex_by_name(root).unwrap();
        let bc = critical(&g, root).mid_f64();
        let th = harmonic::existence_threshold(
            &g,
            v,
            (bc - 0.2, bc + 0.3),
            1e-9,
            &SeriesConfig::default(),
        )
        .unwrap();
        assert!((0.5 * (th.lo + th.hi) - bc).abs() < 2e-6, "{}", g.name());
    }
}

#[test]
fn no_harmonic_vector_below_critical_point() {
    for (g, root) in examples() {
        let v = g.vertex_by_name(root).unwrap();
        let below = Interval::from_f64(DEFAULT_PRECISION, critical(&g, root).mid_f64() - 0.05);
        let out = harmonic::solve(&g, &below, v, &SeriesConfig::default()).unwrap();
        assert!(!out.exists(), "{}", g.name());
    }
}

#[test]
fn finite_graph_harmonic_vector_exists_only_at_critical_point() {
    let g = common::finite_graph(3, &[(1, 1), (1, 1), (1, 1)], &[(0, 0, 1, 1)]);
    let v = g.base_vertices().next().unwrap();
    let cfg = SeriesConfig::default();
    let bc = series::beta_critical(&g, v, None, 1e-12, &cfg)
        .unwrap()
        .interval;
    let at = harmonic::solve_finite(&g, &bc, v, &cfg).unwrap();
    let vec = at.vector().expect("vector at the critical point");
    for (w, _) in vec.values() {
        assert!(vec.residual(&g, *w).unwrap().mag().to_f64() < 1e-8);
    }
    let off = Interval::from_f64(DEFAULT_PRECISION, bc.mid_f64() + 0.1);
    assert!(!harmonic::solve_finite(&g, &off, v, &cfg).unwrap().exists());
}

#[test]
fn geodesic_classes_are_hereditary() {
    for (g, root) in examples() {
        let v = g.vertex_by_name(root).unwrap();
        let d = geodesics::bratteli(&g, v, 8).unwrap();
        for (n, level) in d.levels.iter().enumerate() {
            for (i, class) in level.iter().enumerate() {
                let best = geodesics::min_f_distance(&g, v, class.endpoint, 40).unwrap();
                assert_eq!(best, class.value, "{} level {n}", g.name());
                if n > 0 {
                    assert!(
                        d.edges[n - 1].iter().any(|e| e.to == i),
                        "{} level {n} class {i} has no geodesic prefix",
                        g.name()
                    );
                }
            }
        }
    }
}

#[test]
fn exits_of_examples() {
    let counts: Vec<(usize, usize)> = examples()
        .iter()
        .map(|(g, _)| {
            let list = exits::canonical_exits(g).unwrap();
            let slim = list.iter().filter(|x| exits::is_slim(g, x)).count();
            (list.len(), slim)
        })
        .collect();
    assert_eq!(counts, vec![(1, 0), (1, 0), (3, 3), (4, 3)]);
}

#[test]
fn exits_are_summable_only_above_critical_point() {
    let cfg = SeriesConfig::default();
    for (g, root) in examples() {
        let bc = critical(&g, root).mid_f64();
        let x = &exits::canonical_exits(&g).unwrap()[0];
        let above = Interval::from_f64(DEFAULT_PRECISION, bc + 0.3);
        let below = Interval::from_f64(DEFAULT_PRECISION, bc - 0.1);
        assert!(matches!(
            exits::summability(&g, x, &above, &cfg).unwrap(),
            Summability::Summable { .. }
        ));
        assert!(matches!(
            exits::summability(&g, x, &below, &cfg).unwrap(),
            Summability::NotSummable { .. }
        ));
    }
}

#[test]
fn pinwheel_conservative_lambda_is_inverse_cubic_root() {
    let g = builtin("PINWHEEL3").unwrap();
    let v = g.vertex_by_name("1").unwrap();
    let bc = critical(&g, "1");
    let verdict =
        classify::classify_conservative(&g, v, &bc, 12, &SeriesConfig::default()).unwrap();
    let FactorType::IIILambda(l) = verdict.factor else {
        panic!("{}", verdict.factor)
    };
    let alpha = l.mid_f64().recip();
    assert!((alpha.powi(3) - alpha - 3.0).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn harmonic_vectors_are_harmonic_and_additive(which in 0usize..4, offset in 1u32..15) {
        let (g, root) = examples().swap_remove(which);
        let v0 = g.vertex_by_name(root).unwrap();
        let beta = Interval::from_f64(
            DEFAULT_PRECISION,
            critical(&g, root).mid_f64() + f64::from(offset) / 10.0,
        );
        let HarmonicOutcome::Exists(h) =
            harmonic::solve(&g, &beta, v0, &SeriesConfig::default()).unwrap()
        else {
            return Err(TestCaseError::fail("no harmonic vector above critical point"));
        };
        let verts: Vec<_> = h.values().map(|(v, _)| *v).filter(|v| v.stage() <= 6).collect();
        for v in verts {
            let r = h.residual(&g, v).unwrap();
            prop_assert!(r.contains_zero() || r.mag().to_f64() < 1e-20, "residual {}", r);
            let whole = harmonic::cylinder_measure(&g, &h, &PathPrefix::vertex(&g, v)).unwrap();
            let mut parts = Interval::zero(DEFAULT_PRECISION);
            for e in g.out_edges(v) {
                let p = PathPrefix::vertex(&g, v).extend(&g, &e).unwrap();
                parts = &parts + &harmonic::cylinder_measure(&g, &h, &p).unwrap();
            }
            prop_assert!(whole.overlaps(&parts) || (&whole - &parts).mag().to_f64() < 1e-20);
        }
    }

    #[test]
    fn cycle_group_scales_with_potential(g in finite_graphs(), p in 1i64..7, q in 1i64..7) {
        let v = g.base_vertices().next().unwrap();
        let c = parse_decimal_rational(&format!("{p}/{q}")).unwrap();
        let beta = iv("0.9");
        let a = classify::cycle_value_group(&g, v, &beta, 10).unwrap();
        let b = classify::cycle_value_group(&g.scaled(&c), v, &beta, 10).unwrap();
        match (&a.group, &b.group) {
            (Subgroup::Cyclic { generator: x, .. }, Subgroup::Cyclic { generator: y, .. }) => {
                prop_assert_eq!(y.ratio_to(x), Some(c));
            }
            (x, y) => prop_assert_eq!(x.label(), y.label()),
        }
    }
}
