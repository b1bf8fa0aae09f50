#![allow(dead_code)]

use kmsgraph::{builtin_with, Coefficient, GraphSpec, Interval, Potential, DEFAULT_PRECISION};
use proptest::prelude::*;

pub fn iv(s: &str) -> Interval {
    Interval::from_decimal(DEFAULT_PRECISION, s).unwrap()
}

pub fn stepped_g5() -> GraphSpec {
    let pot = Potential::Stepped(Coefficient::rational(2, 1), Coefficient::rational(1, 1));
    builtin_with("G5", &pot).unwrap()
}

/// Edge `(src, dst, num, den)` with potential `num/den`.
pub type EdgeSpec = (usize, usize, u32, u32);

/// A strongly connected graph on `n` vertices: the cycle `v0 → v1 → … → v0`
/// plus `extra` edges.
pub fn finite_graph(n: usize, cycle: &[(u32, u32)], extra: &[EdgeSpec]) -> GraphSpec {
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    let mut push = |a: usize, b: usize, p: u32, q: u32| {
        edges.push(serde_json::json!({
            "src": names[a % n], "dst": names[b % n], "f": {"1": format!("{p}/{q}")}
        }));
    };
    for (i, &(p, q)) in cycle.iter().take(n).enumerate() {
        push(i, i + 1, p, q);
    }
    for &(a, b, p, q) in extra {
        push(a, b, p, q);
    }
    let doc = serde_json::json!({"name": "random", "base": {"vertices": names, "edges": edges}});
    GraphSpec::from_json(&doc.to_string()).unwrap()
}

/// Random strongly connected graphs with at most six vertices and positive
/// rational potentials.
pub fn finite_graphs() -> impl Strategy<Value = GraphSpec> {
    (2usize..=6).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((1u32..=5, 1u32..=3), n),
            prop::collection::vec((0..n, 0..n, 1u32..=5, 1u32..=3), 0..=2 * n),
        )
            .prop_map(|(n, cycle, extra)| finite_graph(n, &cycle, &extra))
    })
}
