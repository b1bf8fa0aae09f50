//! Shared fixtures for benchmarks.

use kmsgraph::{builtin, builtin_with, Coefficient, GraphSpec, Interval, Potential, Vertex};

/// A built-in graph together with its root vertex.
pub struct Fixture {
    pub name: &'static str,
    pub spec: GraphSpec,
    pub root: Vertex,
}

pub fn fixtures() -> Vec<Fixture> {
    let stepped = Potential::Stepped(Coefficient::rational(2, 1), Coefficient::rational(1, 1));
    [
        ("G5", builtin("G5").unwrap(), "t1"),
        ("G5-stepped", builtin_with("G5", &stepped).unwrap(), "t1"),
        ("PINWHEEL3", builtin("PINWHEEL3").unwrap(), "1"),
        ("AMALGAM", builtin("AMALGAM").unwrap(), "t1"),
    ]
    .into_iter()
    .map(|(name, spec, root)| {
        let root = spec.vertex_by_name(root).unwrap();
        Fixture { name, spec, root }
    })
    .collect()
}

pub fn beta(s: &str) -> Interval {
    Interval::from_decimal(kmsgraph::DEFAULT_PRECISION, s).unwrap()
}
