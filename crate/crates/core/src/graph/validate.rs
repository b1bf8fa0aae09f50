use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{GraphSpec, Vertex};
use crate::error::Result;
use crate::symbolic::SymbolicReal;

/// Outcome of the bounded zero-value cycle scan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ZeroCycleScan {
    Found { vertex: String, length: usize },
    UnknownBeyond { max_len: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kind: String,
    pub strongly_connected: bool,
    pub row_finite: bool,
    pub nonnegative: bool,
    pub infinite_emitters: Vec<String>,
    pub zero_cycle: ZeroCycleScan,
}

impl ValidationReport {
    pub fn zero_cycle_found(&self) -> bool {
        matches!(self.zero_cycle, ZeroCycleScan::Found { .. })
    }
}

/// Vertices used as anchors for cycle scans: the base, or stage 1 when the
/// base is empty.
pub(crate) fn anchors(spec: &GraphSpec) -> Vec<Vertex> {
    if spec.num_base_vertices() > 0 {
        spec.base_vertices().collect()
    } else {
        let n = spec.template().map_or(0, |t| t.locals.len());
        (0..n as u32)
            .map(|l| Vertex::Stage { stage: 1, local: l })
            .collect()
    }
}

fn window_members(spec: &GraphSpec, stages: u64) -> Vec<Vertex> {
    let mut vs: Vec<Vertex> = spec.base_vertices().collect();
    if let Some(t) = spec.template() {
        for k in 1..=stages {
            vs.extend((0..t.locals.len() as u32).map(|l| Vertex::Stage { stage: k, local: l }));
        }
    }
    vs
}

fn reach(
    spec: &GraphSpec,
    from: Vertex,
    allowed: &HashSet<Vertex>,
    forward: bool,
) -> HashSet<Vertex> {
    let mut seen = HashSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        let nbrs = if forward {
            spec.out_edges(v)
        } else {
            spec.in_edges(v)
        };
        for e in nbrs {
            let w = if forward { e.dst } else { e.src };
            if allowed.contains(&w) && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Strong connectivity, decided exactly for finite graphs and on a window of
/// stages for templates (three periods beyond the probe window).
pub(crate) fn strongly_connected(spec: &GraphSpec) -> bool {
    let (probe, window) = match spec.template() {
        None => (0, 0),
        Some(t) => {
            let p = t.period as u64;
            (2 * p + 1, 5 * p + 2)
        }
    };
    let allowed: HashSet<Vertex> = window_members(spec, window).into_iter().collect();
    let probe_set = window_members(spec, probe);
    let Some(&anchor) = anchors(spec).first() else {
        return false;
    };
    if allowed.len() == 1 && !spec.out_edges(anchor).iter().any(|e| e.dst == anchor) {
        return false;
    }
    let fwd = reach(spec, anchor, &allowed, true);
    let bwd = reach(spec, anchor, &allowed, false);
    probe_set.iter().all(|v| fwd.contains(v) && bwd.contains(v))
}

/// Distinct values `F(μ)` of closed walks `μ` at `v`, indexed by length
/// `0..=max_len`.
pub fn closed_walk_values(
    spec: &GraphSpec,
    v: Vertex,
    max_len: usize,
) -> Vec<BTreeSet<SymbolicReal>> {
    let dim = spec.basis().len();
    // Backward distance to `v`, used to prune walks that cannot close in time.
    let mut back: HashMap<Vertex, usize> = HashMap::from([(v, 0)]);
    let mut queue = VecDeque::from([v]);
    while let Some(w) = queue.pop_front() {
        let d = back[&w];
        if d == max_len {
            continue;
        }
        for e in spec.in_edges(w) {
            back.entry(e.src).or_insert_with(|| {
                queue.push_back(e.src);
                d + 1
            });
        }
    }

    let mut result = vec![BTreeSet::new(); max_len + 1];
    result[0].insert(SymbolicReal::zero(dim));
    let mut layer: HashMap<Vertex, HashSet<SymbolicReal>> =
        HashMap::from([(v, HashSet::from([SymbolicReal::zero(dim)]))]);
    for n in 1..=max_len {
        let mut next: HashMap<Vertex, HashSet<SymbolicReal>> = HashMap::new();
        for (u, vals) in &layer {
            for e in spec.out_edges(*u) {
                match back.get(&e.dst) {
                    Some(&d) if d <= max_len - n => {}
                    _ => continue,
                }
                let f = spec.potential(&e);
                let slot = next.entry(e.dst).or_default();
                for x in vals {
                    slot.insert(x.add(f));
                }
            }
        }
        if let Some(vals) = next.get(&v) {
            result[n].extend(vals.iter().cloned());
        }
        layer = next;
    }
    result
}

/// Validation summary with a zero-value cycle scan up to `max_len` at each anchor.
pub fn validate(spec: &GraphSpec, max_len: usize) -> Result<ValidationReport> {
    let mut zero_cycle = ZeroCycleScan::UnknownBeyond { max_len };
    'outer: for a in anchors(spec) {
        for (n, vals) in closed_walk_values(spec, a, max_len)
            .iter()
            .enumerate()
            .skip(1)
        {
            if vals.iter().any(|x| x.is_zero()) {
                zero_cycle = ZeroCycleScan::Found {
                    vertex: spec.vertex_name(a),
                    length: n,
                };
                break 'outer;
            }
        }
    }
    Ok(ValidationReport {
        kind: match spec.kind() {
            super::GraphKind::Finite => "finite".into(),
            super::GraphKind::RayTemplate => "ray_template".into(),
        },
        strongly_connected: strongly_connected(spec),
        row_finite: spec.is_row_finite(),
        nonnegative: spec.potentials_nonnegative(),
        infinite_emitters: spec
            .infinite_emitters()
            .into_iter()
            .map(|v| spec.vertex_name(v))
            .collect(),
        zero_cycle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{builtin, builtin_with, Coefficient, Potential};

    #[test]
    fn g5_gauge_is_clean() {
        let g = builtin("G5").unwrap();
        let r = validate(&g, 10).unwrap();
        assert!(r.strongly_connected && r.row_finite && r.nonnegative);
        assert_eq!(r.zero_cycle, ZeroCycleScan::UnknownBeyond { max_len: 10 });
    }

    #[test]
    fn stepped_g5_has_no_zero_cycle() {
        let pot = Potential::Stepped(Coefficient::rational(2, 1), Coefficient::rational(1, 1));
        let g = builtin_with("G5", &pot).unwrap();
        assert!(!validate(&g, 10).unwrap().zero_cycle_found());
    }

    #[test]
    fn single_vertex_and_sink() {
        let lone = GraphSpec::from_json(r#"{"name":"v","base":{"vertices":["v"]}}"#).unwrap();
        assert!(!validate(&lone, 4).unwrap().strongly_connected);
        let sink = GraphSpec::from_json(
            r#"{"name":"s","base":{"vertices":["a","b"],"edges":[{"src":"a","dst":"b","f":{"1":"1"}},{"src":"a","dst":"a","f":{"1":"1"}}]}}"#,
        )
        .unwrap();
        assert!(!validate(&sink, 4).unwrap().strongly_connected);
    }

    #[test]
    fn zero_cycle_detected() {
        let g = GraphSpec::from_json(
            r#"{"name":"z","base":{"vertices":["a","b"],"edges":[{"src":"a","dst":"b","f":{"1":"1"}},{"src":"b","dst":"a","f":{"1":"-1"}}]}}"#,
        )
        .unwrap();
        let r = validate(&g, 4).unwrap();
        assert_eq!(
            r.zero_cycle,
            ZeroCycleScan::Found {
                vertex: "a".into(),
                length: 2
            }
        );
        assert!(!r.nonnegative);
    }

    #[test]
    fn g5_loop_values_are_even_lengths() {
        let g = builtin("G5").unwrap();
        let vals = closed_walk_values(&g, g.vertex_by_name("t1").unwrap(), 8);
        let lengths: Vec<usize> = (1..=8).filter(|&n| !vals[n].is_empty()).collect();
        assert_eq!(lengths, [4, 6, 8]);
    }
}
