//! Minimal-potential paths, their classes by endpoint and value, and the
//! Bratteli diagram those classes form.
//!
//! A prefix is geodesic when each of its own prefixes attains the minimal
//! potential among paths with the same endpoints. Whether a prefix extends
//! depends only on its endpoint and value, so prefixes are counted per such
//! state and the diagram is built on states.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use rug::Rational;

use crate::error::{Error, Result};
use crate::graph::{truncate, GraphSpec, Vertex};
use crate::symbolic::SymbolicReal;

/// Extra levels explored to decide whether a prefix extends indefinitely.
pub fn lookahead(spec: &GraphSpec) -> usize {
    spec.template().map_or(12, |t| (4 * t.period()).max(12))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key {
    witness: Rational,
    value: SymbolicReal,
}

/// Minimal potentials from `root` to every vertex within `radius` steps.
fn distances(
    spec: &GraphSpec,
    root: Vertex,
    radius: usize,
) -> Result<HashMap<Vertex, SymbolicReal>> {
    if !spec.potentials_nonnegative() {
        let i = spec
            .potentials()
            .iter()
            .position(|p| spec.basis().sign(p).is_lt())
            .unwrap_or(0);
        return Err(Error::NegativePotential(
            spec.basis().display(&spec.potentials()[i]),
        ));
    }
    let trunc = truncate(spec, root, radius)?;
    let basis = spec.basis();
    let mut best: HashMap<Vertex, SymbolicReal> = HashMap::new();
    let zero = SymbolicReal::zero(basis.len());
    let mut heap = BinaryHeap::from([Reverse((
        Key {
            witness: Rational::new(),
            value: zero,
        },
        root,
    ))]);
    while let Some(Reverse((key, u))) = heap.pop() {
        if best.contains_key(&u) {
            continue;
        }
        best.insert(u, key.value.clone());
        for e in spec.out_edges(u) {
            if trunc.index_of(e.dst).is_none() || best.contains_key(&e.dst) {
                continue;
            }
            let value = key.value.add(spec.potential(&e));
            heap.push(Reverse((
                Key {
                    witness: basis.witness_value(&value),
                    value,
                },
                e.dst,
            )));
        }
    }
    Ok(best)
}

/// Minimal `F` over paths from `v` to `w` within `radius` steps of `v`.
pub fn min_f_distance(
    spec: &GraphSpec,
    v: Vertex,
    w: Vertex,
    radius: usize,
) -> Result<SymbolicReal> {
    distances(spec, v, radius)?
        .remove(&w)
        .ok_or_else(|| Error::Unreachable(spec.vertex_name(w)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeodesicClass {
    pub level: usize,
    pub endpoint: Vertex,
    pub value: SymbolicReal,
    pub multiplicity: u128,
    /// Up to [`MEMBER_CAP`] members, as edge label sequences.
    pub members: Vec<Vec<String>>,
}

pub const MEMBER_CAP: usize = 8;

type State = (Vertex, SymbolicReal);

/// Geodesic prefixes from `root`, level by level.
struct Layers {
    /// `levels[n]`: state → number of geodesic prefixes of length `n`.
    levels: Vec<BTreeMap<State, u128>>,
    /// `succ[n]`: (state at n, state at n+1, number of edges).
    succ: Vec<BTreeMap<(State, State), u128>>,
}

fn state_order(spec: &GraphSpec, a: &State, b: &State) -> Ordering {
    a.0.cmp(&b.0).then_with(|| spec.basis().compare(&a.1, &b.1))
}

fn layers(spec: &GraphSpec, root: Vertex, n_levels: usize) -> Result<Layers> {
    let ahead = lookahead(spec);
    let depth = n_levels + ahead;
    let dist = distances(spec, root, depth + ahead)?;
    let is_min = |w: Vertex, value: &SymbolicReal| dist.get(&w).is_some_and(|d| d == value);
    let mut levels: Vec<BTreeMap<State, u128>> = vec![BTreeMap::from([(
        (root, SymbolicReal::zero(spec.basis().len())),
        1,
    )])];
    let mut succ = Vec::new();
    for n in 0..depth {
        let mut next: BTreeMap<State, u128> = BTreeMap::new();
        let mut links: BTreeMap<(State, State), u128> = BTreeMap::new();
        for (state, count) in &levels[n] {
            for e in spec.out_edges(state.0) {
                let value = state.1.add(spec.potential(&e));
                if !is_min(e.dst, &value) {
                    continue;
                }
                let target = (e.dst, value);
                let slot = next.entry(target.clone()).or_insert(0);
                *slot = slot
                    .checked_add(*count)
                    .ok_or_else(|| Error::Domain("multiplicity overflow".into()))?;
                *links.entry((state.clone(), target)).or_insert(0) += 1;
            }
        }
        levels.push(next);
        succ.push(links);
    }
    let mut alive: Vec<BTreeMap<State, bool>> = vec![BTreeMap::new(); depth + 1];
    for s in levels[depth].keys() {
        alive[depth].insert(s.clone(), true);
    }
    for n in (0..depth).rev() {
        for s in levels[n].keys() {
            let live = spec.in_v_inf(s.0)
                || spec.out_edges(s.0).is_empty()
                || succ[n].keys().any(|(a, b)| a == s && alive[n + 1][b]);
            alive[n].insert(s.clone(), live);
        }
    }
    // Recount along live states only.
    let mut counted: Vec<BTreeMap<State, u128>> = vec![BTreeMap::new(); depth + 1];
    for (s, c) in &levels[0] {
        if alive[0][s] {
            counted[0].insert(s.clone(), *c);
        }
    }
    for n in 0..depth {
        for ((a, b), k) in &succ[n] {
            if let (Some(c), true) = (counted[n].get(a).copied(), alive[n + 1][b]) {
                let slot = counted[n + 1].entry(b.clone()).or_insert(0);
                *slot = slot
                    .checked_add(
                        c.checked_mul(*k)
                            .ok_or_else(|| Error::Domain("multiplicity overflow".into()))?,
                    )
                    .ok_or_else(|| Error::Domain("multiplicity overflow".into()))?;
            }
        }
    }
    Ok(Layers {
        levels: counted,
        succ,
    })
}

/// Sample members of a class, by depth-first search over counted states.
fn members(
    spec: &GraphSpec,
    lay: &Layers,
    root: Vertex,
    target: &State,
    level: usize,
) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut stack: Vec<(State, Vec<String>)> =
        vec![((root, SymbolicReal::zero(spec.basis().len())), Vec::new())];
    while let Some((s, path)) = stack.pop() {
        if out.len() >= MEMBER_CAP {
            break;
        }
        let n = path.len();
        if n == level {
            if &s == target {
                out.push(path);
            }
            continue;
        }
        let mut children = Vec::new();
        for e in spec.out_edges(s.0) {
            let child = (e.dst, s.1.add(spec.potential(&e)));
            if lay.levels[n + 1].contains_key(&child)
                && lay.succ[n].contains_key(&(s.clone(), child.clone()))
            {
                let mut p = path.clone();
                p.push(spec.edge_label(e.id));
                children.push((child, p));
            }
        }
        stack.extend(children.into_iter().rev());
    }
    out
}

fn classes_at(spec: &GraphSpec, lay: &Layers, root: Vertex, level: usize) -> Vec<GeodesicClass> {
    let mut states: Vec<(&State, &u128)> = lay.levels[level].iter().collect();
    states.sort_by(|a, b| state_order(spec, a.0, b.0));
    states
        .into_iter()
        .map(|(s, m)| GeodesicClass {
            level,
            endpoint: s.0,
            value: s.1.clone(),
            multiplicity: *m,
            members: members(spec, lay, root, s, level),
        })
        .collect()
}

/// Extendable geodesic prefixes of length `level` from `v`, grouped by endpoint and value.
pub fn geodesic_classes(spec: &GraphSpec, v: Vertex, level: usize) -> Result<Vec<GeodesicClass>> {
    let lay = layers(spec, v, level)?;
    Ok(classes_at(spec, &lay, v, level)
        .into_iter()
        .filter(|c| !spec.out_edges(c.endpoint).is_empty())
        .collect())
}

/// Geodesic prefixes of length `level` that stop at a sink or an infinite emitter.
pub fn terminal_geodesics(spec: &GraphSpec, v: Vertex, level: usize) -> Result<Vec<GeodesicClass>> {
    let lay = layers(spec, v, level)?;
    Ok(classes_at(spec, &lay, v, level)
        .into_iter()
        .filter(|c| spec.in_v_inf(c.endpoint) || spec.out_edges(c.endpoint).is_empty())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BratteliSummary {
    /// `k` chains of multiplicity one: a `k`-point simplex of ground states.
    FiniteSimplex(usize),
    /// A single chain; `ratios[n] = m_{n+1} / m_n`.
    Uhf {
        ratios: Vec<u128>,
    },
    Af {
        dimensions: Vec<Vec<u128>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramEdge {
    pub from: usize,
    pub to: usize,
    pub count: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BratteliDiagram {
    pub levels: Vec<Vec<GeodesicClass>>,
    /// `edges[n]` joins level `n` to level `n + 1` by class position.
    pub edges: Vec<Vec<DiagramEdge>>,
    pub summary: BratteliSummary,
}

pub fn bratteli(spec: &GraphSpec, v: Vertex, n_levels: usize) -> Result<BratteliDiagram> {
    let lay = layers(spec, v, n_levels)?;
    let levels: Vec<Vec<GeodesicClass>> = (0..=n_levels)
        .map(|n| classes_at(spec, &lay, v, n))
        .collect();
    let mut edges = Vec::new();
    for n in 0..n_levels {
        let pos = |lvl: &[GeodesicClass], s: &State| {
            lvl.iter().position(|c| c.endpoint == s.0 && c.value == s.1)
        };
        let mut row = Vec::new();
        for ((a, b), k) in &lay.succ[n] {
            if let (Some(from), Some(to)) = (pos(&levels[n], a), pos(&levels[n + 1], b)) {
                row.push(DiagramEdge {
                    from,
                    to,
                    count: *k,
                });
            }
        }
        row.sort_by_key(|e| (e.from, e.to));
        edges.push(row);
    }
    let summary = summarize(&levels);
    Ok(BratteliDiagram {
        levels,
        edges,
        summary,
    })
}

fn summarize(levels: &[Vec<GeodesicClass>]) -> BratteliSummary {
    let body = &levels[1.min(levels.len() - 1)..];
    let k = body[0].len();
    if body
        .iter()
        .all(|l| l.len() == k && l.iter().all(|c| c.multiplicity == 1))
    {
        return BratteliSummary::FiniteSimplex(k);
    }
    if levels.iter().all(|l| l.len() == 1) {
        let m: Vec<u128> = levels.iter().map(|l| l[0].multiplicity).collect();
        if m.windows(2).all(|w| w[1] % w[0] == 0) {
            return BratteliSummary::Uhf {
                ratios: m.windows(2).map(|w| w[1] / w[0]).collect(),
            };
        }
    }
    BratteliSummary::Af {
        dimensions: levels
            .iter()
            .map(|l| l.iter().map(|c| c.multiplicity).collect())
            .collect(),
    }
}

/// `r^∞` notation when the ratios settle on one value over the second half.
fn supernatural(ratios: &[u128]) -> String {
    let tail = &ratios[ratios.len() / 2..];
    match tail.first() {
        Some(&r) if tail.iter().all(|&x| x == r) && r > 1 => {
            let mut parts = Vec::new();
            let mut x = r;
            let mut p = 2;
            while x > 1 {
                if x % p == 0 {
                    parts.push(format!("{p}^∞"));
                    while x % p == 0 {
                        x /= p;
                    }
                }
                p += 1;
            }
            parts.join("·")
        }
        _ => format!("ratios {ratios:?}"),
    }
}

pub const GROUND_STATE_NOTE: &str =
    "ground states are read from the AF algebra of geodesic classes; limits of KMS states as β grows are not determined";

pub fn ground_state_summary(d: &BratteliDiagram) -> String {
    match &d.summary {
        BratteliSummary::FiniteSimplex(1) => "unique ground state".into(),
        BratteliSummary::FiniteSimplex(k) => format!("simplex with {k} extreme points"),
        BratteliSummary::Uhf { ratios } => format!("state space of UHF({})", supernatural(ratios)),
        BratteliSummary::Af { dimensions } => {
            let dims: Vec<u128> = dimensions.iter().map(|l| l.iter().sum()).collect();
            format!("state space of an AF algebra with total dimensions {dims:?}")
        }
    }
}
