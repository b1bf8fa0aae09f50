//! Graph specifications with edge potentials.
//!
//! A [`GraphSpec`] is either a finite graph or a finite base glued to a
//! periodic ray template. Template stage `k ≥ 1` is a copy of the stage
//! vertex set; edges inside a stage, between consecutive stages, and between
//! the base and stage 1 repeat with the template period. The whole infinite
//! graph is exposed lazily through [`GraphSpec::out_edges`] and
//! [`GraphSpec::in_edges`].

mod builtin;
mod document;
mod path;
mod truncate;
mod validate;

use std::collections::{BTreeSet, HashMap};

pub use builtin::{builtin, builtin_names, builtin_with, Coefficient, Potential};
pub use document::{CrossDirection, SpecDocument};
pub use path::PathPrefix;
pub use truncate::{truncate, Truncation};
pub use validate::{closed_walk_values, validate, ValidationReport, ZeroCycleScan};

use crate::error::{Error, Result};
use crate::symbolic::{Basis, SymbolicReal};

/// A vertex of the (possibly infinite) graph.
///
/// The derived order puts base vertices first, then stage vertices by stage
/// and local index; every deterministic listing in the crate uses it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Base(u32),
    Stage { stage: u64, local: u32 },
}

impl Vertex {
    pub fn stage(&self) -> u64 {
        match self {
            Vertex::Base(_) => 0,
            Vertex::Stage { stage, .. } => *stage,
        }
    }
}

/// Identifies one edge of the infinite graph. Cross edges are keyed by the
/// lower of the two stages they join.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeId {
    Base(u32),
    Attach(u32),
    Intra { stage: u64, idx: u32 },
    Cross { stage: u64, idx: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub id: EdgeId,
    pub src: Vertex,
    pub dst: Vertex,
    /// Index into [`GraphSpec::potentials`].
    pub pot: u32,
}

#[derive(Clone, Debug)]
pub(crate) struct BaseEdge {
    pub src: u32,
    pub dst: u32,
    pub pot: u32,
    pub label: String,
}

#[derive(Clone, Debug)]
pub(crate) struct StageEdge {
    pub src: u32,
    pub dst: u32,
    pub pot: u32,
    pub phase: Option<usize>,
    pub label: String,
}

#[derive(Clone, Debug)]
pub(crate) struct CrossEdge {
    pub src: u32,
    pub dst: u32,
    pub pot: u32,
    pub dir: CrossDirection,
    pub phase: Option<usize>,
    pub label: String,
}

#[derive(Clone, Debug)]
pub(crate) struct AttachEdge {
    pub base: u32,
    pub local: u32,
    pub pot: u32,
    /// `true` for base → stage 1, `false` for stage 1 → base.
    pub outward: bool,
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct Template {
    pub(crate) period: usize,
    pub(crate) first_index: u64,
    pub(crate) locals: Vec<String>,
    pub(crate) intra: Vec<StageEdge>,
    pub(crate) cross: Vec<CrossEdge>,
    pub(crate) attach: Vec<AttachEdge>,
}

impl Template {
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn locals(&self) -> &[String] {
        &self.locals
    }

    pub fn first_index(&self) -> u64 {
        self.first_index
    }

    fn phase_of(&self, stage: u64) -> usize {
        ((stage - 1) % self.period as u64) as usize
    }

    fn applies(&self, phase: Option<usize>, stage: u64) -> bool {
        phase.is_none_or(|p| p == self.phase_of(stage))
    }

    /// Groups stage-local vertices into arms: connected components of the
    /// local graph formed by intra-stage and cross edges.
    pub fn arms(&self) -> Vec<Vec<u32>> {
        let n = self.locals.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        let pairs = self
            .intra
            .iter()
            .map(|e| (e.src, e.dst))
            .chain(self.cross.iter().map(|e| (e.src, e.dst)));
        for (a, b) in pairs {
            let (ra, rb) = (find(&mut parent, a as usize), find(&mut parent, b as usize));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: Vec<Vec<u32>> = Vec::new();
        let mut root_pos: HashMap<usize, usize> = HashMap::new();
        for l in 0..n {
            let r = find(&mut parent, l);
            let pos = *root_pos.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[pos].push(l as u32);
        }
        groups
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphKind {
    Finite,
    RayTemplate,
}

#[derive(Clone, Debug)]
pub struct GraphSpec {
    pub(crate) name: String,
    pub(crate) basis: Basis,
    pub(crate) potentials: Vec<SymbolicReal>,
    pub(crate) base_names: Vec<String>,
    pub(crate) base_index: HashMap<String, u32>,
    pub(crate) base_edges: Vec<BaseEdge>,
    pub(crate) base_out: Vec<Vec<u32>>,
    pub(crate) base_in: Vec<Vec<u32>>,
    pub(crate) template: Option<Template>,
    pub(crate) v_inf: BTreeSet<u32>,
    pub(crate) document: SpecDocument,
}

impl GraphSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> GraphKind {
        if self.template.is_some() {
            GraphKind::RayTemplate
        } else {
            GraphKind::Finite
        }
    }

    pub fn is_finite(&self) -> bool {
        self.template.is_none()
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn potentials(&self) -> &[SymbolicReal] {
        &self.potentials
    }

    pub fn potential(&self, e: &Edge) -> &SymbolicReal {
        &self.potentials[e.pot as usize]
    }

    pub fn template(&self) -> Option<&Template> {
        self.template.as_ref()
    }

    pub fn document(&self) -> &SpecDocument {
        &self.document
    }

    pub fn base_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.base_names.len() as u32).map(Vertex::Base)
    }

    pub fn num_base_vertices(&self) -> usize {
        self.base_names.len()
    }

    pub fn v_inf(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.v_inf.iter().map(|&b| Vertex::Base(b))
    }

    pub fn in_v_inf(&self, v: Vertex) -> bool {
        matches!(v, Vertex::Base(b) if self.v_inf.contains(&b))
    }

    /// Infinite emitters: declared members of `v_inf` that still list edges.
    pub fn infinite_emitters(&self) -> Vec<Vertex> {
        self.v_inf
            .iter()
            .map(|&b| Vertex::Base(b))
            .filter(|&v| !self.out_edges(v).is_empty())
            .collect()
    }

    pub fn is_row_finite(&self) -> bool {
        self.infinite_emitters().is_empty()
    }

    pub(crate) fn require_row_finite(&self) -> Result<()> {
        match self.infinite_emitters().first() {
            Some(&v) => Err(Error::NotRowFinite(self.vertex_name(v))),
            None => Ok(()),
        }
    }

    /// Every edge has a potential `≥ 0` (by witness value).
    pub fn potentials_nonnegative(&self) -> bool {
        self.potentials
            .iter()
            .all(|p| self.basis.sign(p) != std::cmp::Ordering::Less)
    }

    pub fn is_gauge(&self) -> bool {
        let one = SymbolicReal::constant(self.basis.len(), rug::Rational::from(1));
        self.potentials.iter().all(|p| *p == one)
    }

    pub fn vertex_name(&self, v: Vertex) -> String {
        match v {
            Vertex::Base(b) => self.base_names[b as usize].clone(),
            Vertex::Stage { stage, local } => {
                let t = self
                    .template
                    .as_ref()
                    .expect("stage vertex without template");
                format!("{}{}", t.locals[local as usize], stage + t.first_index - 1)
            }
        }
    }

    /// Resolves a concrete vertex name such as `t1`, `d7` or `1`.
    pub fn vertex_by_name(&self, name: &str) -> Result<Vertex> {
        if let Some(&b) = self.base_index.get(name) {
            return Ok(Vertex::Base(b));
        }
        if let Some(t) = &self.template {
            for (l, local) in t.locals.iter().enumerate() {
                if let Some(rest) = name.strip_prefix(local.as_str()) {
                    if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                        if let Ok(idx) = rest.parse::<u64>() {
                            if idx >= t.first_index {
                                return Ok(Vertex::Stage {
                                    stage: idx - t.first_index + 1,
                                    local: l as u32,
                                });
                            }
                        }
                    }
                }
            }
        }
        Err(Error::UnknownVertex(name.to_string()))
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        match v {
            Vertex::Base(b) => (b as usize) < self.base_names.len(),
            Vertex::Stage { stage, local } => {
                stage >= 1
                    && self
                        .template
                        .as_ref()
                        .is_some_and(|t| (local as usize) < t.locals.len())
            }
        }
    }

    pub fn out_edges(&self, v: Vertex) -> Vec<Edge> {
        let mut out = Vec::new();
        match v {
            Vertex::Base(b) => {
                for &i in &self.base_out[b as usize] {
                    let e = &self.base_edges[i as usize];
                    out.push(Edge {
                        id: EdgeId::Base(i),
                        src: v,
                        dst: Vertex::Base(e.dst),
                        pot: e.pot,
                    });
                }
                if let Some(t) = &self.template {
                    for (i, a) in t.attach.iter().enumerate() {
                        if a.outward && a.base == b {
                            let dst = Vertex::Stage {
                                stage: 1,
                                local: a.local,
                            };
                            out.push(Edge {
                                id: EdgeId::Attach(i as u32),
                                src: v,
                                dst,
                                pot: a.pot,
                            });
                        }
                    }
                }
            }
            Vertex::Stage { stage, local } => {
                let Some(t) = &self.template else { return out };
                for (i, e) in t.intra.iter().enumerate() {
                    if e.src == local && t.applies(e.phase, stage) {
                        let dst = Vertex::Stage {
                            stage,
                            local: e.dst,
                        };
                        out.push(Edge {
                            id: EdgeId::Intra {
                                stage,
                                idx: i as u32,
                            },
                            src: v,
                            dst,
                            pot: e.pot,
                        });
                    }
                }
                for (i, e) in t.cross.iter().enumerate() {
                    if e.src != local {
                        continue;
                    }
                    match e.dir {
                        CrossDirection::Forward if t.applies(e.phase, stage) => {
                            let dst = Vertex::Stage {
                                stage: stage + 1,
                                local: e.dst,
                            };
                            out.push(Edge {
                                id: EdgeId::Cross {
                                    stage,
                                    idx: i as u32,
                                },
                                src: v,
                                dst,
                                pot: e.pot,
                            });
                        }
                        CrossDirection::Backward if stage >= 2 && t.applies(e.phase, stage - 1) => {
                            let dst = Vertex::Stage {
                                stage: stage - 1,
                                local: e.dst,
                            };
                            let id = EdgeId::Cross {
                                stage: stage - 1,
                                idx: i as u32,
                            };
                            out.push(Edge {
                                id,
                                src: v,
                                dst,
                                pot: e.pot,
                            });
                        }
                        _ => {}
                    }
                }
                if stage == 1 {
                    for (i, a) in t.attach.iter().enumerate() {
                        if !a.outward && a.local == local {
                            let dst = Vertex::Base(a.base);
                            out.push(Edge {
                                id: EdgeId::Attach(i as u32),
                                src: v,
                                dst,
                                pot: a.pot,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn in_edges(&self, v: Vertex) -> Vec<Edge> {
        let mut inc = Vec::new();
        match v {
            Vertex::Base(b) => {
                for &i in &self.base_in[b as usize] {
                    let e = &self.base_edges[i as usize];
                    inc.push(Edge {
                        id: EdgeId::Base(i),
                        src: Vertex::Base(e.src),
                        dst: v,
                        pot: e.pot,
                    });
                }
                if let Some(t) = &self.template {
                    for (i, a) in t.attach.iter().enumerate() {
                        if !a.outward && a.base == b {
                            let src = Vertex::Stage {
                                stage: 1,
                                local: a.local,
                            };
                            inc.push(Edge {
                                id: EdgeId::Attach(i as u32),
                                src,
                                dst: v,
                                pot: a.pot,
                            });
                        }
                    }
                }
            }
            Vertex::Stage { stage, local } => {
                let Some(t) = &self.template else { return inc };
                for (i, e) in t.intra.iter().enumerate() {
                    if e.dst == local && t.applies(e.phase, stage) {
                        let src = Vertex::Stage {
                            stage,
                            local: e.src,
                        };
                        inc.push(Edge {
                            id: EdgeId::Intra {
                                stage,
                                idx: i as u32,
                            },
                            src,
                            dst: v,
                            pot: e.pot,
                        });
                    }
                }
                for (i, e) in t.cross.iter().enumerate() {
                    if e.dst != local {
                        continue;
                    }
                    match e.dir {
                        CrossDirection::Forward if stage >= 2 && t.applies(e.phase, stage - 1) => {
                            let src = Vertex::Stage {
                                stage: stage - 1,
                                local: e.src,
                            };
                            let id = EdgeId::Cross {
                                stage: stage - 1,
                                idx: i as u32,
                            };
                            inc.push(Edge {
                                id,
                                src,
                                dst: v,
                                pot: e.pot,
                            });
                        }
                        CrossDirection::Backward if t.applies(e.phase, stage) => {
                            let src = Vertex::Stage {
                                stage: stage + 1,
                                local: e.src,
                            };
                            inc.push(Edge {
                                id: EdgeId::Cross {
                                    stage,
                                    idx: i as u32,
                                },
                                src,
                                dst: v,
                                pot: e.pot,
                            });
                        }
                        _ => {}
                    }
                }
                if stage == 1 {
                    for (i, a) in t.attach.iter().enumerate() {
                        if a.outward && a.local == local {
                            let src = Vertex::Base(a.base);
                            inc.push(Edge {
                                id: EdgeId::Attach(i as u32),
                                src,
                                dst: v,
                                pot: a.pot,
                            });
                        }
                    }
                }
            }
        }
        inc
    }

    /// Resolves an edge identifier to its endpoints.
    pub fn edge(&self, id: EdgeId) -> Option<Edge> {
        match id {
            EdgeId::Base(i) => {
                let e = self.base_edges.get(i as usize)?;
                Some(Edge {
                    id,
                    src: Vertex::Base(e.src),
                    dst: Vertex::Base(e.dst),
                    pot: e.pot,
                })
            }
            EdgeId::Attach(i) => {
                let a = self.template.as_ref()?.attach.get(i as usize)?;
                let (b, s) = (
                    Vertex::Base(a.base),
                    Vertex::Stage {
                        stage: 1,
                        local: a.local,
                    },
                );
                let (src, dst) = if a.outward { (b, s) } else { (s, b) };
                Some(Edge {
                    id,
                    src,
                    dst,
                    pot: a.pot,
                })
            }
            EdgeId::Intra { stage, idx } => {
                let t = self.template.as_ref()?;
                let e = t.intra.get(idx as usize)?;
                (stage >= 1 && t.applies(e.phase, stage)).then_some(Edge {
                    id,
                    src: Vertex::Stage {
                        stage,
                        local: e.src,
                    },
                    dst: Vertex::Stage {
                        stage,
                        local: e.dst,
                    },
                    pot: e.pot,
                })
            }
            EdgeId::Cross { stage, idx } => {
                let t = self.template.as_ref()?;
                let e = t.cross.get(idx as usize)?;
                if stage < 1 || !t.applies(e.phase, stage) {
                    return None;
                }
                let (lo, hi) = (stage, stage + 1);
                let (src, dst) = match e.dir {
                    CrossDirection::Forward => (
                        Vertex::Stage {
                            stage: lo,
                            local: e.src,
                        },
                        Vertex::Stage {
                            stage: hi,
                            local: e.dst,
                        },
                    ),
                    CrossDirection::Backward => (
                        Vertex::Stage {
                            stage: hi,
                            local: e.src,
                        },
                        Vertex::Stage {
                            stage: lo,
                            local: e.dst,
                        },
                    ),
                };
                Some(Edge {
                    id,
                    src,
                    dst,
                    pot: e.pot,
                })
            }
        }
    }

    pub fn edge_label(&self, id: EdgeId) -> String {
        match id {
            EdgeId::Base(i) => self.base_edges[i as usize].label.clone(),
            EdgeId::Attach(i) => self
                .template
                .as_ref()
                .map(|t| t.attach[i as usize].label.clone())
                .unwrap_or_default(),
            EdgeId::Intra { stage, idx } => {
                let t = self.template.as_ref().unwrap();
                format!(
                    "{}@{}",
                    t.intra[idx as usize].label,
                    stage + t.first_index - 1
                )
            }
            EdgeId::Cross { stage, idx } => {
                let t = self.template.as_ref().unwrap();
                format!(
                    "{}@{}",
                    t.cross[idx as usize].label,
                    stage + t.first_index - 1
                )
            }
        }
    }

    /// The same graph with every potential replaced by the constant 1.
    pub fn gauge(&self) -> GraphSpec {
        let doc = self.document.map_potentials(|_| {
            let mut m = std::collections::BTreeMap::new();
            m.insert("1".to_string(), "1/1".to_string());
            m
        });
        let mut doc = doc;
        doc.symbols.clear();
        GraphSpec::from_document(doc).expect("gauge rewrite keeps a valid document")
    }

    /// The same graph with every potential multiplied by `c`.
    pub fn scaled(&self, c: &rug::Rational) -> GraphSpec {
        let doc = self.document.map_potentials(|f| {
            f.iter()
                .map(|(k, v)| {
                    let q = crate::interval::parse_decimal_rational(v).expect("canonical rational");
                    (k.clone(), document::fmt_pq(&rug::Rational::from(&q * c)))
                })
                .collect()
        });
        GraphSpec::from_document(doc).expect("scaling keeps a valid document")
    }

    /// Canonical, byte-stable JSON text of this spec.
    pub fn to_canonical_json(&self) -> String {
        self.document.to_canonical_json()
    }
}
