//! JSON document form of a graph specification.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rug::Rational;
use serde::{Deserialize, Serialize};

use super::{AttachEdge, BaseEdge, CrossEdge, GraphSpec, StageEdge, Template};
use crate::error::{Error, Result};
use crate::interval::parse_decimal_rational;
use crate::symbolic::{Basis, SymbolicReal};

/// Largest parallel-edge count accepted for a single entry.
pub const MAX_MULTIPLICITY: u32 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symbols: Vec<SymbolDoc>,
    pub base: BaseDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub v_inf: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolDoc {
    pub name: String,
    pub witness: String,
    #[serde(default = "yes")]
    pub independent: bool,
}

fn yes() -> bool {
    true
}

fn one_u32() -> u32 {
    1
}

fn one_u64() -> u64 {
    1
}

fn is_one_u32(x: &u32) -> bool {
    *x == 1
}

fn is_one_u64(x: &u64) -> bool {
    *x == 1
}

pub type PotentialDoc = BTreeMap<String, String>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseDoc {
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub src: String,
    pub dst: String,
    #[serde(default)]
    pub f: PotentialDoc,
    #[serde(default = "one_u32", skip_serializing_if = "is_one_u32")]
    pub count: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEdgeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub src: String,
    pub dst: String,
    #[serde(default)]
    pub f: PotentialDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<usize>,
    #[serde(default = "one_u32", skip_serializing_if = "is_one_u32")]
    pub count: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossDirection {
    /// Stage `k` to stage `k + 1`.
    Forward,
    /// Stage `k + 1` to stage `k`.
    Backward,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossEdgeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub src: String,
    pub dst: String,
    pub dir: CrossDirection,
    #[serde(default)]
    pub f: PotentialDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<usize>,
    #[serde(default = "one_u32", skip_serializing_if = "is_one_u32")]
    pub count: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateDoc {
    pub period: usize,
    /// Index used in the name of the first stage's vertices.
    #[serde(default = "one_u64", skip_serializing_if = "is_one_u64")]
    pub first_index: u64,
    pub stage_vertices: Vec<String>,
    #[serde(default)]
    pub stage_edges: Vec<StageEdgeDoc>,
    #[serde(default)]
    pub cross_edges: Vec<CrossEdgeDoc>,
    #[serde(default)]
    pub attach_edges: Vec<EdgeDoc>,
}

/// Formats a rational as `p/q`.
pub(crate) fn fmt_pq(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

impl SpecDocument {
    pub fn from_json(text: &str) -> Result<SpecDocument> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    /// Pretty JSON with sorted keys and `p/q` rationals.
    pub fn to_canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("document serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }

    pub(crate) fn map_potentials(&self, f: impl Fn(&PotentialDoc) -> PotentialDoc) -> SpecDocument {
        let mut d = self.clone();
        for e in &mut d.base.edges {
            e.f = f(&e.f);
        }
        if let Some(t) = &mut d.template {
            for e in &mut t.stage_edges {
                e.f = f(&e.f);
            }
            for e in &mut t.cross_edges {
                e.f = f(&e.f);
            }
            for e in &mut t.attach_edges {
                e.f = f(&e.f);
            }
        }
        d
    }
}

struct Resolver {
    basis: Basis,
    substitutions: HashMap<String, Rational>,
    table: Vec<SymbolicReal>,
    lookup: HashMap<SymbolicReal, u32>,
}

impl Resolver {
    fn new(symbols: &[SymbolDoc]) -> Result<Self> {
        let mut basis = Basis::default();
        let mut substitutions = HashMap::new();
        for s in symbols {
            if s.name.is_empty() || s.name == "1" {
                return Err(Error::Symbol(format!("invalid symbol name {:?}", s.name)));
            }
            let w = parse_decimal_rational(&s.witness).map_err(|_| {
                Error::Symbol(format!("bad witness {:?} for {}", s.witness, s.name))
            })?;
            if substitutions.contains_key(&s.name) {
                return Err(Error::Symbol(format!("duplicate symbol {:?}", s.name)));
            }
            if s.independent {
                basis.push(&s.name, w)?;
            } else {
                if basis.index_of(&s.name).is_some() {
                    return Err(Error::Symbol(format!("duplicate symbol {:?}", s.name)));
                }
                substitutions.insert(s.name.clone(), w);
            }
        }
        Ok(Resolver {
            basis,
            substitutions,
            table: Vec::new(),
            lookup: HashMap::new(),
        })
    }

    fn resolve(&mut self, f: &PotentialDoc) -> Result<(u32, PotentialDoc)> {
        let mut x = SymbolicReal::zero(self.basis.len());
        let mut coeffs = x.coeffs().to_vec();
        let mut canon = PotentialDoc::new();
        for (name, text) in f {
            let c = parse_decimal_rational(text)
                .map_err(|_| Error::Schema(format!("bad coefficient {text:?} for {name:?}")))?;
            if name == "1" {
                coeffs[0] += &c;
            } else if let Some(i) = self.basis.index_of(name) {
                coeffs[i] += &c;
            } else if let Some(w) = self.substitutions.get(name) {
                coeffs[0] += Rational::from(&c * w);
            } else {
                return Err(Error::Symbol(format!("undeclared symbol {name:?}")));
            }
            if c != 0 {
                canon.insert(name.clone(), fmt_pq(&c));
            }
        }
        x = SymbolicReal::from_coeffs(coeffs);
        let next = self.table.len() as u32;
        let idx = *self.lookup.entry(x.clone()).or_insert(next);
        if idx == next {
            self.table.push(x);
        }
        Ok((idx, canon))
    }
}

fn check_count(count: u32, what: &str) -> Result<()> {
    if count == 0 || count > MAX_MULTIPLICITY {
        return Err(Error::Multiplicity(format!(
            "{what}: count {count} outside 1..={MAX_MULTIPLICITY}"
        )));
    }
    Ok(())
}

fn labels(id: &Option<String>, fallback: String, count: u32) -> Vec<String> {
    let stem = id.clone().unwrap_or(fallback);
    if count == 1 {
        vec![stem]
    } else {
        (0..count).map(|j| format!("{stem}#{j}")).collect()
    }
}

impl GraphSpec {
    pub fn from_json(text: &str) -> Result<GraphSpec> {
        GraphSpec::from_document(SpecDocument::from_json(text)?)
    }

    /// Validates and resolves a document. The stored document is normalized
    /// so that serializing and reparsing is the identity.
    pub fn from_document(mut doc: SpecDocument) -> Result<GraphSpec> {
        let mut res = Resolver::new(&doc.symbols)?;

        let mut base_index = HashMap::new();
        for (i, v) in doc.base.vertices.iter().enumerate() {
            if v.is_empty() {
                return Err(Error::Schema("empty vertex name".into()));
            }
            if base_index.insert(v.clone(), i as u32).is_some() {
                return Err(Error::Schema(format!("duplicate vertex {v:?}")));
            }
        }
        let nb = doc.base.vertices.len();
        let base_id = |name: &str| -> Result<u32> {
            base_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Schema(format!("unknown base vertex {name:?}")))
        };

        let mut base_edges = Vec::new();
        let mut base_out = vec![Vec::new(); nb];
        let mut base_in = vec![Vec::new(); nb];
        for (k, e) in doc.base.edges.iter_mut().enumerate() {
            check_count(e.count, &format!("base edge {}", k))?;
            let (s, d) = (base_id(&e.src)?, base_id(&e.dst)?);
            let (pot, canon) = res.resolve(&e.f)?;
            e.f = canon;
            for label in labels(&e.id, format!("{}->{}", e.src, e.dst), e.count) {
                let i = base_edges.len() as u32;
                base_out[s as usize].push(i);
                base_in[d as usize].push(i);
                base_edges.push(BaseEdge {
                    src: s,
                    dst: d,
                    pot,
                    label,
                });
            }
        }

        let template = match doc.template.as_mut() {
            None => None,
            Some(t) => Some(resolve_template(t, &base_index, &mut res)?),
        };

        let mut v_inf = BTreeSet::new();
        for v in &doc.v_inf {
            v_inf.insert(base_id(v)?);
        }

        if let Some(t) = &template {
            check_names(&doc.base.vertices, t)?;
        }

        Ok(GraphSpec {
            name: doc.name.clone(),
            basis: res.basis,
            potentials: res.table,
            base_names: doc.base.vertices.clone(),
            base_index,
            base_edges,
            base_out,
            base_in,
            template,
            v_inf,
            document: doc,
        })
    }
}

fn resolve_template(
    t: &mut TemplateDoc,
    base_index: &HashMap<String, u32>,
    res: &mut Resolver,
) -> Result<Template> {
    if t.period == 0 {
        return Err(Error::Schema("template period must be at least 1".into()));
    }
    if t.first_index == 0 {
        return Err(Error::Schema("first_index must be at least 1".into()));
    }
    if t.stage_vertices.is_empty() {
        return Err(Error::Schema("template has no stage vertices".into()));
    }
    let mut local_index = HashMap::new();
    for (i, v) in t.stage_vertices.iter().enumerate() {
        if v.is_empty() || v.ends_with(|c: char| c.is_ascii_digit()) {
            return Err(Error::Schema(format!(
                "stage vertex name {v:?} must be non-empty and not end in a digit"
            )));
        }
        if local_index.insert(v.clone(), i as u32).is_some() {
            return Err(Error::Schema(format!("duplicate stage vertex {v:?}")));
        }
    }
    let local_id = |name: &str| -> Result<u32> {
        local_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Schema(format!("unknown stage vertex {name:?}")))
    };
    let check_phase = |p: Option<usize>| -> Result<()> {
        match p {
            Some(p) if p >= t.period => Err(Error::Schema(format!(
                "phase {p} not below period {}",
                t.period
            ))),
            _ => Ok(()),
        }
    };

    let mut intra = Vec::new();
    for (k, e) in t.stage_edges.iter_mut().enumerate() {
        check_count(e.count, &format!("stage edge {k}"))?;
        check_phase(e.phase)?;
        let (s, d) = (local_id(&e.src)?, local_id(&e.dst)?);
        let (pot, canon) = res.resolve(&e.f)?;
        e.f = canon;
        for label in labels(&e.id, format!("{}->{}", e.src, e.dst), e.count) {
            intra.push(StageEdge {
                src: s,
                dst: d,
                pot,
                phase: e.phase,
                label,
            });
        }
    }
    let mut cross = Vec::new();
    for (k, e) in t.cross_edges.iter_mut().enumerate() {
        check_count(e.count, &format!("cross edge {k}"))?;
        check_phase(e.phase)?;
        let (s, d) = (local_id(&e.src)?, local_id(&e.dst)?);
        let (pot, canon) = res.resolve(&e.f)?;
        e.f = canon;
        let arrow = match e.dir {
            CrossDirection::Forward => "=>",
            CrossDirection::Backward => "<=",
        };
        for label in labels(&e.id, format!("{}{arrow}{}", e.src, e.dst), e.count) {
            cross.push(CrossEdge {
                src: s,
                dst: d,
                pot,
                dir: e.dir,
                phase: e.phase,
                label,
            });
        }
    }
    let mut attach = Vec::new();
    for (k, e) in t.attach_edges.iter_mut().enumerate() {
        check_count(e.count, &format!("attach edge {k}"))?;
        let (base, local, outward) = match (base_index.get(&e.src), local_index.get(&e.dst)) {
            (Some(&b), Some(&l)) => (b, l, true),
            _ => match (local_index.get(&e.src), base_index.get(&e.dst)) {
                (Some(&l), Some(&b)) => (b, l, false),
                _ => {
                    return Err(Error::Schema(format!(
                        "attach edge {}->{} must join a base vertex and a stage vertex",
                        e.src, e.dst
                    )))
                }
            },
        };
        let (pot, canon) = res.resolve(&e.f)?;
        e.f = canon;
        for label in labels(&e.id, format!("{}->{}", e.src, e.dst), e.count) {
            attach.push(AttachEdge {
                base,
                local,
                pot,
                outward,
                label,
            });
        }
    }
    Ok(Template {
        period: t.period,
        first_index: t.first_index,
        locals: t.stage_vertices.clone(),
        intra,
        cross,
        attach,
    })
}

/// Concrete names must be unambiguous: no base name may parse as a stage
/// vertex at an existing stage, and no local name may be a prefix of another
/// followed by digits.
fn check_names(base: &[String], t: &Template) -> Result<()> {
    let parses_as_stage = |name: &str, skip: Option<usize>| {
        t.locals.iter().enumerate().any(|(i, l)| {
            Some(i) != skip
                && name
                    .strip_prefix(l.as_str())
                    .filter(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
                    .and_then(|rest| rest.parse::<u64>().ok())
                    .is_some_and(|idx| idx >= t.first_index)
        })
    };
    for b in base {
        if parses_as_stage(b, None) {
            return Err(Error::Schema(format!(
                "base vertex {b:?} collides with a stage vertex name"
            )));
        }
    }
    for (i, l) in t.locals.iter().enumerate() {
        for (j, m) in t.locals.iter().enumerate() {
            if i != j
                && m.starts_with(l.as_str())
                && m[l.len()..].starts_with(|c: char| c.is_ascii_digit())
            {
                return Err(Error::Schema(format!(
                    "stage vertex names {l:?} and {m:?} are ambiguous"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "name": "two-cycle",
        "symbols": [{"name": "s", "witness": "1.5"}, {"name": "r", "witness": "2", "independent": false}],
        "base": {
            "vertices": ["a", "b"],
            "edges": [
                {"src": "a", "dst": "b", "f": {"1": "1", "s": "1/2"}},
                {"src": "b", "dst": "a", "f": {"r": "3"}, "count": 2}
            ]
        }
    }"#;

    #[test]
    fn parses_and_resolves_symbols() {
        let g = GraphSpec::from_json(SMALL).unwrap();
        assert_eq!(g.basis().len(), 2);
        assert_eq!(g.base_edges.len(), 3);
        let p = &g.potentials()[g.base_edges[1].pot as usize];
        assert_eq!(p.coeffs()[0], 6);
        assert_eq!(p.coeffs()[1], 0);
    }

    #[test]
    fn canonical_round_trip_is_identity() {
        let g = GraphSpec::from_json(SMALL).unwrap();
        let text = g.to_canonical_json();
        let g2 = GraphSpec::from_json(&text).unwrap();
        assert_eq!(g2.to_canonical_json(), text);
        assert!(text.contains("\"1/2\""));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(GraphSpec::from_json("{}"), Err(Error::Schema(_))));
        let bad = SMALL.replace("\"dst\": \"b\"", "\"dst\": \"zz\"");
        assert!(matches!(GraphSpec::from_json(&bad), Err(Error::Schema(_))));
        let undeclared = SMALL.replace("\"s\": \"1/2\"", "\"q\": \"1/2\"");
        assert!(matches!(
            GraphSpec::from_json(&undeclared),
            Err(Error::Symbol(_))
        ));
        let zero = SMALL.replace("\"count\": 2", "\"count\": 0");
        assert!(matches!(
            GraphSpec::from_json(&zero),
            Err(Error::Multiplicity(_))
        ));
    }
}
