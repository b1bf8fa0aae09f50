//! Built-in example graphs.
//!
//! * `G5`: two rows `t_n`, `d_n`; two parallel edges `t_n → t_{n+1}`, a drop
//!   `t_n → d_n` for `n ≥ 2`, the return row `d_{n+1} → d_n` and `d_1 → t_1`.
//! * `PINWHEEL3`: a center `1` with three ladder arms. Arm `a` has the chain
//!   `a_k → a_{k+1}`, rungs `a_k → ar_k`, returns `ar_{k+1} → ar_k`, and the
//!   gluing edges `1 → a_1`, `ar_1 → 1`.
//! * `AMALGAM`: `G5` and `PINWHEEL3` glued by identifying `t_1` with the center.

use std::collections::BTreeMap;

use rug::Rational;

use super::document::{
    fmt_pq, BaseDoc, CrossDirection, CrossEdgeDoc, EdgeDoc, PotentialDoc, SpecDocument,
    StageEdgeDoc, SymbolDoc, TemplateDoc,
};
use super::GraphSpec;
use crate::error::{Error, Result};

/// One value of a stepped potential: a rational constant, or an independent
/// symbol carrying the rational as its witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coefficient {
    pub value: Rational,
    pub independent: bool,
}

impl Coefficient {
    pub fn rational(num: i64, den: i64) -> Self {
        Coefficient {
            value: Rational::from((num, den)),
            independent: false,
        }
    }

    pub fn symbol(witness: Rational) -> Self {
        Coefficient {
            value: witness,
            independent: true,
        }
    }
}

/// Potential choices for the built-in graphs.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Potential {
    /// The example's own potential: constant 1 on `G5` and `PINWHEEL3`,
    /// steps `(2, 1)` on `AMALGAM`.
    #[default]
    Default,
    /// Constant 1 on every edge.
    Gauge,
    /// `a1`, `a2` on the two parallel ray edges, 0 on the rest of the doubled
    /// ray, 1 on pinwheel edges.
    Stepped(Coefficient, Coefficient),
}

const NAMES: [&str; 3] = ["G5", "PINWHEEL3", "AMALGAM"];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

pub fn builtin(name: &str) -> Result<GraphSpec> {
    builtin_with(name, &Potential::Default)
}

pub fn builtin_with(name: &str, potential: &Potential) -> Result<GraphSpec> {
    let key = name.to_ascii_uppercase();
    let potential = match (key.as_str(), potential) {
        ("AMALGAM", Potential::Default) => {
            Potential::Stepped(Coefficient::rational(2, 1), Coefficient::rational(1, 1))
        }
        (_, Potential::Default) => Potential::Gauge,
        (_, p) => p.clone(),
    };
    let doc = match key.as_str() {
        "G5" => g5(&potential),
        "PINWHEEL3" => {
            if matches!(potential, Potential::Stepped(..)) {
                return Err(Error::Domain(
                    "PINWHEEL3 has no doubled ray for a stepped potential".into(),
                ));
            }
            pinwheel()
        }
        "AMALGAM" => amalgam(&potential),
        _ => return Err(Error::UnknownExample(name.to_string())),
    };
    GraphSpec::from_document(doc)
}

fn unit() -> PotentialDoc {
    BTreeMap::from([("1".to_string(), "1/1".to_string())])
}

struct RayValues {
    symbols: Vec<SymbolDoc>,
    a1: PotentialDoc,
    a2: PotentialDoc,
    rest: PotentialDoc,
}

fn ray_values(p: &Potential) -> RayValues {
    match p {
        Potential::Stepped(c1, c2) => {
            let mut symbols = Vec::new();
            let mut coef = |name: &str, c: &Coefficient| {
                if c.independent {
                    symbols.push(SymbolDoc {
                        name: name.into(),
                        witness: fmt_pq(&c.value),
                        independent: true,
                    });
                    BTreeMap::from([(name.to_string(), "1/1".to_string())])
                } else if c.value == 0 {
                    PotentialDoc::new()
                } else {
                    BTreeMap::from([("1".to_string(), fmt_pq(&c.value))])
                }
            };
            let a1 = coef("a1", c1);
            let a2 = coef("a2", c2);
            RayValues {
                symbols,
                a1,
                a2,
                rest: PotentialDoc::new(),
            }
        }
        _ => RayValues {
            symbols: Vec::new(),
            a1: unit(),
            a2: unit(),
            rest: unit(),
        },
    }
}

fn edge(id: Option<&str>, src: &str, dst: &str, f: PotentialDoc) -> EdgeDoc {
    EdgeDoc {
        id: id.map(str::to_string),
        src: src.into(),
        dst: dst.into(),
        f,
        count: 1,
    }
}

fn intra(src: &str, dst: &str, f: PotentialDoc) -> StageEdgeDoc {
    StageEdgeDoc {
        id: None,
        src: src.into(),
        dst: dst.into(),
        f,
        phase: None,
        count: 1,
    }
}

fn cross(
    id: Option<&str>,
    src: &str,
    dst: &str,
    dir: CrossDirection,
    f: PotentialDoc,
) -> CrossEdgeDoc {
    CrossEdgeDoc {
        id: id.map(str::to_string),
        src: src.into(),
        dst: dst.into(),
        dir,
        f,
        phase: None,
        count: 1,
    }
}

/// Ray pieces of `G5` with `t1`, `d1` in the base and stages named from 2.
fn g5_pieces(v: &RayValues, tpl: &mut TemplateDoc, base: &mut BaseDoc) {
    base.vertices.extend(["t1".to_string(), "d1".to_string()]);
    base.edges.push(edge(None, "d1", "t1", v.rest.clone()));
    tpl.stage_vertices
        .extend(["t".to_string(), "d".to_string()]);
    tpl.stage_edges.push(intra("t", "d", v.rest.clone()));
    tpl.cross_edges.push(cross(
        Some("e1"),
        "t",
        "t",
        CrossDirection::Forward,
        v.a1.clone(),
    ));
    tpl.cross_edges.push(cross(
        Some("e2"),
        "t",
        "t",
        CrossDirection::Forward,
        v.a2.clone(),
    ));
    tpl.cross_edges.push(cross(
        None,
        "d",
        "d",
        CrossDirection::Backward,
        v.rest.clone(),
    ));
    tpl.attach_edges
        .push(edge(Some("e1"), "t1", "t", v.a1.clone()));
    tpl.attach_edges
        .push(edge(Some("e2"), "t1", "t", v.a2.clone()));
    tpl.attach_edges.push(edge(None, "d", "d1", v.rest.clone()));
}

fn pinwheel_pieces(center: &str, tpl: &mut TemplateDoc) {
    for arm in ["a", "b", "c"] {
        let back = format!("{arm}r");
        tpl.stage_vertices.extend([arm.to_string(), back.clone()]);
        tpl.stage_edges.push(intra(arm, &back, unit()));
        tpl.cross_edges
            .push(cross(None, arm, arm, CrossDirection::Forward, unit()));
        tpl.cross_edges
            .push(cross(None, &back, &back, CrossDirection::Backward, unit()));
        tpl.attach_edges.push(edge(None, center, arm, unit()));
        tpl.attach_edges.push(edge(None, &back, center, unit()));
    }
}

fn empty_template(first_index: u64) -> TemplateDoc {
    TemplateDoc {
        period: 1,
        first_index,
        stage_vertices: Vec::new(),
        stage_edges: Vec::new(),
        cross_edges: Vec::new(),
        attach_edges: Vec::new(),
    }
}

fn g5(p: &Potential) -> SpecDocument {
    let v = ray_values(p);
    let mut base = BaseDoc {
        vertices: Vec::new(),
        edges: Vec::new(),
    };
    let mut tpl = empty_template(2);
    g5_pieces(&v, &mut tpl, &mut base);
    SpecDocument {
        name: "G5".into(),
        symbols: v.symbols,
        base,
        template: Some(tpl),
        v_inf: Vec::new(),
    }
}

fn pinwheel() -> SpecDocument {
    let base = BaseDoc {
        vertices: vec!["1".into()],
        edges: Vec::new(),
    };
    let mut tpl = empty_template(1);
    pinwheel_pieces("1", &mut tpl);
    SpecDocument {
        name: "PINWHEEL3".into(),
        symbols: Vec::new(),
        base,
        template: Some(tpl),
        v_inf: Vec::new(),
    }
}

fn amalgam(p: &Potential) -> SpecDocument {
    let v = ray_values(p);
    let mut base = BaseDoc {
        vertices: Vec::new(),
        edges: Vec::new(),
    };
    let mut tpl = empty_template(2);
    g5_pieces(&v, &mut tpl, &mut base);
    pinwheel_pieces("t1", &mut tpl);
    SpecDocument {
        name: "AMALGAM".into(),
        symbols: v.symbols,
        base,
        template: Some(tpl),
        v_inf: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    #[test]
    fn g5_shape() {
        let g = builtin("G5").unwrap();
        assert_eq!(g.kind(), GraphKind::RayTemplate);
        assert_eq!(g.template().unwrap().period(), 1);
        let t3 = g.vertex_by_name("t3").unwrap();
        let t4 = g.vertex_by_name("t4").unwrap();
        let d3 = g.vertex_by_name("d3").unwrap();
        let out = g.out_edges(t3);
        assert_eq!(out.iter().filter(|e| e.dst == t4).count(), 2);
        assert_eq!(out.iter().filter(|e| e.dst == d3).count(), 1);
        let t1 = g.vertex_by_name("t1").unwrap();
        assert!(g.out_edges(t1).iter().all(|e| g.vertex_name(e.dst) == "t2"));
        assert_eq!(g.vertex_name(g.out_edges(d3)[0].dst), "d2");
    }

    #[test]
    fn pinwheel_arms() {
        let g = builtin("PINWHEEL3").unwrap();
        assert_eq!(g.template().unwrap().arms().len(), 3);
        let center = g.vertex_by_name("1").unwrap();
        assert_eq!(g.out_edges(center).len(), 3);
        assert_eq!(g.in_edges(center).len(), 3);
    }

    #[test]
    fn amalgam_glues_at_t1() {
        let g = builtin("AMALGAM").unwrap();
        let t1 = g.vertex_by_name("t1").unwrap();
        assert_eq!(g.out_edges(t1).len(), 5);
        assert_eq!(g.template().unwrap().arms().len(), 4);
        assert!(g.vertex_by_name("a2").is_ok());
    }

    #[test]
    fn unknown_and_case() {
        assert!(matches!(builtin("K4"), Err(Error::UnknownExample(_))));
        assert!(builtin("g5").is_ok());
    }

    #[test]
    fn export_round_trip() {
        for name in builtin_names() {
            let g = builtin(name).unwrap();
            let text = g.to_canonical_json();
            assert_eq!(
                GraphSpec::from_json(&text).unwrap().to_canonical_json(),
                text
            );
        }
    }
}
