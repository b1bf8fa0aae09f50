use super::{Edge, EdgeId, GraphSpec, Vertex};
use crate::error::{Error, Result};
use crate::symbolic::SymbolicReal;

/// A finite path given by its start vertex and edge sequence, with cached
/// endpoint and total potential.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathPrefix {
    start: Vertex,
    edges: Vec<EdgeId>,
    end: Vertex,
    value: SymbolicReal,
}

impl PathPrefix {
    /// The length-zero path at `v`.
    pub fn vertex(spec: &GraphSpec, v: Vertex) -> PathPrefix {
        PathPrefix {
            start: v,
            edges: Vec::new(),
            end: v,
            value: SymbolicReal::zero(spec.basis().len()),
        }
    }

    pub fn from_edges(spec: &GraphSpec, start: Vertex, edges: &[EdgeId]) -> Result<PathPrefix> {
        let mut p = PathPrefix::vertex(spec, start);
        for &id in edges {
            let e = spec
                .edge(id)
                .ok_or_else(|| Error::Domain(format!("no edge {id:?}")))?;
            p = p.extend(spec, &e)?;
        }
        Ok(p)
    }

    pub fn extend(&self, spec: &GraphSpec, e: &Edge) -> Result<PathPrefix> {
        if e.src != self.end {
            return Err(Error::Domain(format!(
                "edge {} does not start at {}",
                spec.edge_label(e.id),
                spec.vertex_name(self.end)
            )));
        }
        let mut edges = self.edges.clone();
        edges.push(e.id);
        Ok(PathPrefix {
            start: self.start,
            edges,
            end: e.dst,
            value: self.value.add(spec.potential(e)),
        })
    }

    pub fn start(&self) -> Vertex {
        self.start
    }

    pub fn end(&self) -> Vertex {
        self.end
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn value(&self) -> &SymbolicReal {
        &self.value
    }

    /// The path formed by the first `n` edges.
    pub fn truncated(&self, spec: &GraphSpec, n: usize) -> PathPrefix {
        PathPrefix::from_edges(spec, self.start, &self.edges[..n.min(self.edges.len())])
            .expect("prefix of a valid path")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::builtin;

    #[test]
    fn loop_value_and_endpoint() {
        let g = builtin("G5").unwrap();
        let t1 = g.vertex_by_name("t1").unwrap();
        let mut p = PathPrefix::vertex(&g, t1);
        assert!(p.value().is_zero());
        for target in ["t2", "d2", "d1", "t1"] {
            let w = g.vertex_by_name(target).unwrap();
            let e = g
                .out_edges(p.end())
                .into_iter()
                .find(|e| e.dst == w)
                .unwrap();
            p = p.extend(&g, &e).unwrap();
        }
        assert_eq!(p.end(), t1);
        assert_eq!(p.len(), 4);
        assert_eq!(p.value().coeffs()[0], 4);
        assert_eq!(p.truncated(&g, 2).end(), g.vertex_by_name("d2").unwrap());
    }

    #[test]
    fn non_composable_edge_rejected() {
        let g = builtin("G5").unwrap();
        let d1 = g.vertex_by_name("d1").unwrap();
        let t1 = g.vertex_by_name("t1").unwrap();
        let e = g.out_edges(t1)[0];
        assert!(PathPrefix::vertex(&g, d1).extend(&g, &e).is_err());
    }
}
