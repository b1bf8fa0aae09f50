use std::collections::{HashMap, HashSet, VecDeque};

use super::{Edge, GraphSpec, Vertex};
use crate::error::{Error, Result};

/// Finite window of a graph around a root: every vertex within directed
/// distance `radius` of the root, forward or backward, with all edges joining
/// two such vertices.
#[derive(Clone, Debug)]
pub struct Truncation {
    root: usize,
    radius: usize,
    vertices: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    edges: Vec<Edge>,
    out: Vec<Vec<u32>>,
    inc: Vec<Vec<u32>>,
    boundary: Vec<usize>,
}

fn bfs(spec: &GraphSpec, root: Vertex, radius: usize, forward: bool) -> HashSet<Vertex> {
    let mut seen = HashSet::from([root]);
    let mut queue = VecDeque::from([(root, 0usize)]);
    while let Some((v, d)) = queue.pop_front() {
        if d == radius {
            continue;
        }
        let next = if forward {
            spec.out_edges(v)
        } else {
            spec.in_edges(v)
        };
        for e in next {
            let w = if forward { e.dst } else { e.src };
            if seen.insert(w) {
                queue.push_back((w, d + 1));
            }
        }
    }
    seen
}

/// Builds the radius-`radius` window around `root`. Vertices are listed in
/// the canonical [`Vertex`] order.
pub fn truncate(spec: &GraphSpec, root: Vertex, radius: usize) -> Result<Truncation> {
    if radius == 0 {
        return Err(Error::Domain("truncation radius must be at least 1".into()));
    }
    if !spec.contains_vertex(root) {
        return Err(Error::UnknownVertex(format!("{root:?}")));
    }
    let mut set = bfs(spec, root, radius, true);
    set.extend(bfs(spec, root, radius, false));
    let mut vertices: Vec<Vertex> = set.into_iter().collect();
    vertices.sort();
    let index: HashMap<Vertex, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let mut edges = Vec::new();
    let mut out = vec![Vec::new(); vertices.len()];
    let mut inc = vec![Vec::new(); vertices.len()];
    let mut on_boundary = vec![false; vertices.len()];
    for (i, &v) in vertices.iter().enumerate() {
        for e in spec.out_edges(v) {
            match index.get(&e.dst) {
                Some(&j) => {
                    let k = edges.len() as u32;
                    out[i].push(k);
                    inc[j].push(k);
                    edges.push(e);
                }
                None => on_boundary[i] = true,
            }
        }
        if spec.in_edges(v).iter().any(|e| !index.contains_key(&e.src)) {
            on_boundary[i] = true;
        }
    }
    let boundary = (0..vertices.len()).filter(|&i| on_boundary[i]).collect();
    Ok(Truncation {
        root: index[&root],
        radius,
        vertices,
        index,
        edges,
        out,
        inc,
        boundary,
    })
}

impl Truncation {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vertex {
        self.vertices[i]
    }

    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Indices into [`Truncation::edges`] leaving vertex `i`.
    pub fn out_edges(&self, i: usize) -> &[u32] {
        &self.out[i]
    }

    pub fn in_edges(&self, i: usize) -> &[u32] {
        &self.inc[i]
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_interior(&self, i: usize) -> bool {
        self.boundary.binary_search(&i).is_err()
    }

    pub fn target(&self, e: u32) -> usize {
        self.index[&self.edges[e as usize].dst]
    }

    pub fn source(&self, e: u32) -> usize {
        self.index[&self.edges[e as usize].src]
    }

    /// Compact adjacency for hot loops: `(target index, potential index)` per out-edge.
    pub(crate) fn adjacency(&self) -> Vec<Vec<(u32, u32)>> {
        self.out
            .iter()
            .map(|es| {
                es.iter()
                    .map(|&e| {
                        (
                            self.index[&self.edges[e as usize].dst] as u32,
                            self.edges[e as usize].pot,
                        )
                    })
                    .collect()
            })
            .collect()
    }
}
