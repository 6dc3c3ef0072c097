//! Deterministic 3-coloring of pseudoforests: undirected graphs whose
//! components each carry at most one cycle (|E(C)| <= |V(C)|).
//!
//! The dependency graphs built by the solver always satisfy this bound, so a
//! proper coloring with three colors exists and one color class covers at
//! least a third of the vertices.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::instance::VertexId;

/// Undirected graph with deduplicated edges, at most one per unordered pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseGraph {
    vertices: BTreeSet<VertexId>,
    edges: BTreeSet<(VertexId, VertexId)>,
}

impl SparseGraph {
    pub fn new() -> Self {
        SparseGraph::default()
    }

    pub fn add_vertex(&mut self, v: VertexId) {
        self.vertices.insert(v);
    }

    /// Insert an edge, normalizing the endpoint order; parallel directed
    /// edges (u,v) and (v,u) collapse to the same undirected edge.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) {
        assert_ne!(u, v, "self-loops are not representable");
        self.vertices.insert(u);
        self.vertices.insert(v);
        self.edges.insert((u.min(v), u.max(v)));
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn adjacency(&self) -> BTreeMap<VertexId, Vec<VertexId>> {
        let mut adj: BTreeMap<VertexId, Vec<VertexId>> =
            self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for &(u, v) in &self.edges {
            adj.get_mut(&u).unwrap().push(v);
            adj.get_mut(&v).unwrap().push(u);
        }
        for neighbors in adj.values_mut() {
            neighbors.sort_unstable();
        }
        adj
    }
}

/// Total assignment of colors {0, 1, 2}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    map: BTreeMap<VertexId, u8>,
}

impl Coloring {
    pub fn get(&self, v: VertexId) -> Option<u8> {
        self.map.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, u8)> + '_ {
        self.map.iter().map(|(&v, &c)| (v, c))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_map(&self) -> &BTreeMap<VertexId, u8> {
        &self.map
    }

    pub fn from_map(map: BTreeMap<VertexId, u8>) -> Self {
        Coloring { map }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ColoringError {
    /// A component with more edges than vertices cannot come out of a correct
    /// dependency-graph construction; treat it as a caller bug.
    #[error("component containing vertex {vertex} has {edges} edges over {vertices} vertices")]
    ComponentTooDense { vertex: VertexId, vertices: usize, edges: usize },
}

/// Produce a deterministic proper 3-coloring.
///
/// Per component, discovered by BFS from the lowest vertex id with sorted
/// adjacency: the unique non-tree edge (present iff the component carries a
/// cycle) is removed, the remaining spanning tree is 2-colored by BFS depth
/// parity from the lowest id, and if the removed edge comes back
/// monochromatic its higher endpoint is recolored to color 2.
pub fn three_color(g: &SparseGraph) -> Result<Coloring, ColoringError> {
    let adj = g.adjacency();
    let mut colors: BTreeMap<VertexId, u8> = BTreeMap::new();
    let mut comp_of: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    let mut comp_size: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut tree_edges: BTreeSet<(VertexId, VertexId)> = BTreeSet::new();

    for &start in &g.vertices {
        if comp_of.contains_key(&start) {
            continue;
        }
        let mut size = 0usize;
        let mut queue = VecDeque::from([start]);
        comp_of.insert(start, start);
        colors.insert(start, 0);
        while let Some(u) = queue.pop_front() {
            size += 1;
            let next_color = 1 - colors[&u];
            for &w in &adj[&u] {
                if let std::collections::btree_map::Entry::Vacant(slot) = comp_of.entry(w) {
                    slot.insert(start);
                    colors.insert(w, next_color);
                    tree_edges.insert((u.min(w), u.max(w)));
                    queue.push_back(w);
                }
            }
        }
        comp_size.insert(start, size);
    }

    // Each component leaves at most one non-tree edge; more means it is
    // denser than a pseudoforest allows.
    let mut comp_edges: BTreeMap<VertexId, usize> = BTreeMap::new();
    for &(u, v) in &g.edges {
        let comp = comp_of[&u];
        let count = comp_edges.entry(comp).or_insert(0);
        *count += 1;
        if *count > comp_size[&comp] {
            return Err(ColoringError::ComponentTooDense {
                vertex: comp,
                vertices: comp_size[&comp],
                edges: *count,
            });
        }
        if !tree_edges.contains(&(u, v)) && colors[&u] == colors[&v] {
            colors.insert(u.max(v), 2);
        }
    }

    Ok(Coloring { map: colors })
}

/// The color class of maximum cardinality; ties break toward the lowest
/// color index. By pigeonhole its size is at least ceil(|V|/3).
pub fn largest_color_class(coloring: &Coloring) -> BTreeSet<VertexId> {
    let mut classes: [BTreeSet<VertexId>; 3] = Default::default();
    for (v, c) in coloring.iter() {
        classes[c as usize].insert(v);
    }
    let best = (0..3).max_by_key(|&c| (classes[c].len(), std::cmp::Reverse(c))).unwrap();
    std::mem::take(&mut classes[best])
}
