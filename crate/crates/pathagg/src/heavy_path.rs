//! Heavy path decomposition of in-trees, and the tree-shaped special case it
//! solves directly: pick each chain's arcs from the proposed path of the
//! chain's deepest vertex, so every terminal's root path crosses at most
//! ceil(log2 n) chains and switches colors at most that often.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::instance::{ArcId, Instance, VertexId};
use crate::solver::{switching_costs_of, Solution};

/// An in-tree given by parent pointers; the root has none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InTree {
    pub parent: Vec<Option<VertexId>>,
    pub root: VertexId,
}

impl InTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    fn children(&self) -> Vec<Vec<VertexId>> {
        let mut ch = vec![Vec::new(); self.parent.len()];
        for (v, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                ch[*p].push(v);
            }
        }
        ch
    }

    /// Vertices ordered so every child precedes its parent.
    fn bottom_up(&self) -> Vec<VertexId> {
        let children = self.children();
        let mut order = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(children[v].iter().copied());
        }
        order.reverse();
        order
    }
}

/// Decomposition of the tree arcs into chains. Arcs are identified by their
/// child endpoint (the arc `v -> parent(v)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeavyPathDecomposition {
    /// Arc `v -> parent(v)` carries strictly more than half of the parent's
    /// subtree (the parent included).
    pub heavy: Vec<bool>,
    /// Chain id of the arc leaving each vertex; the root has no arc.
    pub path_id: Vec<Option<usize>>,
    /// Per chain, its arcs' child endpoints from deepest to highest.
    pub paths: Vec<Vec<VertexId>>,
    /// Deepest vertex of each chain.
    pub lowest: Vec<VertexId>,
    pub subtree_size: Vec<usize>,
}

impl HeavyPathDecomposition {
    /// Number of distinct chains the root path of `v` passes through.
    pub fn paths_crossed(&self, tree: &InTree, v: VertexId) -> usize {
        let mut crossed = 0;
        let mut last: Option<usize> = None;
        let mut cur = v;
        while tree.parent[cur].is_some() {
            let id = self.path_id[cur];
            if id != last {
                crossed += 1;
                last = id;
            }
            cur = tree.parent[cur].unwrap();
        }
        crossed
    }

    /// Maximum of [`Self::paths_crossed`] over all vertices.
    pub fn max_paths_crossed(&self, tree: &InTree) -> usize {
        (0..tree.len()).map(|v| self.paths_crossed(tree, v)).max().unwrap_or(0)
    }
}

/// Recognize tree-shaped instances: collapsing parallel arcs must leave
/// out-degree <= 1 everywhere, acyclic, with every vertex reaching the root.
/// Proposed paths then follow tree edges automatically.
pub fn is_tree_instance(inst: &Instance) -> Option<InTree> {
    let mut parent: Vec<Option<VertexId>> = vec![None; inst.vertex_count];
    for arc in &inst.arcs {
        match parent[arc.tail] {
            None => parent[arc.tail] = Some(arc.head),
            Some(h) if h == arc.head => {}
            Some(_) => return None, // two distinct heads from one vertex
        }
    }
    if parent[inst.root].is_some() {
        return None;
    }
    // Every vertex must reach the root without hitting a cycle or another sink.
    const UNSEEN: u8 = 0;
    const OPEN: u8 = 1;
    const OK: u8 = 2;
    let mut mark = vec![UNSEEN; inst.vertex_count];
    mark[inst.root] = OK;
    for start in 0..inst.vertex_count {
        if mark[start] != UNSEEN {
            continue;
        }
        let mut chain = vec![start];
        mark[start] = OPEN;
        loop {
            let cur = *chain.last().unwrap();
            match parent[cur] {
                None => return None, // non-root sink
                Some(p) if mark[p] == OK => break,
                Some(p) if mark[p] == OPEN => return None, // cycle
                Some(p) => {
                    mark[p] = OPEN;
                    chain.push(p);
                }
            }
        }
        for v in chain {
            mark[v] = OK;
        }
    }
    Some(InTree { parent, root: inst.root })
}

/// Decompose: subtree sizes bottom-up, heavy arcs by the strict majority
/// rule, chains as maximal heavy runs plus the light arc above each (absent
/// only when the run ends at the root).
pub fn heavy_path_decomposition(tree: &InTree) -> HeavyPathDecomposition {
    let n = tree.len();
    let mut size = vec![1usize; n];
    for v in tree.bottom_up() {
        if let Some(p) = tree.parent[v] {
            size[p] += size[v];
        }
    }
    let mut heavy = vec![false; n];
    let mut heavy_child: Vec<Option<VertexId>> = vec![None; n];
    for v in 0..n {
        if let Some(p) = tree.parent[v] {
            if 2 * size[v] > size[p] {
                heavy[v] = true;
                debug_assert!(heavy_child[p].is_none(), "two heavy children under {p}");
                heavy_child[p] = Some(v);
            }
        }
    }

    // Chain tops: the root (when it has a heavy child), and every vertex
    // whose own up-arc is light. Descend the heavy-child links from each top.
    let mut path_id = vec![None; n];
    let mut paths = Vec::new();
    let mut lowest = Vec::new();
    for top in 0..n {
        let is_top = match tree.parent[top] {
            None => heavy_child[top].is_some(),
            Some(_) => !heavy[top],
        };
        if !is_top {
            continue;
        }
        let id = paths.len();
        let mut arcs = Vec::new();
        if tree.parent[top].is_some() {
            arcs.push(top); // the light arc capping the chain
            path_id[top] = Some(id);
        }
        let mut cur = top;
        while let Some(h) = heavy_child[cur] {
            arcs.push(h);
            path_id[h] = Some(id);
            cur = h;
        }
        arcs.reverse(); // deepest first
        lowest.push(cur);
        paths.push(arcs);
    }
    HeavyPathDecomposition { heavy, path_id, paths, lowest, subtree_size: size }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("chain {path} bottoms out at vertex {vertex}, which has no proposed path through it")]
    LowestNotCovered { path: usize, vertex: VertexId },
}

/// Solve a tree instance along the decomposition: each chain takes the
/// parallel arcs of its deepest vertex's proposed path, which covers the
/// chain because that path runs up the tree to the root.
pub fn solve_tree_instance(
    inst: &Instance,
    tree: &InTree,
    decomposition: &HeavyPathDecomposition,
) -> Result<Solution, BaselineError> {
    let mut out_arc: BTreeMap<VertexId, ArcId> = BTreeMap::new();
    for (id, arcs) in decomposition.paths.iter().enumerate() {
        let low = decomposition.lowest[id];
        let proposed =
            inst.path(low).ok_or(BaselineError::LowestNotCovered { path: id, vertex: low })?;
        // The chain's child endpoints are low, parent(low), ... in order, so
        // the j-th chain arc is the j-th arc of the proposed path.
        for (j, &child) in arcs.iter().enumerate() {
            debug_assert_eq!(inst.arc(proposed[j]).tail, child);
            debug_assert_eq!(tree.parent[child], Some(inst.arc(proposed[j]).head));
            out_arc.insert(child, proposed[j]);
        }
    }
    let all_costs = switching_costs_of(&out_arc, inst).expect("tree solutions are acyclic");
    let switching_costs: BTreeMap<VertexId, usize> =
        inst.terminals.iter().map(|&t| (t, all_costs.get(&t).copied().unwrap_or(0))).collect();
    let max_switching = switching_costs.values().copied().max().unwrap_or(0);
    Ok(Solution { out_arc, iterations: 0, switching_costs, max_switching })
}
