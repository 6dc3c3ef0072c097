//! Seeded, byte-deterministic instance families: the binary-tree lower-bound
//! construction, random in-trees with parallel colored paths, and planted-path
//! DAGs whose paths crisscross enough to create circular blocking.
//!
//! All randomness flows through [`SplitMix64`] with modulo range reduction, so
//! identical parameters reproduce identical instance files on any platform.
//! The exact constants are documented in `docs/FORMATS.md`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::instance::{ArcId, Instance, VertexId};

/// SplitMix64: a counter-based 64-bit generator that is trivial to reimplement
/// in any language, which keeps fixture files reproducible across toolchains.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish value in `0..n` by modulo reduction (bias is irrelevant
    /// for instance generation and the reduction is trivially portable).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        self.next_u64() % n
    }

    /// Fork an independent stream seeded from this one.
    pub fn split(&mut self) -> SplitMix64 {
        SplitMix64::new(self.next_u64())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("depth must be at least 1")]
    DepthTooSmall,
    #[error("vertex count must be at least 2")]
    TooFewVertices,
    #[error("terminal count must satisfy 1 <= k < n (k={k}, n={n})")]
    BadTerminalCount { k: usize, n: usize },
    #[error("max_parallel must be at least 1")]
    BadParallelCap,
}

/// A reproducible description of one generated instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenSpec {
    LowerBoundTree { depth: usize },
    RandomTree { n: usize, max_parallel: usize, seed: u64 },
    PlantedDag { n: usize, k: usize, extra_arcs: usize, seed: u64 },
}

impl GenSpec {
    pub fn build(&self) -> Result<Instance, GenError> {
        match *self {
            GenSpec::LowerBoundTree { depth } => gen_binary_tree_lower_bound(depth),
            GenSpec::RandomTree { n, max_parallel, seed } => gen_random_tree(n, max_parallel, seed),
            GenSpec::PlantedDag { n, k, extra_arcs, seed } => {
                gen_planted_dag(n, k, extra_arcs, seed)
            }
        }
    }

    pub fn id(&self) -> String {
        match *self {
            GenSpec::LowerBoundTree { depth } => format!("lb-tree-d{depth}"),
            GenSpec::RandomTree { n, max_parallel, seed } => {
                format!("rand-tree-n{n}-p{max_parallel}-s{seed}")
            }
            GenSpec::PlantedDag { n, k, extra_arcs, seed } => {
                format!("planted-dag-n{n}-k{k}-x{extra_arcs}-s{seed}")
            }
        }
    }
}

/// Complete binary in-tree of the given depth, every non-root vertex a
/// terminal, every proposed path arc-disjoint from all others via fresh
/// parallel arcs in a fresh color.
///
/// Vertices use heap numbering (root 0, children of `i` at `2i+1`, `2i+2`),
/// so `|V| = 2^(d+1) - 1` and the arc count is `sum_{j=1..d} j * 2^j`.
pub fn gen_binary_tree_lower_bound(depth: usize) -> Result<Instance, GenError> {
    if depth < 1 {
        return Err(GenError::DepthTooSmall);
    }
    let n = (1usize << (depth + 1)) - 1;
    let parent = |v: VertexId| -> VertexId { (v - 1) / 2 };

    let mut arcs: Vec<(VertexId, VertexId, String)> = Vec::new();
    let mut paths: BTreeMap<VertexId, Vec<ArcId>> = BTreeMap::new();
    for v in 1..n {
        let token = format!("t{v}");
        let mut path = Vec::new();
        let mut cur = v;
        while cur != 0 {
            path.push(arcs.len());
            arcs.push((cur, parent(cur), token.clone()));
            cur = parent(cur);
        }
        paths.insert(v, path);
    }
    Ok(Instance::new(n, 0, arcs, (1..n).collect(), paths))
}

/// Random in-tree on `n` vertices (each vertex picks a uniformly random
/// earlier vertex as parent; vertex 0 is the root) where every non-root
/// vertex is a terminal.
///
/// Terminals are processed leaf-to-root. Each either lays fresh parallel arcs
/// in its own color along its tree chain, or, with probability 1/2 when some
/// already-built path passes through it, adopts one such path: its proposed
/// path becomes the suffix of the sampled descendant's path, sharing those
/// arcs and that color. Adoption keeps paths monochromatic while exercising
/// shared arcs. `max_parallel` caps fresh arcs per tree edge by forcing
/// adoption when the cap is hit and a reusable path exists.
pub fn gen_random_tree(n: usize, max_parallel: usize, seed: u64) -> Result<Instance, GenError> {
    if n < 2 {
        return Err(GenError::TooFewVertices);
    }
    if max_parallel < 1 {
        return Err(GenError::BadParallelCap);
    }
    let mut rng = SplitMix64::new(seed);
    let mut parent: Vec<VertexId> = vec![0; n];
    for (v, slot) in parent.iter_mut().enumerate().skip(1) {
        *slot = rng.below(v as u64) as usize;
    }

    let mut arcs: Vec<(VertexId, VertexId, String)> = Vec::new();
    let mut paths: BTreeMap<VertexId, Vec<ArcId>> = BTreeMap::new();
    // Terminals whose finished path passes through each vertex, in build order.
    let mut through: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    let mut fresh_per_edge: BTreeMap<VertexId, usize> = BTreeMap::new(); // keyed by child vertex

    for v in (1..n).rev() {
        let candidates = &through[v];
        let chain: Vec<VertexId> = {
            let mut c = vec![v];
            while *c.last().unwrap() != 0 {
                c.push(parent[*c.last().unwrap()]);
            }
            c
        };
        let cap_hit = chain[..chain.len() - 1]
            .iter()
            .any(|&x| fresh_per_edge.get(&x).copied().unwrap_or(0) >= max_parallel);
        let adopt = !candidates.is_empty() && (cap_hit || rng.below(2) == 1);
        let path: Vec<ArcId> = if adopt {
            let w = candidates[rng.below(candidates.len() as u64) as usize];
            let donor = &paths[&w];
            let at =
                donor.iter().position(|&a| arcs[a].0 == v).expect("donor path passes through v");
            donor[at..].to_vec()
        } else {
            let token = format!("c{v}");
            chain[..chain.len() - 1]
                .iter()
                .map(|&x| {
                    *fresh_per_edge.entry(x).or_insert(0) += 1;
                    arcs.push((x, parent[x], token.clone()));
                    arcs.len() - 1
                })
                .collect()
        };
        for &x in &chain {
            through[x].push(v);
        }
        paths.insert(v, path);
    }
    Ok(Instance::new(n, 0, arcs, (1..n).collect(), paths))
}

/// DAG on topologically ordered vertices with the root last. Each of the
/// first `k` vertices is a terminal with a planted monochromatic simple path
/// to the root through strictly increasing intermediate vertices (fresh color,
/// fresh arcs), plus `extra_arcs` random decoy arcs.
pub fn gen_planted_dag(
    n: usize,
    k: usize,
    extra_arcs: usize,
    seed: u64,
) -> Result<Instance, GenError> {
    if n < 2 {
        return Err(GenError::TooFewVertices);
    }
    if k < 1 || k >= n {
        return Err(GenError::BadTerminalCount { k, n });
    }
    let root = n - 1;
    let mut rng = SplitMix64::new(seed);
    let mut arcs: Vec<(VertexId, VertexId, String)> = Vec::new();
    let mut paths: BTreeMap<VertexId, Vec<ArcId>> = BTreeMap::new();

    for t in 0..k {
        let token = format!("p{t}");
        let mut path = Vec::new();
        let mut cur = t;
        while cur != root {
            let next = cur + 1 + rng.below((root - cur) as u64) as usize;
            path.push(arcs.len());
            arcs.push((cur, next, token.clone()));
            cur = next;
        }
        paths.insert(t, path);
    }
    for _ in 0..extra_arcs {
        let tail = rng.below((n - 1) as u64) as usize;
        let head = tail + 1 + rng.below((n - 1 - tail) as u64) as usize;
        let color_pick = rng.below(k as u64 + 4);
        let token = if (color_pick as usize) < k {
            format!("p{color_pick}")
        } else {
            format!("x{}", color_pick as usize - k)
        };
        arcs.push((tail, head, token));
    }
    Ok(Instance::new(n, root, arcs, (0..k).collect(), paths))
}
