//! The aggregation solver: grows vertex-disjoint prefixes of the proposed
//! paths, retires a large independent set of blocked terminals per round by
//! letting each join a neighboring prefix, and merges everything into one
//! branching until all terminals reach the root.
//!
//! Each round is recorded in an [`IterationRecord`] so an independent checker
//! can replay the run and confirm the per-round invariants; see the `verify`
//! module.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::iteration_bound;
use crate::coloring::{largest_color_class, three_color, Coloring, SparseGraph};
use crate::instance::{validate_instance, ArcId, Instance, ValidationReport, VertexId};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("instance failed validation ({0:?})")]
    InvalidInstance(ValidationReport),
    #[error("internal solver invariant broken: {0}")]
    Internal(String),
}

/// Out-degree <= 1 arc selection; the working partial solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branching {
    out: Vec<Option<ArcId>>,
}

impl Branching {
    pub fn new(vertex_count: usize) -> Self {
        Branching { out: vec![None; vertex_count] }
    }

    pub fn out_arc(&self, v: VertexId) -> Option<ArcId> {
        self.out[v]
    }

    pub fn set(&mut self, v: VertexId, arc: ArcId) {
        self.out[v] = Some(arc);
    }

    pub fn clear(&mut self, v: VertexId) -> Option<ArcId> {
        self.out[v].take()
    }

    /// All (tail, arc) pairs, ascending by tail.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, ArcId)> + '_ {
        self.out.iter().enumerate().filter_map(|(v, a)| a.map(|a| (v, a)))
    }

    pub fn to_map(&self) -> BTreeMap<VertexId, ArcId> {
        self.iter().collect()
    }
}

/// Mutable state of one run: the branching, the active terminals, and the
/// committed prefix length of each active terminal's proposed path.
#[derive(Debug, Clone)]
pub struct AlgorithmState {
    pub branching: Branching,
    pub active: BTreeSet<VertexId>,
    pub active_prefix_len: BTreeMap<VertexId, usize>,
    pub iteration: usize,
}

impl AlgorithmState {
    /// All terminals active with length-0 prefixes, empty branching.
    pub fn initial(inst: &Instance) -> Self {
        AlgorithmState {
            branching: Branching::new(inst.vertex_count),
            active: inst.terminals.iter().copied().collect(),
            active_prefix_len: inst.terminals.iter().map(|&t| (t, 0)).collect(),
            iteration: 0,
        }
    }
}

/// One terminal's prefix after the growth step: `len` arcs of its proposed
/// path, flagged if the prefix was extended onto another path or reaches the
/// root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrefixEntry {
    pub len: usize,
    pub extended: bool,
    pub reaches_root: bool,
}

/// The maximal disjoint prefixes of all active terminals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrefixSet {
    pub entries: BTreeMap<VertexId, PrefixEntry>,
}

impl PrefixSet {
    /// Map from vertex to the active terminal whose prefix covers it.
    fn owner_map(&self, inst: &Instance) -> Vec<Option<VertexId>> {
        let mut owner = vec![None; inst.vertex_count];
        for (&v, entry) in &self.entries {
            for x in inst.prefix_vertices(v, entry.len) {
                owner[x] = Some(v);
            }
        }
        owner
    }
}

/// Blocking structure over the non-root-reaching active terminals: an edge
/// (u, w) records that the next vertex of u's path lies on w's prefix. The
/// root reacher, if any, is excluded entirely, so terminals blocked by it
/// appear isolated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub vertices: BTreeSet<VertexId>,
    pub edges: BTreeMap<VertexId, VertexId>,
    pub root_reacher: Option<VertexId>,
}

impl DependencyGraph {
    /// Collapse directed blocking edges to the undirected graph that gets
    /// colored; mutual blocking pairs become a single edge.
    pub fn undirected(&self) -> SparseGraph {
        let mut g = SparseGraph::new();
        for &v in &self.vertices {
            g.add_vertex(v);
        }
        for (&u, &w) in &self.edges {
            g.add_edge(u, w);
        }
        g
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Grow every active prefix along its proposed path, in ascending terminal
/// order, stopping before any vertex already covered by another active
/// terminal's path or prefix. The result is maximal: a stopped prefix's next
/// vertex lies on some other prefix, except for the unique prefix that
/// reaches the root.
pub fn extend_maximal_prefixes(state: &AlgorithmState, inst: &Instance) -> PrefixSet {
    let mut occupied: Vec<Option<VertexId>> = vec![None; inst.vertex_count];
    for (&v, &len) in &state.active_prefix_len {
        for x in inst.prefix_vertices(v, len) {
            debug_assert!(occupied[x].is_none(), "active paths must be disjoint");
            occupied[x] = Some(v);
        }
    }

    let mut entries = BTreeMap::new();
    for &v in &state.active {
        let path = inst.path(v).expect("validated instance has a path per terminal");
        let mut len = state.active_prefix_len[&v];
        while len < path.len() {
            let next = inst.arc(path[len]).head;
            if occupied[next].is_some() {
                break;
            }
            occupied[next] = Some(v);
            len += 1;
        }
        entries.insert(v, PrefixEntry { len, extended: false, reaches_root: len == path.len() });
    }
    PrefixSet { entries }
}

/// Build the blocking graph for a set of maximal disjoint prefixes.
pub fn build_dependency_graph(
    p: &PrefixSet,
    inst: &Instance,
) -> Result<DependencyGraph, SolveError> {
    let mut root_reacher = None;
    for (&v, entry) in &p.entries {
        if entry.reaches_root {
            if let Some(first) = root_reacher {
                return Err(SolveError::Internal(format!(
                    "two prefixes reach the root: {first} and {v}"
                )));
            }
            root_reacher = Some(v);
        }
    }

    let owner = p.owner_map(inst);
    let mut vertices = BTreeSet::new();
    let mut edges = BTreeMap::new();
    for (&v, entry) in &p.entries {
        if entry.reaches_root {
            continue;
        }
        vertices.insert(v);
        let path = inst.path(v).unwrap();
        let next = inst.arc(path[entry.len]).head;
        let blocker = owner[next].ok_or_else(|| {
            SolveError::Internal(format!(
                "terminal {v} is blocked at vertex {next} which lies on no prefix"
            ))
        })?;
        if blocker == v {
            return Err(SolveError::Internal(format!("terminal {v} blocks itself at {next}")));
        }
        if Some(blocker) != root_reacher {
            edges.insert(v, blocker);
        }
    }
    Ok(DependencyGraph { vertices, edges, root_reacher })
}

/// Color the blocking graph and pick the largest color class: the terminals
/// that will retire this round. Returns the coloring too so a trace record
/// can carry it.
pub fn select_inactivation_set(
    h: &DependencyGraph,
) -> Result<(BTreeSet<VertexId>, Coloring), SolveError> {
    let coloring = three_color(&h.undirected()).map_err(|e| {
        SolveError::Internal(format!("dependency graph is not a pseudoforest: {e}"))
    })?;
    let class = if coloring.is_empty() { BTreeSet::new() } else { largest_color_class(&coloring) };
    Ok((class, coloring))
}

/// Extend each selected terminal's prefix by exactly one arc, joining it onto
/// the prefix of a terminal that stays put this round.
pub fn extend_selected(
    p: &PrefixSet,
    selected: &BTreeSet<VertexId>,
    inst: &Instance,
) -> Result<PrefixSet, SolveError> {
    let owner = p.owner_map(inst);
    let mut out = p.clone();
    for &v in selected {
        let entry = out
            .entries
            .get_mut(&v)
            .ok_or_else(|| SolveError::Internal(format!("selected terminal {v} has no prefix")))?;
        if entry.reaches_root {
            return Err(SolveError::Internal(format!("root-reaching terminal {v} was selected")));
        }
        let path = inst.path(v).unwrap();
        let join = inst.arc(path[entry.len]).head;
        match owner[join] {
            Some(u) if !selected.contains(&u) => {}
            Some(u) => {
                return Err(SolveError::Internal(format!(
                    "terminal {v} would join {u}, which also extends this round"
                )))
            }
            None => {
                return Err(SolveError::Internal(format!(
                    "terminal {v} extends onto vertex {join} outside every prefix"
                )))
            }
        }
        entry.len += 1;
        entry.extended = true;
    }
    Ok(out)
}

/// Arcs that entered and left the branching during one merge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeDelta {
    pub arcs_added: Vec<ArcId>,
    pub arcs_removed: Vec<ArcId>,
}

/// Commit a round: install every prefix arc, drop any older branching arc
/// leaving a vertex that a prefix now covers, retire the selected terminals,
/// and advance the still-active prefix lengths.
pub fn merge_update(
    state: &AlgorithmState,
    p: &PrefixSet,
    selected: &BTreeSet<VertexId>,
    inst: &Instance,
) -> Result<(AlgorithmState, MergeDelta), SolveError> {
    let mut next = state.clone();
    next.iteration += 1;

    let mut prefix_arcs: BTreeSet<ArcId> = BTreeSet::new();
    let mut covered: BTreeSet<VertexId> = BTreeSet::new();
    for (&v, entry) in &p.entries {
        let path = inst.path(v).unwrap();
        prefix_arcs.extend(path[..entry.len].iter().copied());
        covered.extend(inst.prefix_vertices(v, entry.len));
    }

    let mut delta = MergeDelta::default();
    for &x in &covered {
        if let Some(old) = next.branching.out_arc(x) {
            if !prefix_arcs.contains(&old) {
                next.branching.clear(x);
                delta.arcs_removed.push(old);
            }
        }
    }
    for &a in &prefix_arcs {
        let tail = inst.arc(a).tail;
        match next.branching.out_arc(tail) {
            None => {
                next.branching.set(tail, a);
                delta.arcs_added.push(a);
            }
            Some(existing) if existing == a => {}
            Some(existing) => {
                return Err(SolveError::Internal(format!(
                    "vertex {tail} would get out-degree 2 (arcs {existing} and {a})"
                )));
            }
        }
    }
    delta.arcs_added.sort_unstable();
    delta.arcs_removed.sort_unstable();

    for &v in selected {
        next.active.remove(&v);
        next.active_prefix_len.remove(&v);
    }
    for (&v, entry) in &p.entries {
        if next.active.contains(&v) {
            next.active_prefix_len.insert(v, entry.len);
        }
    }
    Ok((next, delta))
}

// ---------------------------------------------------------------------------
// Whole runs
// ---------------------------------------------------------------------------

/// Everything one round did, in replayable form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub active_before: Vec<VertexId>,
    /// Prefix lengths after maximal growth, before the one-arc extensions.
    pub prefix_before: BTreeMap<VertexId, usize>,
    /// Prefix lengths after the one-arc extensions.
    pub prefix_after: BTreeMap<VertexId, usize>,
    pub dependency_edges: Vec<(VertexId, VertexId)>,
    pub coloring: BTreeMap<VertexId, u8>,
    pub selected: Vec<VertexId>,
    pub root_reacher: Option<VertexId>,
    pub arcs_added: Vec<ArcId>,
    pub arcs_removed: Vec<ArcId>,
    pub active_after: Vec<VertexId>,
}

/// Final arborescence plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub out_arc: BTreeMap<VertexId, ArcId>,
    pub iterations: usize,
    pub switching_costs: BTreeMap<VertexId, usize>,
    pub max_switching: usize,
}

/// A full run: per-round records plus the solution, tied to the instance by
/// its content hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub instance_hash: String,
    pub records: Vec<IterationRecord>,
    pub solution: Solution,
}

#[derive(Serialize, Deserialize)]
struct FinalRecord {
    instance_hash: String,
    solution: Solution,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("trace line {0} is malformed: {1}")]
    Malformed(usize, serde_json::Error),
    #[error("trace hash {trace} does not match instance hash {instance}")]
    HashMismatch { trace: String, instance: String },
}

impl Trace {
    /// Newline-delimited records, one object per round, final line carrying
    /// the solution. Field order is fixed, so equal runs are byte-equal.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serialization cannot fail"));
            out.push('\n');
        }
        let fin = FinalRecord {
            instance_hash: self.instance_hash.clone(),
            solution: self.solution.clone(),
        };
        out.push_str(&serde_json::to_string(&fin).expect("record serialization cannot fail"));
        out.push('\n');
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Trace, TraceError> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let (&last, records_lines) = lines.split_last().ok_or(TraceError::Empty)?;
        let mut records = Vec::with_capacity(records_lines.len());
        for (i, line) in records_lines.iter().enumerate() {
            records.push(serde_json::from_str(line).map_err(|e| TraceError::Malformed(i, e))?);
        }
        let fin: FinalRecord =
            serde_json::from_str(last).map_err(|e| TraceError::Malformed(lines.len() - 1, e))?;
        Ok(Trace { instance_hash: fin.instance_hash, records, solution: fin.solution })
    }
}

/// True iff every terminal's out-arc chain currently ends at the root.
/// Chains are memoized; a cycle is a solver bug and reported as such.
pub fn all_terminals_rooted(branching: &Branching, inst: &Instance) -> Result<bool, SolveError> {
    let sinks = chain_sinks(branching, inst)?;
    Ok(inst.terminals.iter().all(|&t| sinks[t] == inst.root))
}

/// For each vertex, the out-degree-0 vertex its chain terminates at.
fn chain_sinks(branching: &Branching, inst: &Instance) -> Result<Vec<VertexId>, SolveError> {
    const UNSEEN: usize = usize::MAX;
    let n = inst.vertex_count;
    let mut sink = vec![UNSEEN; n];
    for start in 0..n {
        if sink[start] != UNSEEN {
            continue;
        }
        let mut chain = vec![start];
        let resolved = loop {
            let cur = *chain.last().unwrap();
            match branching.out_arc(cur) {
                None => break cur,
                Some(a) => {
                    let next = inst.arc(a).head;
                    if sink[next] != UNSEEN {
                        break sink[next];
                    }
                    if chain.contains(&next) {
                        return Err(SolveError::Internal(format!(
                            "branching contains a cycle through vertex {next}"
                        )));
                    }
                    chain.push(next);
                }
            }
        };
        for v in chain {
            sink[v] = resolved;
        }
    }
    Ok(sink)
}

/// Per-vertex color switches along the out-arc chains, memoized bottom-up.
pub(crate) fn switching_costs_of(
    out_arc: &BTreeMap<VertexId, ArcId>,
    inst: &Instance,
) -> Result<BTreeMap<VertexId, usize>, String> {
    let mut memo: BTreeMap<VertexId, usize> = BTreeMap::new();
    for &start in out_arc.keys() {
        if memo.contains_key(&start) {
            continue;
        }
        let mut chain = vec![start];
        loop {
            let cur = *chain.last().unwrap();
            let arc = out_arc.get(&cur).copied();
            let next = arc.map(|a| inst.arc(a).head);
            match next {
                Some(h) if !memo.contains_key(&h) && out_arc.contains_key(&h) => {
                    if chain.contains(&h) {
                        return Err(format!("cycle through vertex {h}"));
                    }
                    chain.push(h);
                }
                _ => break,
            }
        }
        while let Some(v) = chain.pop() {
            let a = out_arc[&v];
            let h = inst.arc(a).head;
            let cost = match out_arc.get(&h) {
                None => 0,
                Some(&b) => memo[&h] + if inst.arc(a).color != inst.arc(b).color { 1 } else { 0 },
            };
            memo.insert(v, cost);
        }
    }
    Ok(memo)
}

/// Run the full aggregation. Returns the solution and a replayable trace.
///
/// On a valid instance with k terminals this terminates within
/// `iteration_bound(k)` rounds and the maximum switching cost is at most
/// twice the rounds used.
pub fn solve(inst: &Instance) -> Result<(Solution, Trace), SolveError> {
    let report = validate_instance(inst);
    if !report.ok {
        return Err(SolveError::InvalidInstance(report));
    }

    let mut state = AlgorithmState::initial(inst);
    let mut records: Vec<IterationRecord> = Vec::new();
    let k = inst.terminal_count() as u64;
    // Hard stop: the bound plus slack; exceeding it means the shrink
    // guarantee is broken, so bail out instead of spinning.
    let cap = iteration_bound(k) as usize + 2;

    while !inst.terminals.is_empty() && !all_terminals_rooted(&state.branching, inst)? {
        if state.iteration >= cap {
            return Err(SolveError::Internal(format!(
                "no convergence after {} iterations (bound {})",
                state.iteration,
                cap - 2
            )));
        }
        let active_before: Vec<VertexId> = state.active.iter().copied().collect();
        let prefixes = extend_maximal_prefixes(&state, inst);
        let dependency = build_dependency_graph(&prefixes, inst)?;
        let (selected, coloring) = select_inactivation_set(&dependency)?;
        let extended = extend_selected(&prefixes, &selected, inst)?;
        let (next, delta) = merge_update(&state, &extended, &selected, inst)?;

        records.push(IterationRecord {
            iteration: next.iteration,
            active_before,
            prefix_before: prefixes.entries.iter().map(|(&v, e)| (v, e.len)).collect(),
            prefix_after: extended.entries.iter().map(|(&v, e)| (v, e.len)).collect(),
            dependency_edges: dependency.edges.iter().map(|(&u, &w)| (u, w)).collect(),
            coloring: coloring.as_map().clone(),
            selected: selected.iter().copied().collect(),
            root_reacher: dependency.root_reacher,
            arcs_added: delta.arcs_added,
            arcs_removed: delta.arcs_removed,
            active_after: next.active.iter().copied().collect(),
        });
        state = next;
    }

    let out_arc = state.branching.to_map();
    let all_costs = switching_costs_of(&out_arc, inst).map_err(SolveError::Internal)?;
    let switching_costs: BTreeMap<VertexId, usize> =
        inst.terminals.iter().map(|&t| (t, all_costs.get(&t).copied().unwrap_or(0))).collect();
    let max_switching = switching_costs.values().copied().max().unwrap_or(0);
    let solution =
        Solution { out_arc, iterations: state.iteration, switching_costs, max_switching };
    let trace = Trace { instance_hash: inst.content_hash(), records, solution: solution.clone() };
    Ok((solution, trace))
}
