//! Independent checking of solutions and traces.
//!
//! The trace checker replays the branching from the recorded arc deltas and
//! re-derives components, representatives, and switching costs on its own;
//! it shares none of the solver's bookkeeping, so a solver bug cannot
//! certify itself.
//!
//! Per replayed round i it asserts four conditions:
//!   c1  the branching has out-degree <= 1 and no directed cycle;
//!   c2  every component is a singleton non-terminal or contains exactly one
//!       active representative together with that representative's committed
//!       prefix (a still-blocked active terminal may sit alone with a
//!       length-0 prefix);
//!   c3  every terminal reaches its representative's committed prefix within
//!       at most 2i color switches, counted strictly before the first prefix
//!       vertex;
//!   c4  at least ceil(|V(H)|/3) terminals retired, where the blocking graph
//!       spans the active set minus at most one root reacher.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::instance::{ArcId, Instance, VertexId};
use crate::solver::{Solution, Trace, TraceError};

// ---------------------------------------------------------------------------
// Arborescence checking
// ---------------------------------------------------------------------------

/// Why a claimed arborescence is not one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArbViolation {
    /// The map assigns vertex `vertex` an arc whose tail is elsewhere, or an
    /// arc id that does not exist.
    BadArc { vertex: VertexId, arc: ArcId },
    /// A directed cycle, listed in traversal order.
    Cycle { vertices: Vec<VertexId> },
    /// A terminal whose out-arc chain ends at a non-root sink.
    Stranded { terminal: VertexId, sink: VertexId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArborescenceReport {
    pub pass: bool,
    pub violation: Option<ArbViolation>,
}

/// Verify out-degree <= 1 (inherent in the map), acyclicity, and that every
/// terminal's chain terminates at the root.
pub fn check_arborescence(sol: &Solution, inst: &Instance) -> ArborescenceReport {
    let fail = |violation| ArborescenceReport { pass: false, violation: Some(violation) };

    for (&v, &a) in &sol.out_arc {
        if a >= inst.arc_count() || inst.arc(a).tail != v {
            return fail(ArbViolation::BadArc { vertex: v, arc: a });
        }
    }

    // Sink of every chain, with cycle detection.
    const UNSEEN: usize = usize::MAX;
    let mut sink: Vec<VertexId> = vec![UNSEEN; inst.vertex_count];
    for &start in sol.out_arc.keys() {
        if sink[start] != UNSEEN {
            continue;
        }
        let mut chain = vec![start];
        let mut on_chain: BTreeSet<VertexId> = BTreeSet::from([start]);
        let resolved = loop {
            let cur = *chain.last().unwrap();
            match sol.out_arc.get(&cur) {
                None => break cur,
                Some(&a) => {
                    let nxt = inst.arc(a).head;
                    if sink[nxt] != UNSEEN {
                        break sink[nxt];
                    }
                    if !on_chain.insert(nxt) {
                        let at = chain.iter().position(|&v| v == nxt).unwrap();
                        return fail(ArbViolation::Cycle { vertices: chain[at..].to_vec() });
                    }
                    chain.push(nxt);
                }
            }
        };
        for v in chain {
            sink[v] = resolved;
        }
    }

    for &t in &inst.terminals {
        let s = if sink[t] == UNSEEN { t } else { sink[t] };
        if s != inst.root {
            return fail(ArbViolation::Stranded { terminal: t, sink: s });
        }
    }
    ArborescenceReport { pass: true, violation: None }
}

// ---------------------------------------------------------------------------
// Switching costs
// ---------------------------------------------------------------------------

/// Exact per-terminal switching costs with the root paths as witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchReport {
    pub costs: BTreeMap<VertexId, usize>,
    pub max: usize,
    /// Arc ids of each terminal's unique root path.
    pub root_paths: BTreeMap<VertexId, Vec<ArcId>>,
}

/// Count color boundaries along every terminal's root path. Requires a
/// passing [`check_arborescence`]; walks are bounded by the vertex count as
/// a second line of defense.
pub fn switching_costs(sol: &Solution, inst: &Instance) -> SwitchReport {
    let mut costs = BTreeMap::new();
    let mut root_paths = BTreeMap::new();
    for &t in &inst.terminals {
        let mut path = Vec::new();
        let mut cur = t;
        while let Some(&a) = sol.out_arc.get(&cur) {
            path.push(a);
            cur = inst.arc(a).head;
            if path.len() > inst.vertex_count {
                break;
            }
        }
        costs.insert(t, color_switches(&path, inst));
        root_paths.insert(t, path);
    }
    let max = costs.values().copied().max().unwrap_or(0);
    SwitchReport { costs, max, root_paths }
}

/// Boundaries between differing colors of consecutive arcs; zero for empty
/// and single-arc sequences.
pub fn color_switches(arcs: &[ArcId], inst: &Instance) -> usize {
    arcs.windows(2).filter(|w| inst.arc(w[0]).color != inst.arc(w[1]).color).count()
}

// ---------------------------------------------------------------------------
// Trace invariants
// ---------------------------------------------------------------------------

/// Outcome of one replayed round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionStatus {
    pub iteration: usize,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
}

impl ConditionStatus {
    fn clean(iteration: usize) -> Self {
        ConditionStatus { iteration, c1: true, c2: true, c3: true, c4: true }
    }
    fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3 && self.c4
    }
}

/// First broken condition with enough context to locate it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureWitness {
    pub iteration: usize,
    /// "c1".."c4" for the invariants, "structure" for a malformed record,
    /// "final" for end-state mismatches.
    pub condition: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub pass: bool,
    pub per_iteration: Vec<ConditionStatus>,
    pub first_failure: Option<FailureWitness>,
}

struct Replay {
    out: BTreeMap<VertexId, ArcId>,
    active: BTreeSet<VertexId>,
    prefix_len: BTreeMap<VertexId, usize>,
}

/// Replay a trace against its instance and check c1-c4 at every round,
/// stopping at the first failure. A hash mismatch means the trace belongs to
/// a different instance and is an error, not a failed report.
pub fn check_trace(trace: &Trace, inst: &Instance) -> Result<InvariantReport, TraceError> {
    let instance_hash = inst.content_hash();
    if trace.instance_hash != instance_hash {
        return Err(TraceError::HashMismatch {
            trace: trace.instance_hash.clone(),
            instance: instance_hash,
        });
    }

    let mut replay = Replay {
        out: BTreeMap::new(),
        active: inst.terminals.iter().copied().collect(),
        prefix_len: inst.terminals.iter().map(|&t| (t, 0)).collect(),
    };
    let mut report = InvariantReport { pass: true, per_iteration: Vec::new(), first_failure: None };

    for (idx, rec) in trace.records.iter().enumerate() {
        let iteration = idx + 1;
        let mut status = ConditionStatus::clean(iteration);
        let fail = |report: &mut InvariantReport, cond: &str, detail: String| {
            if report.first_failure.is_none() {
                report.first_failure =
                    Some(FailureWitness { iteration, condition: cond.to_string(), detail });
            }
            report.pass = false;
        };

        if let Err(detail) = apply_record(&mut replay, rec, iteration, inst) {
            // Arc conflicts surface as c1 (out-degree), everything else as a
            // structural mismatch.
            let cond = if detail.starts_with("out-degree") { "c1" } else { "structure" };
            if cond == "c1" {
                status.c1 = false;
            }
            fail(&mut report, cond, detail);
            report.per_iteration.push(status);
            return Ok(report);
        }

        if let Err(detail) = check_c1(&replay, inst) {
            status.c1 = false;
            fail(&mut report, "c1", detail);
        }
        let components = components_of(&replay, inst);
        if status.c1 {
            if let Err(detail) = check_c2(&replay, &components, inst) {
                status.c2 = false;
                fail(&mut report, "c2", detail);
            }
            if status.c2 {
                if let Err(detail) = check_c3(&replay, &components, iteration, inst) {
                    status.c3 = false;
                    fail(&mut report, "c3", detail);
                }
            }
        }
        if let Err(detail) = check_c4(rec) {
            status.c4 = false;
            fail(&mut report, "c4", detail);
        }

        let done = !status.all();
        report.per_iteration.push(status);
        if done {
            return Ok(report);
        }
    }

    // End state: the replayed branching must equal the recorded solution and
    // satisfy the closing guarantees.
    if replay.out != trace.solution.out_arc {
        report.pass = false;
        report.first_failure.get_or_insert(FailureWitness {
            iteration: trace.records.len(),
            condition: "final".into(),
            detail: "replayed branching differs from the recorded solution".into(),
        });
        return Ok(report);
    }
    if trace.solution.iterations != trace.records.len() {
        report.pass = false;
        report.first_failure.get_or_insert(FailureWitness {
            iteration: trace.records.len(),
            condition: "final".into(),
            detail: format!(
                "solution reports {} iterations but the trace has {} records",
                trace.solution.iterations,
                trace.records.len()
            ),
        });
        return Ok(report);
    }
    let arb = check_arborescence(&trace.solution, inst);
    if !arb.pass {
        report.pass = false;
        report.first_failure.get_or_insert(FailureWitness {
            iteration: trace.records.len(),
            condition: "final".into(),
            detail: format!("final branching is not an arborescence: {:?}", arb.violation),
        });
        return Ok(report);
    }
    let switches = switching_costs(&trace.solution, inst);
    if switches.costs != trace.solution.switching_costs
        || switches.max != trace.solution.max_switching
    {
        report.pass = false;
        report.first_failure.get_or_insert(FailureWitness {
            iteration: trace.records.len(),
            condition: "final".into(),
            detail: "recorded switching costs differ from recomputation".into(),
        });
        return Ok(report);
    }
    if switches.max > 2 * trace.records.len() {
        report.pass = false;
        report.first_failure.get_or_insert(FailureWitness {
            iteration: trace.records.len(),
            condition: "final".into(),
            detail: format!(
                "max switching {} exceeds twice the {} iterations",
                switches.max,
                trace.records.len()
            ),
        });
    }
    Ok(report)
}

/// Apply one record's deltas to the replayed state after checking its
/// internal consistency.
fn apply_record(
    replay: &mut Replay,
    rec: &crate::solver::IterationRecord,
    iteration: usize,
    inst: &Instance,
) -> Result<(), String> {
    if rec.iteration != iteration {
        return Err(format!("record claims iteration {}, expected {iteration}", rec.iteration));
    }
    let active_before: BTreeSet<VertexId> = rec.active_before.iter().copied().collect();
    if active_before != replay.active {
        return Err("recorded active set differs from replay".into());
    }
    let selected: BTreeSet<VertexId> = rec.selected.iter().copied().collect();
    if !selected.is_subset(&active_before) {
        return Err("selected set contains inactive terminals".into());
    }
    if let Some(rr) = rec.root_reacher {
        if selected.contains(&rr) {
            return Err(format!("root reacher {rr} was selected for retirement"));
        }
    }
    let expected_after: BTreeSet<VertexId> = active_before.difference(&selected).copied().collect();
    if rec.active_after.iter().copied().collect::<BTreeSet<_>>() != expected_after {
        return Err("active_after is not active_before minus selected".into());
    }
    // Prefix arithmetic: maximal growth only extends, the one-arc extension
    // applies exactly to the selected set.
    for &v in &rec.active_before {
        let before = rec.prefix_before.get(&v).ok_or(format!("no prefix_before for {v}"))?;
        let after = rec.prefix_after.get(&v).ok_or(format!("no prefix_after for {v}"))?;
        let committed = replay.prefix_len.get(&v).copied().unwrap_or(0);
        if *before < committed {
            return Err(format!("prefix of {v} shrank from {committed} to {before}"));
        }
        let expected = before + usize::from(selected.contains(&v));
        if *after != expected {
            return Err(format!("prefix_after of {v} is {after}, expected {expected}"));
        }
        let path_len = inst.path(v).map(|p| p.len()).unwrap_or(0);
        if *after > path_len {
            return Err(format!("prefix of {v} exceeds its path length"));
        }
    }
    // The selected set must be independent in the recorded blocking edges.
    for &(u, w) in &rec.dependency_edges {
        if selected.contains(&u) && selected.contains(&w) {
            return Err(format!("selected terminals {u} and {w} block each other"));
        }
    }
    if rec.arcs_added.iter().any(|a| rec.arcs_removed.contains(a)) {
        return Err("arcs_added and arcs_removed overlap".into());
    }

    for &a in &rec.arcs_removed {
        if a >= inst.arc_count() {
            return Err(format!("removed arc {a} does not exist"));
        }
        let tail = inst.arc(a).tail;
        if replay.out.get(&tail) != Some(&a) {
            return Err(format!("removed arc {a} was not present at vertex {tail}"));
        }
        replay.out.remove(&tail);
    }
    for &a in &rec.arcs_added {
        if a >= inst.arc_count() {
            return Err(format!("added arc {a} does not exist"));
        }
        let tail = inst.arc(a).tail;
        if let Some(&other) = replay.out.get(&tail) {
            return Err(format!("out-degree 2 at vertex {tail}: arcs {other} and {a}"));
        }
        replay.out.insert(tail, a);
    }

    replay.active = expected_after;
    replay.prefix_len = rec
        .prefix_after
        .iter()
        .filter(|(v, _)| replay.active.contains(v))
        .map(|(&v, &l)| (v, l))
        .collect();
    Ok(())
}

/// c1: no directed cycle (out-degree <= 1 is inherent in the map).
fn check_c1(replay: &Replay, inst: &Instance) -> Result<(), String> {
    const UNSEEN: u8 = 0;
    const OPEN: u8 = 1;
    const DONE: u8 = 2;
    let mut mark = vec![UNSEEN; inst.vertex_count];
    for &start in replay.out.keys() {
        if mark[start] != UNSEEN {
            continue;
        }
        let mut chain = vec![start];
        mark[start] = OPEN;
        loop {
            let cur = *chain.last().unwrap();
            let next = replay.out.get(&cur).map(|&a| inst.arc(a).head);
            match next {
                Some(h) if mark[h] == OPEN => {
                    return Err(format!("directed cycle through vertex {h}"));
                }
                Some(h) if mark[h] == UNSEEN => {
                    mark[h] = OPEN;
                    chain.push(h);
                }
                _ => break,
            }
        }
        for v in chain {
            mark[v] = DONE;
        }
    }
    Ok(())
}

/// Weakly connected components of the replayed branching; singletons are not
/// materialized. Returns vertex -> component id.
fn components_of(replay: &Replay, inst: &Instance) -> BTreeMap<VertexId, usize> {
    let mut comp: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut parent: Vec<usize> = (0..inst.vertex_count).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (&v, &a) in &replay.out {
        let h = inst.arc(a).head;
        let (rv, rh) = (find(&mut parent, v), find(&mut parent, h));
        if rv != rh {
            parent[rv] = rh;
        }
    }
    for (&v, &a) in &replay.out {
        let h = inst.arc(a).head;
        let root = find(&mut parent, v);
        comp.insert(v, root);
        let root_h = find(&mut parent, h);
        comp.insert(h, root_h);
    }
    comp
}

/// c2: component structure and representative uniqueness.
fn check_c2(
    replay: &Replay,
    components: &BTreeMap<VertexId, usize>,
    inst: &Instance,
) -> Result<(), String> {
    // Singleton terminals must be active with a length-0 committed prefix.
    for &t in &inst.terminals {
        if !components.contains_key(&t) {
            if !replay.active.contains(&t) {
                return Err(format!("retired terminal {t} is stranded as a singleton"));
            }
            if replay.prefix_len.get(&t).copied().unwrap_or(0) != 0 {
                return Err(format!("singleton active terminal {t} claims a nonempty prefix"));
            }
        }
    }
    // Each multi-vertex component: exactly one active representative whose
    // committed prefix lies inside the component.
    let mut reps: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
    for &v in &replay.active {
        if let Some(&c) = components.get(&v) {
            reps.entry(c).or_default().push(v);
        }
    }
    let terminal_set: BTreeSet<VertexId> = inst.terminals.iter().copied().collect();
    let mut terminal_comps: BTreeSet<usize> = BTreeSet::new();
    for &t in &terminal_set {
        if let Some(&c) = components.get(&t) {
            terminal_comps.insert(c);
        }
    }
    for &c in &terminal_comps {
        match reps.get(&c).map(|r| r.as_slice()) {
            Some([_]) => {}
            Some(many) => {
                return Err(format!("component {c} has {} representatives {many:?}", many.len()))
            }
            None => return Err(format!("component {c} contains terminals but no representative")),
        }
    }
    for (&c, rep_list) in &reps {
        if rep_list.len() != 1 {
            return Err(format!("component {c} has {} representatives", rep_list.len()));
        }
        let v = rep_list[0];
        let len = replay.prefix_len.get(&v).copied().unwrap_or(0);
        for x in inst.prefix_vertices(v, len) {
            if len > 0 && components.get(&x) != Some(&c) {
                return Err(format!(
                    "active path vertex {x} of representative {v} escapes its component"
                ));
            }
        }
        // The committed prefix arcs themselves must sit in the branching.
        if let Some(path) = inst.path(v) {
            for &a in &path[..len] {
                if replay.out.get(&inst.arc(a).tail) != Some(&a) {
                    return Err(format!(
                        "committed prefix arc {a} of representative {v} is missing from the branching"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// c3: every terminal reaches its representative's committed prefix within
/// 2i switches, counted strictly before the first prefix vertex.
fn check_c3(
    replay: &Replay,
    components: &BTreeMap<VertexId, usize>,
    iteration: usize,
    inst: &Instance,
) -> Result<(), String> {
    // Locate each component's representative and its prefix vertex set.
    let mut rep_of: BTreeMap<usize, VertexId> = BTreeMap::new();
    for &v in &replay.active {
        if let Some(&c) = components.get(&v) {
            rep_of.insert(c, v);
        }
    }
    let mut on_active_path: BTreeSet<VertexId> = BTreeSet::new();
    for (&_c, &v) in &rep_of {
        let len = replay.prefix_len.get(&v).copied().unwrap_or(0);
        on_active_path.extend(inst.prefix_vertices(v, len));
    }

    // switches(u): color boundaries on the walk from u until the first
    // vertex on its representative's committed prefix, memoized bottom-up.
    let mut memo: BTreeMap<VertexId, usize> = BTreeMap::new();
    let bound = 2 * iteration;
    for &t in &inst.terminals {
        if !components.contains_key(&t) {
            continue; // singleton active terminal, zero switches
        }
        if on_active_path.contains(&t) {
            continue;
        }
        let mut chain = vec![t];
        loop {
            let cur = *chain.last().unwrap();
            let Some(&a) = replay.out.get(&cur) else {
                return Err(format!(
                    "terminal {t} dead-ends at {cur} before reaching an active path"
                ));
            };
            let h = inst.arc(a).head;
            if on_active_path.contains(&h) || memo.contains_key(&h) {
                break;
            }
            if chain.len() > inst.vertex_count {
                return Err(format!("walk from terminal {t} does not terminate"));
            }
            chain.push(h);
        }
        while let Some(v) = chain.pop() {
            let a = replay.out[&v];
            let h = inst.arc(a).head;
            let cost = if on_active_path.contains(&h) {
                0
            } else {
                memo[&h] + usize::from(inst.arc(a).color != inst.arc(replay.out[&h]).color)
            };
            memo.insert(v, cost);
        }
        let cost = memo[&t];
        if cost > bound {
            return Err(format!(
                "terminal {t} needs {cost} switches to reach its active path, bound is {bound}"
            ));
        }
    }
    Ok(())
}

/// c4: the blocking graph spans the active set minus at most the root
/// reacher, and at least a third of it retired.
fn check_c4(rec: &crate::solver::IterationRecord) -> Result<(), String> {
    let s_before = rec.active_before.len();
    let s_after = rec.active_after.len();
    let h_size = rec.coloring.len();
    let expected_h = s_before - usize::from(rec.root_reacher.is_some());
    if h_size != expected_h {
        return Err(format!(
            "blocking graph has {h_size} vertices, expected {expected_h} (|S|={s_before})"
        ));
    }
    let required = h_size.div_ceil(3);
    if s_after > s_before.saturating_sub(required) {
        return Err(format!(
            "|S| only shrank from {s_before} to {s_after}; needed at least ceil({h_size}/3) = {required} retirements"
        ));
    }
    Ok(())
}
