//! Exhaustive ground truth for tiny instances: enumerate every out-arc choice
//! function, keep those whose chosen arcs form an arborescence reaching the
//! root from all terminals, and minimize the maximum switching cost.
//!
//! The search refuses instances whose choice space exceeds the configured
//! limit rather than ever returning a wrong answer.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::instance::{validate_instance, ArcId, Instance, ValidationReport, VertexId};
use crate::verify::color_switches;

#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    pub max_states: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_states: 10_000_000 }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("choice space of {space} states exceeds the limit of {limit}")]
    SearchSpaceExceeded { space: u128, limit: u64 },
    #[error("instance failed validation ({0:?})")]
    InvalidInstance(ValidationReport),
    #[error("no arborescence connects all terminals to the root")]
    Infeasible,
}

/// The exact optimum with a witness attaining it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptResult {
    pub optimum: usize,
    /// Lexicographically least optimal choice function (per vertex in id
    /// order, no-arc ordered before any arc, arcs by ascending id).
    pub witness: BTreeMap<VertexId, ArcId>,
    /// Product over vertices of (out-degree + 1).
    pub search_space: u128,
}

struct Search<'a> {
    inst: &'a Instance,
    out_arcs: Vec<Vec<ArcId>>,
    choice: Vec<Option<ArcId>>,
    best: Option<(usize, Vec<Option<ArcId>>)>,
}

enum Partial {
    /// All terminal walks complete; the value is the exact max switching.
    Complete(usize),
    /// Some walk runs into an unassigned vertex; the value is a lower bound.
    Open(usize),
    /// A walk is dead (cycle, or a settled non-root sink): no completion of
    /// this prefix is feasible.
    Dead,
}

impl<'a> Search<'a> {
    /// Walk every terminal through the currently assigned choices.
    /// `assigned_upto` is the first unassigned vertex id.
    fn evaluate(&self, assigned_upto: usize) -> Partial {
        let mut worst = 0usize;
        let mut complete = true;
        let n = self.inst.vertex_count;
        for &t in &self.inst.terminals {
            let mut switches = 0usize;
            let mut prev_color = None;
            let mut cur = t;
            let mut steps = 0usize;
            loop {
                if cur == self.inst.root {
                    break;
                }
                if cur >= assigned_upto {
                    complete = false;
                    break;
                }
                let Some(a) = self.choice[cur] else {
                    return Partial::Dead; // settled sink that is not the root
                };
                let arc = self.inst.arc(a);
                if let Some(p) = prev_color {
                    if p != arc.color {
                        switches += 1;
                    }
                }
                prev_color = Some(arc.color);
                cur = arc.head;
                steps += 1;
                if steps > n {
                    return Partial::Dead; // cycle among assigned vertices
                }
            }
            worst = worst.max(switches);
        }
        if complete {
            Partial::Complete(worst)
        } else {
            Partial::Open(worst)
        }
    }

    /// Full feasibility at a leaf: acyclic and every chosen vertex reaches
    /// the root, so the chosen arcs form one arborescence rooted there.
    fn leaf_is_arborescence(&self) -> bool {
        let n = self.inst.vertex_count;
        const UNSEEN: usize = usize::MAX;
        let mut sink = vec![UNSEEN; n];
        for start in 0..n {
            if sink[start] != UNSEEN || self.choice[start].is_none() {
                continue;
            }
            let mut chain = vec![start];
            let resolved = loop {
                let cur = *chain.last().unwrap();
                match self.choice[cur] {
                    None => break cur,
                    Some(a) => {
                        let next = self.inst.arc(a).head;
                        if sink[next] != UNSEEN {
                            break sink[next];
                        }
                        if chain.contains(&next) {
                            return false; // cycle
                        }
                        chain.push(next);
                    }
                }
            };
            if resolved != self.inst.root {
                return false;
            }
            for v in chain {
                sink[v] = resolved;
            }
        }
        true
    }

    fn descend(&mut self, v: usize) {
        if v == self.inst.vertex_count {
            if let Partial::Complete(cost) = self.evaluate(v) {
                let better = self.best.as_ref().is_none_or(|(b, _)| cost < *b);
                if better && self.leaf_is_arborescence() {
                    self.best = Some((cost, self.choice.clone()));
                }
            }
            return;
        }
        // None first, then arcs ascending: the first optimum found is the
        // lexicographically least.
        let picks: Vec<Option<ArcId>> =
            std::iter::once(None).chain(self.out_arcs[v].iter().copied().map(Some)).collect();
        for pick in picks {
            self.choice[v] = pick;
            match self.evaluate(v + 1) {
                Partial::Dead => {}
                Partial::Complete(cost) | Partial::Open(cost) => {
                    // Costs only grow as walks extend; prune at the incumbent.
                    if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                        self.descend(v + 1);
                    }
                }
            }
        }
        self.choice[v] = None;
    }
}

/// Enumerate all out-arc choice functions of a valid instance.
pub fn brute_force_opt(inst: &Instance, limits: OracleLimits) -> Result<OptResult, OracleError> {
    let report = validate_instance(inst);
    if !report.ok {
        return Err(OracleError::InvalidInstance(report));
    }

    let mut out_arcs: Vec<Vec<ArcId>> = vec![Vec::new(); inst.vertex_count];
    for (id, arc) in inst.arcs.iter().enumerate() {
        out_arcs[arc.tail].push(id);
    }
    let search_space: u128 = out_arcs.iter().map(|a| a.len() as u128 + 1).product();
    if search_space > limits.max_states as u128 {
        return Err(OracleError::SearchSpaceExceeded {
            space: search_space,
            limit: limits.max_states,
        });
    }

    let mut search = Search { inst, choice: vec![None; inst.vertex_count], out_arcs, best: None };
    search.descend(0);
    let (optimum, choice) = search.best.ok_or(OracleError::Infeasible)?;
    let witness: BTreeMap<VertexId, ArcId> =
        choice.iter().enumerate().filter_map(|(v, a)| a.map(|a| (v, a))).collect();
    debug_assert_eq!(optimum, witness_cost(&witness, inst));
    Ok(OptResult { optimum, witness, search_space })
}

fn witness_cost(witness: &BTreeMap<VertexId, ArcId>, inst: &Instance) -> usize {
    inst.terminals
        .iter()
        .map(|&t| {
            let mut path = Vec::new();
            let mut cur = t;
            while let Some(&a) = witness.get(&cur) {
                path.push(a);
                cur = inst.arc(a).head;
            }
            color_switches(&path, inst)
        })
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::generate::gen_binary_tree_lower_bound;
    use crate::solver::{solve, Solution};
    use crate::verify::check_arborescence;

    #[test]
    fn single_path_optimum_is_zero() {
        let inst = fixtures::single_path(4);
        let r = brute_force_opt(&inst, OracleLimits::default()).unwrap();
        assert_eq!(r.optimum, 0);
        assert_eq!(r.witness.len(), 3);
    }

    #[test]
    fn depth_one_tree_optimum_is_zero() {
        let inst = gen_binary_tree_lower_bound(1).unwrap();
        let r = brute_force_opt(&inst, OracleLimits::default()).unwrap();
        assert_eq!(r.optimum, 0);
    }

    #[test]
    fn depth_two_tree_optimum_is_one() {
        let inst = gen_binary_tree_lower_bound(2).unwrap();
        let r = brute_force_opt(&inst, OracleLimits::default()).unwrap();
        assert_eq!(r.optimum, 1);
        // the witness must itself verify and attain the optimum
        let sol = Solution {
            out_arc: r.witness.clone(),
            iterations: 0,
            switching_costs: Default::default(),
            max_switching: 0,
        };
        assert!(check_arborescence(&sol, &inst).pass);
        assert_eq!(witness_cost(&r.witness, &inst), 1);
    }

    #[test]
    fn limit_is_an_explicit_refusal() {
        let inst = gen_binary_tree_lower_bound(2).unwrap();
        let err = brute_force_opt(&inst, OracleLimits { max_states: 10 }).unwrap_err();
        assert!(matches!(err, OracleError::SearchSpaceExceeded { .. }));
    }

    #[test]
    fn oracle_never_beats_itself_on_fixtures() {
        for inst in [fixtures::crossing_pair(), fixtures::shared_join(), fixtures::single_path(3)] {
            let r = brute_force_opt(&inst, OracleLimits::default()).unwrap();
            let (sol, _) = solve(&inst).unwrap();
            assert!(r.optimum <= sol.max_switching, "oracle must lower-bound the solver");
        }
    }

    /// Pruning-free reference: walk the whole mixed-radix choice space.
    fn naive_optimum(inst: &crate::instance::Instance) -> Option<usize> {
        let mut out_arcs: Vec<Vec<ArcId>> = vec![Vec::new(); inst.vertex_count];
        for (id, arc) in inst.arcs.iter().enumerate() {
            out_arcs[arc.tail].push(id);
        }
        let mut digits = vec![0usize; inst.vertex_count];
        let mut best: Option<usize> = None;
        loop {
            let choice: Vec<Option<ArcId>> = digits
                .iter()
                .zip(&out_arcs)
                .map(|(&d, arcs)| if d == 0 { None } else { Some(arcs[d - 1]) })
                .collect();
            if let Some(cost) = evaluate_choice(&choice, inst) {
                best = Some(best.map_or(cost, |b: usize| b.min(cost)));
            }
            // increment mixed-radix counter
            let mut pos = 0;
            loop {
                if pos == digits.len() {
                    return best;
                }
                digits[pos] += 1;
                if digits[pos] <= out_arcs[pos].len() {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
        }
    }

    fn evaluate_choice(
        choice: &[Option<ArcId>],
        inst: &crate::instance::Instance,
    ) -> Option<usize> {
        // acyclic + every chosen vertex and every terminal reaches the root
        let mut worst = 0usize;
        for v in 0..inst.vertex_count {
            if choice[v].is_none() && !inst.terminals.contains(&v) {
                continue;
            }
            let mut cur = v;
            let mut steps = 0;
            let mut switches = 0usize;
            let mut prev: Option<crate::instance::ColorId> = None;
            while cur != inst.root {
                let a = choice[cur]?;
                let arc = inst.arc(a);
                if prev.is_some_and(|p| p != arc.color) {
                    switches += 1;
                }
                prev = Some(arc.color);
                cur = arc.head;
                steps += 1;
                if steps > inst.vertex_count {
                    return None; // cycle
                }
            }
            if inst.terminals.contains(&v) {
                worst = worst.max(switches);
            }
        }
        Some(worst)
    }

    #[test]
    fn pruned_search_matches_naive_enumeration() {
        // Tangled little instances: paths wander freely, so the search tree
        // sees plenty of dead ends and near-misses for the pruning to chew.
        for seed in 0..60u64 {
            let n = 3 + (seed as usize) % 4;
            let k = 1 + (seed as usize) % (n - 1);
            let mut rng = crate::generate::SplitMix64::new(seed);
            let mut arcs: Vec<(usize, usize, String)> = Vec::new();
            let mut paths = std::collections::BTreeMap::new();
            for t in 1..=k {
                let token = format!("w{}", rng.below(3));
                let mut visited = vec![false; n];
                visited[t] = true;
                let mut cur = t;
                let mut path = Vec::new();
                loop {
                    let candidates: Vec<usize> = (1..n).filter(|&v| !visited[v]).collect();
                    let next = if candidates.is_empty() || rng.below(3) == 0 {
                        0
                    } else {
                        candidates[rng.below(candidates.len() as u64) as usize]
                    };
                    path.push(arcs.len());
                    arcs.push((cur, next, token.clone()));
                    if next == 0 {
                        break;
                    }
                    visited[next] = true;
                    cur = next;
                }
                paths.insert(t, path);
            }
            // a couple of decoys sharing the same color pool
            for _ in 0..2 {
                let t = rng.below(n as u64 - 1) as usize + 1;
                let mut h = rng.below(n as u64) as usize;
                if h == t {
                    h = 0;
                }
                arcs.push((t, h, format!("w{}", rng.below(3))));
            }
            let inst = crate::instance::Instance::new(n, 0, arcs, (1..=k).collect(), paths);
            if !crate::instance::validate_instance(&inst).ok {
                continue;
            }
            let pruned = brute_force_opt(&inst, OracleLimits::default()).unwrap();
            let naive = naive_optimum(&inst).expect("valid instances are feasible");
            assert_eq!(pruned.optimum, naive, "seed {seed}");
        }
    }

    #[test]
    fn witness_is_lexicographically_least() {
        // two optimal witnesses exist (red or blue 1->0); None<Some and
        // ascending arc ids make the red arc (id 0) the canonical pick
        let inst = crate::instance::Instance::new(
            2,
            0,
            vec![(1, 0, "red".into()), (1, 0, "blue".into())],
            vec![1],
            std::collections::BTreeMap::from([(1, vec![0])]),
        );
        let r = brute_force_opt(&inst, OracleLimits::default()).unwrap();
        assert_eq!(r.optimum, 0);
        assert_eq!(r.witness, std::collections::BTreeMap::from([(1, 0)]));
        assert_eq!(r.search_space, 3);
    }
}
