//! Cross-module properties: every generator output validates and survives a
//! serialization round-trip, and solver runs satisfy their own bookkeeping.
//!
//! The tangled family below is test-only: random simple paths with no
//! topological structure, so prefixes block each other in cycles and the
//! retire-and-cut machinery gets exercised far harder than the shipped
//! generators manage.

use std::collections::BTreeMap;

use proptest::prelude::*;

use pathagg::bounds::{iteration_bound, switching_bound};
use pathagg::generate::{GenSpec, SplitMix64};
use pathagg::instance::{parse_instance, serialize_instance, validate_instance, Instance};
use pathagg::solver::solve;
use pathagg::verify::{check_arborescence, check_trace};

/// Random instance whose proposed paths wander freely over the vertex set,
/// creating circular blocking between prefixes.
fn tangled_instance(n: usize, k: usize, seed: u64) -> Instance {
    assert!(k < n && n >= 2);
    let mut rng = SplitMix64::new(seed);
    let mut arcs: Vec<(usize, usize, String)> = Vec::new();
    let mut paths: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for t in 1..=k {
        let token = format!("w{t}");
        let mut visited = vec![false; n];
        visited[t] = true;
        let mut cur = t;
        let mut path = Vec::new();
        loop {
            let candidates: Vec<usize> = (1..n).filter(|&v| !visited[v]).collect();
            let next = if candidates.is_empty() || rng.below(4) == 0 {
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
    Instance::new(n, 0, arcs, (1..=k).collect(), paths)
}

#[test]
fn tangled_paths_stress_the_solver() {
    let mut mutual_blocks_seen = 0usize;
    for seed in 0..300u64 {
        let n = 4 + (seed as usize * 7) % 60;
        let k = 1 + (seed as usize * 3) % (n - 1).min(40);
        let inst = tangled_instance(n, k, seed);
        assert!(validate_instance(&inst).ok, "seed {seed}");
        let (solution, trace) = solve(&inst).unwrap();
        assert!(check_arborescence(&solution, &inst).pass, "seed {seed}");
        assert!(solution.max_switching <= switching_bound(k as u64) as usize, "seed {seed}");
        assert!(solution.iterations <= iteration_bound(k as u64) as usize, "seed {seed}");
        let report = check_trace(&trace, &inst).unwrap();
        assert!(report.pass, "seed {seed}: {:?}", report.first_failure);
        for rec in &trace.records {
            let edges: BTreeMap<usize, usize> = rec.dependency_edges.iter().copied().collect();
            if edges.iter().any(|(&u, &w)| edges.get(&w) == Some(&u)) {
                mutual_blocks_seen += 1;
            }
        }
    }
    // The family must actually hit the interesting regime.
    assert!(mutual_blocks_seen > 20, "only {mutual_blocks_seen} rounds with mutual blocking");
}

fn any_spec() -> impl Strategy<Value = GenSpec> {
    prop_oneof![
        (1usize..6).prop_map(|depth| GenSpec::LowerBoundTree { depth }),
        (2usize..120, 1usize..5, any::<u64>()).prop_map(|(n, p, seed)| GenSpec::RandomTree {
            n,
            max_parallel: p,
            seed
        }),
        (4usize..120, any::<u64>()).prop_flat_map(|(n, seed)| {
            (1usize..n / 2 + 1, 0usize..60).prop_map(move |(k, extra_arcs)| GenSpec::PlantedDag {
                n,
                k,
                extra_arcs,
                seed,
            })
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_instances_validate(spec in any_spec()) {
        let inst = spec.build().unwrap();
        let report = validate_instance(&inst);
        prop_assert!(report.ok, "{}: {:?}", spec.id(), report.violations);
    }

    #[test]
    fn serialization_roundtrips(spec in any_spec()) {
        let inst = spec.build().unwrap();
        let bytes = serialize_instance(&inst);
        let back = parse_instance(bytes.as_bytes()).unwrap();
        prop_assert_eq!(inst, back);
    }

    #[test]
    fn traces_replay_clean(spec in any_spec()) {
        let inst = spec.build().unwrap();
        let (solution, trace) = solve(&inst).unwrap();
        prop_assert!(solution.max_switching <= 2 * solution.iterations.max(1));
        let report = check_trace(&trace, &inst).unwrap();
        prop_assert!(report.pass, "{}: {:?}", spec.id(), report.first_failure);
    }
}
