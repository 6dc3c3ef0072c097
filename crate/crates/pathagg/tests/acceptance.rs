//! Acceptance suite. Each test is one criterion and prints a single
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`);
//! a failing criterion fails its test.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use pathagg::bounds::{iteration_bound, switching_bound, switching_bound_real};
use pathagg::generate::{gen_binary_tree_lower_bound, GenSpec};
use pathagg::heavy_path::{heavy_path_decomposition, is_tree_instance, solve_tree_instance};
use pathagg::instance::{serialize_instance, validate_instance, Instance};
use pathagg::oracle::{brute_force_opt, OracleLimits};
use pathagg::solver::solve;
use pathagg::verify::{check_arborescence, check_trace, switching_costs};

/// The shared 500-instance corpus behind criteria 1-3: all three families,
/// n <= 2000, k <= 512, deterministic per seed.
fn corpus() -> Vec<GenSpec> {
    (0u64..500)
        .map(|seed| match seed % 3 {
            0 => GenSpec::RandomTree {
                n: 2 + (seed as usize * 37) % 512,
                max_parallel: 1 + (seed as usize) % 4,
                seed,
            },
            1 => {
                let n = 100 + (seed as usize * 31) % 1901;
                GenSpec::PlantedDag {
                    n,
                    k: 1 + (seed as usize * 17) % 512.min(n / 2),
                    extra_arcs: (seed as usize * 13) % 2000,
                    seed,
                }
            }
            _ => GenSpec::LowerBoundTree { depth: 1 + (seed as usize) % 6 },
        })
        .collect()
}

fn pass(criterion: &str, detail: String) {
    println!("criterion {criterion}: PASS - {detail}");
}

#[test]
fn criterion_1_validity_suite() {
    let mut slowest = Duration::ZERO;
    for spec in corpus() {
        let inst = spec.build().unwrap();
        assert!(inst.vertex_count <= 2000 && inst.terminal_count() <= 512, "{}", spec.id());
        let started = Instant::now();
        let (solution, _) = solve(&inst).unwrap();
        let elapsed = started.elapsed();
        slowest = slowest.max(elapsed);
        assert!(elapsed < Duration::from_secs(1), "{}: solve took {elapsed:?}", spec.id());
        let report = check_arborescence(&solution, &inst);
        assert!(report.pass, "{}: {:?}", spec.id(), report.violation);
        for t in &inst.terminals {
            assert!(solution.out_arc.contains_key(t), "{}: terminal {t} missing", spec.id());
        }
    }
    pass("1 (validity suite)", format!("500 instances, slowest solve {slowest:?}"));
}

#[test]
fn criterion_2_bound_suite() {
    let mut real_bound_exceeded = 0usize;
    for spec in corpus() {
        let inst = spec.build().unwrap();
        let k = inst.terminal_count() as u64;
        let (solution, _) = solve(&inst).unwrap();
        assert!(
            solution.max_switching <= switching_bound(k) as usize,
            "{}: {} switches over bound {}",
            spec.id(),
            solution.max_switching,
            switching_bound(k)
        );
        assert!(
            solution.iterations <= iteration_bound(k) as usize,
            "{}: {} iterations over bound {}",
            spec.id(),
            solution.iterations,
            iteration_bound(k)
        );
        // Reported, not asserted: the real-valued guarantee.
        if solution.max_switching as f64 > switching_bound_real(k) + 1e-9 {
            real_bound_exceeded += 1;
            println!(
                "criterion 2 note: {} exceeds the real-valued bound ({} > {:.3})",
                spec.id(),
                solution.max_switching,
                switching_bound_real(k)
            );
        }
    }
    pass(
        "2 (bound suite)",
        format!("500 instances within integer-safe bounds; {real_bound_exceeded} over the real-valued bound"),
    );
}

#[test]
fn criterion_3_trace_invariants() {
    for spec in corpus() {
        let inst = spec.build().unwrap();
        let (_, trace) = solve(&inst).unwrap();
        let report = check_trace(&trace, &inst).unwrap();
        assert!(report.pass, "{}: {:?}", spec.id(), report.first_failure);
        assert!(report.per_iteration.iter().all(|s| s.c1 && s.c2 && s.c3 && s.c4));
    }

    // Negative control: deleting a removal record must break c1 or c2.
    let inst = pathagg::fixtures::crossing_pair();
    let (_, mut trace) = solve(&inst).unwrap();
    let rec = trace.records.iter_mut().find(|r| !r.arcs_removed.is_empty()).unwrap();
    rec.arcs_removed.clear();
    let report = check_trace(&trace, &inst).unwrap();
    assert!(!report.pass, "corrupted trace must fail");
    let witness = report.first_failure.unwrap();
    assert!(witness.condition == "c1" || witness.condition == "c2", "{witness:?}");
    pass("3 (trace invariants)", "c1-c4 hold on 500 traces; corrupted trace rejected".into());
}

/// Every multigraph on n <= 4 vertices, up to 5 arcs, 2 colors: root 0,
/// terminals are the vertices with a monochromatic simple path to the root,
/// proposed paths are the BFS-shortest such paths (ties to lower color).
fn exhaustive_family() -> Vec<Instance> {
    let mut out = Vec::new();
    for n in 2usize..=4 {
        // arc types (tail, head, color), tail != head, head may be anything
        let mut types = Vec::new();
        for tail in 0..n {
            for head in 0..n {
                if tail != head {
                    for color in 0..2u32 {
                        types.push((tail, head, color));
                    }
                }
            }
        }
        // multisets of size 1..=5 over the types
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, Vec::new())];
        while let Some((from, chosen)) = stack.pop() {
            if !chosen.is_empty() {
                if let Some(inst) = instance_from_arcs(n, &chosen, &types) {
                    out.push(inst);
                }
            }
            if chosen.len() == 5 {
                continue;
            }
            for next in from..types.len() {
                let mut more = chosen.clone();
                more.push(next);
                stack.push((next, more));
            }
        }
    }
    out
}

fn instance_from_arcs(
    n: usize,
    chosen: &[usize],
    types: &[(usize, usize, u32)],
) -> Option<Instance> {
    let arcs: Vec<(usize, usize, String)> = chosen
        .iter()
        .map(|&i| {
            let (t, h, c) = types[i];
            (t, h, format!("c{c}"))
        })
        .collect();
    // shortest monochromatic simple path per vertex, BFS over same-color arcs
    let mut terminals = Vec::new();
    let mut paths = BTreeMap::new();
    for v in 1..n {
        let mut best: Option<Vec<usize>> = None;
        for color in ["c0", "c1"] {
            if let Some(path) = bfs_path(v, 0, color, &arcs) {
                let better = match &best {
                    None => true,
                    Some(b) => path.len() < b.len(),
                };
                if better {
                    best = Some(path);
                }
            }
        }
        if let Some(path) = best {
            terminals.push(v);
            paths.insert(v, path);
        }
    }
    if terminals.is_empty() {
        return None;
    }
    Some(Instance::new(n, 0, arcs, terminals, paths))
}

fn bfs_path(
    from: usize,
    to: usize,
    color: &str,
    arcs: &[(usize, usize, String)],
) -> Option<Vec<usize>> {
    let mut parent: BTreeMap<usize, (usize, usize)> = BTreeMap::new(); // vertex -> (prev vertex, arc id)
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = Vec::new();
            let mut cur = to;
            while cur != from {
                let (prev, arc) = parent[&cur];
                path.push(arc);
                cur = prev;
            }
            path.reverse();
            return Some(path);
        }
        for (id, (t, h, c)) in arcs.iter().enumerate() {
            if *t == u && c == color && *h != from && !parent.contains_key(h) {
                parent.insert(*h, (u, id));
                queue.push_back(*h);
            }
        }
    }
    None
}

#[test]
fn criterion_4_oracle_agreement() {
    let limits = OracleLimits::default();
    let mut oracle_time = Duration::ZERO;
    let mut count = 0usize;

    for inst in exhaustive_family() {
        assert!(validate_instance(&inst).ok);
        let (solution, _) = solve(&inst).unwrap();
        let started = Instant::now();
        let opt = brute_force_opt(&inst, limits).unwrap();
        oracle_time += started.elapsed();
        assert!(
            opt.optimum <= solution.max_switching,
            "oracle {} beats solver {} on n={} arcs={:?}",
            opt.optimum,
            solution.max_switching,
            inst.vertex_count,
            inst.arcs
        );
        let k = inst.terminal_count() as u64;
        assert!(solution.max_switching <= switching_bound(k) as usize);
        count += 1;
    }

    // plus 200 seeded tiny planted DAGs
    for seed in 0..200u64 {
        let n = 6 + (seed as usize) % 5;
        let k = 1 + (seed as usize) % 3;
        let inst = GenSpec::PlantedDag { n, k, extra_arcs: 3, seed }.build().unwrap();
        let (solution, _) = solve(&inst).unwrap();
        let started = Instant::now();
        let opt = match brute_force_opt(&inst, limits) {
            Ok(opt) => opt,
            Err(e) => panic!("seed {seed}: search space should fit: {e}"),
        };
        oracle_time += started.elapsed();
        assert!(opt.optimum <= solution.max_switching, "seed {seed}");
        assert!(solution.max_switching <= switching_bound(inst.terminal_count() as u64) as usize);
        count += 1;
    }

    assert!(oracle_time < Duration::from_secs(60), "oracle spent {oracle_time:?}, budget is 60 s");
    pass("4 (oracle agreement)", format!("{count} instances, oracle total {oracle_time:?}"));
}

#[test]
fn criterion_5_lower_bound_family() {
    for (depth, expected) in [(1usize, 0usize), (2, 1), (3, 2)] {
        let inst = gen_binary_tree_lower_bound(depth).unwrap();
        let opt = brute_force_opt(&inst, OracleLimits::default()).unwrap();
        assert_eq!(
            opt.optimum, expected,
            "depth {depth}: optimum {} != floor(log2(|V|/2)) = {expected}",
            opt.optimum
        );
        // the stated bound is exactly depth - 1 = floor(log2(|V|/2))
        let n = inst.vertex_count as f64;
        assert_eq!(expected, (n / 2.0).log2().floor() as usize);
    }
    pass("5 (lower-bound family)", "exhaustive optima 0, 1, 2 for depths 1, 2, 3".into());
}

#[test]
fn criterion_6_heavy_path_baseline() {
    let mut slowest = Duration::ZERO;
    for seed in 0..100u64 {
        let n = 2 + (seed as usize * 101) % 9999;
        let inst = GenSpec::RandomTree { n, max_parallel: 3, seed }.build().unwrap();
        let started = Instant::now();
        let tree = is_tree_instance(&inst).expect("random trees are tree instances");
        let decomposition = heavy_path_decomposition(&tree);
        let log2_bound = (n as f64).log2().ceil() as usize;
        assert!(
            decomposition.max_paths_crossed(&tree) <= log2_bound,
            "seed {seed}: {} chains crossed over ceil(log2 {n}) = {log2_bound}",
            decomposition.max_paths_crossed(&tree)
        );
        let solution = solve_tree_instance(&inst, &tree, &decomposition).unwrap();
        assert!(check_arborescence(&solution, &inst).pass, "seed {seed}");
        assert!(
            solution.max_switching <= log2_bound,
            "seed {seed}: {} switches over {log2_bound}",
            solution.max_switching
        );
        let elapsed = started.elapsed();
        slowest = slowest.max(elapsed);
        assert!(elapsed < Duration::from_secs(1), "seed {seed}: {elapsed:?}");
    }
    pass("6 (heavy-path baseline)", format!("100 trees, slowest {slowest:?}"));
}

#[test]
fn criterion_7_determinism() {
    for spec in [
        GenSpec::LowerBoundTree { depth: 4 },
        GenSpec::RandomTree { n: 300, max_parallel: 3, seed: 42 },
        GenSpec::PlantedDag { n: 400, k: 60, extra_arcs: 300, seed: 42 },
    ] {
        let a = spec.build().unwrap();
        let b = spec.build().unwrap();
        assert_eq!(
            serialize_instance(&a),
            serialize_instance(&b),
            "{}: generator output must be byte-identical",
            spec.id()
        );
        let (_, t1) = solve(&a).unwrap();
        let (_, t2) = solve(&b).unwrap();
        assert_eq!(t1.to_ndjson(), t2.to_ndjson(), "{}: traces must be byte-identical", spec.id());
    }
    pass("7 (determinism)", "instance files and traces byte-identical across runs".into());
}

#[test]
fn criterion_8_scale_smoke() {
    let spec = GenSpec::PlantedDag { n: 20_000, k: 10_000, extra_arcs: 12_000, seed: 1 };
    let inst = spec.build().unwrap();
    assert!(inst.arc_count() >= 80_000, "m = {} should be around 1e5", inst.arc_count());

    let started = Instant::now();
    let (solution, trace) = solve(&inst).unwrap();
    assert!(check_arborescence(&solution, &inst).pass);
    let switches = switching_costs(&solution, &inst);
    assert_eq!(switches.max, solution.max_switching);
    let report = check_trace(&trace, &inst).unwrap();
    assert!(report.pass, "{:?}", report.first_failure);
    let elapsed = started.elapsed();

    assert!(solution.max_switching <= switching_bound(10_000) as usize, "bound violated at scale");
    assert!(elapsed < Duration::from_secs(10), "solve+verify took {elapsed:?}, budget 10 s");
    pass(
        "8 (scale smoke)",
        format!(
            "k=10^4, n=2*10^4, m={}, iterations={}, max_switching={}, solve+verify {elapsed:?}",
            inst.arc_count(),
            solution.iterations,
            solution.max_switching
        ),
    );
}
