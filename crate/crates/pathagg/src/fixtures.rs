//! Hand-built adversarial instances exercising the solver's corner cases:
//! mutual blocking between two prefixes, several terminals joining one
//! target, and a tree whose decomposition aggregates everything into two
//! monochromatic chains. Used by unit, property, and acceptance tests.

use std::collections::BTreeMap;

use crate::instance::{Instance, VertexId};

/// Reference anchor for the depth-2 lower-bound instance: (iterations,
/// max switching) of the deterministic run, pinned once as a regression
/// guard. The run matches the exhaustive optimum of 1 for that instance.
pub const DEPTH2_REFERENCE: (usize, usize) = (3, 1);

/// One terminal, one monochromatic chain n-1 -> n-2 -> ... -> 0.
pub fn single_path(n: usize) -> Instance {
    assert!(n >= 2);
    let arcs = (0..n - 1).map(|i| (n - 1 - i, n - 2 - i, "c".to_string())).collect();
    Instance::new(n, 0, arcs, vec![n - 1], BTreeMap::from([(n - 1, (0..n - 1).collect())]))
}

/// Two terminals whose path continuations enter each other's prefix, forcing
/// a circular block: 1's path runs 1 -> 3 -> 2 -> 0 (blue) through terminal
/// 2, while 2's runs 2 -> 4 -> 1 -> 0 (green) through terminal 1. Resolving
/// it requires one retired arc to be cut later.
pub fn crossing_pair() -> Instance {
    Instance::new(
        5,
        0,
        vec![
            (1, 3, "blue".into()),
            (3, 2, "blue".into()),
            (2, 0, "blue".into()),
            (2, 4, "green".into()),
            (4, 1, "green".into()),
            (1, 0, "green".into()),
        ],
        vec![1, 2],
        BTreeMap::from([(1, vec![0, 1, 2]), (2, vec![3, 4, 5])]),
    )
}

/// Three terminals funneling through one vertex: terminal 1 reaches the root
/// first, terminals 2 and 3 both block on vertex 4 of its prefix and join it
/// in the same round.
pub fn shared_join() -> Instance {
    Instance::new(
        5,
        0,
        vec![
            (1, 4, "c1".into()),
            (4, 0, "c1".into()),
            (2, 4, "c2".into()),
            (4, 0, "c2".into()),
            (3, 4, "c3".into()),
            (4, 0, "c3".into()),
        ],
        vec![1, 2, 3],
        BTreeMap::from([(1, vec![0, 1]), (2, vec![2, 3]), (3, vec![4, 5])]),
    )
}

/// A spine 3 -> 2 -> 1 -> 0 with leaves 4 and 5 hanging off vertex 3, every
/// non-root vertex a terminal with fresh parallel arcs in its own color.
/// The spine arcs are all heavy, so the decomposition has one long chain and
/// two leaf paths and every terminal switches at most once.
pub fn caterpillar() -> Instance {
    let parent: BTreeMap<VertexId, VertexId> =
        BTreeMap::from([(1, 0), (2, 1), (3, 2), (4, 3), (5, 3)]);
    let mut arcs: Vec<(VertexId, VertexId, String)> = Vec::new();
    let mut paths: BTreeMap<VertexId, Vec<usize>> = BTreeMap::new();
    for v in 1..=5 {
        let token = format!("t{v}");
        let mut path = Vec::new();
        let mut cur = v;
        while cur != 0 {
            path.push(arcs.len());
            arcs.push((cur, parent[&cur], token.clone()));
            cur = parent[&cur];
        }
        paths.insert(v, path);
    }
    Instance::new(6, 0, arcs, (1..=5).collect(), paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate_instance;

    #[test]
    fn fixtures_validate() {
        for inst in [single_path(4), crossing_pair(), shared_join(), caterpillar()] {
            let report = validate_instance(&inst);
            assert!(report.ok, "{:?}", report.violations);
        }
    }
}
