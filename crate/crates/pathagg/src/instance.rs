//! Problem instances: a colored directed multigraph with a root, a set of
//! terminals, and one monochromatic terminal-to-root path per terminal.
//!
//! Vertices and arcs are dense integer indices. Colors are opaque string
//! tokens in files and interned integer ids in memory; the interning order is
//! canonical (first occurrence in arc order), so structural equality and
//! serialization round-trips are exact.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = usize;
pub type ArcId = usize;
pub type ColorId = u32;

/// A directed arc. Parallel arcs are permitted; arc identity is the index in
/// [`Instance::arcs`], never the endpoint pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc {
    pub tail: VertexId,
    pub head: VertexId,
    pub color: ColorId,
}

/// An aggregation instance.
///
/// `paths` maps each terminal to the arc-id list of its proposed path; arc-id
/// lists (rather than vertex lists) keep parallel arcs unambiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub vertex_count: usize,
    pub root: VertexId,
    pub arcs: Vec<Arc>,
    /// Interned color tokens; `Arc::color` indexes into this table.
    pub colors: Vec<String>,
    pub terminals: Vec<VertexId>,
    pub paths: BTreeMap<VertexId, Vec<ArcId>>,
}

impl Instance {
    /// Build an instance from arcs carrying color tokens. Tokens are interned
    /// in order of first occurrence, which keeps the color table canonical.
    pub fn new(
        vertex_count: usize,
        root: VertexId,
        arcs: Vec<(VertexId, VertexId, String)>,
        terminals: Vec<VertexId>,
        paths: BTreeMap<VertexId, Vec<ArcId>>,
    ) -> Self {
        let mut colors: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, ColorId> = BTreeMap::new();
        let arcs = arcs
            .into_iter()
            .map(|(tail, head, token)| {
                let color = *index.entry(token.clone()).or_insert_with(|| {
                    colors.push(token);
                    (colors.len() - 1) as ColorId
                });
                Arc { tail, head, color }
            })
            .collect();
        Instance { vertex_count, root, arcs, colors, terminals, paths }
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn terminal_count(&self) -> usize {
        self.terminals.len()
    }

    pub fn color_token(&self, color: ColorId) -> &str {
        &self.colors[color as usize]
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id]
    }

    /// Proposed path of a terminal, if present.
    pub fn path(&self, terminal: VertexId) -> Option<&[ArcId]> {
        self.paths.get(&terminal).map(|p| p.as_slice())
    }

    /// Vertices of the prefix made of the first `len` arcs of `terminal`'s
    /// proposed path: the terminal itself followed by the arc heads.
    pub fn prefix_vertices(&self, terminal: VertexId, len: usize) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(len + 1);
        out.push(terminal);
        if let Some(path) = self.path(terminal) {
            for &a in &path[..len.min(path.len())] {
                out.push(self.arcs[a].head);
            }
        }
        out
    }

    /// FNV-1a over the canonical serialization; used to pair traces and
    /// solution files with the instance they were computed from.
    pub fn content_hash(&self) -> String {
        format!("{:016x}", fnv1a64(serialize_instance(self).as_bytes()))
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// One broken rule, with the ids needed to locate it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub message: String,
    pub ids: Vec<usize>,
}

/// Result of [`validate_instance`]; `ok` iff `violations` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from(violations: Vec<Violation>) -> Self {
        ValidationReport { ok: violations.is_empty(), violations }
    }
}

fn violation(rule: &str, message: String, ids: Vec<usize>) -> Violation {
    Violation { rule: rule.to_string(), message, ids }
}

/// Check every instance invariant on untrusted data and enumerate all broken
/// rules, not only the first.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let n = inst.vertex_count;
    let m = inst.arcs.len();
    let mut v = Vec::new();

    if inst.root >= n {
        v.push(violation(
            "root-range",
            format!("root {} out of range 0..{n}", inst.root),
            vec![inst.root],
        ));
    }

    let mut seen: BTreeSet<VertexId> = BTreeSet::new();
    for &t in &inst.terminals {
        if t >= n {
            v.push(violation(
                "terminal-range",
                format!("terminal {t} out of range 0..{n}"),
                vec![t],
            ));
        }
        if t == inst.root {
            v.push(violation("root-is-terminal", format!("root {t} listed as terminal"), vec![t]));
        }
        if !seen.insert(t) {
            v.push(violation("terminal-duplicate", format!("terminal {t} listed twice"), vec![t]));
        }
    }

    for (id, arc) in inst.arcs.iter().enumerate() {
        if arc.tail >= n || arc.head >= n {
            v.push(violation(
                "arc-range",
                format!("arc {id} endpoints {}->{} out of range 0..{n}", arc.tail, arc.head),
                vec![id],
            ));
        }
        if arc.tail == arc.head {
            v.push(violation(
                "arc-self-loop",
                format!("arc {id} is a self-loop at {}", arc.tail),
                vec![id],
            ));
        }
        if (arc.color as usize) >= inst.colors.len() {
            v.push(violation(
                "arc-color-range",
                format!("arc {id} has uninterned color {}", arc.color),
                vec![id],
            ));
        }
    }

    for &t in &inst.terminals {
        if !inst.paths.contains_key(&t) {
            v.push(violation(
                "path-missing",
                format!("terminal {t} has no proposed path"),
                vec![t],
            ));
        }
    }

    for (&t, path) in &inst.paths {
        if !inst.terminals.contains(&t) {
            v.push(violation(
                "path-unknown-terminal",
                format!("path keyed by non-terminal {t}"),
                vec![t],
            ));
            continue;
        }
        if path.is_empty() {
            v.push(violation("path-empty", format!("terminal {t} has an empty path"), vec![t]));
            continue;
        }
        if path.iter().any(|&a| a >= m) {
            v.push(violation(
                "path-arc-range",
                format!("path of terminal {t} references a missing arc"),
                vec![t],
            ));
            continue;
        }
        let arcs: Vec<&Arc> = path.iter().map(|&a| &inst.arcs[a]).collect();
        if arcs.iter().any(|a| a.tail >= n || a.head >= n) {
            continue; // endpoint violations already reported per arc
        }
        if arcs[0].tail != t {
            v.push(violation(
                "path-wrong-start",
                format!("path of terminal {t} starts at {}", arcs[0].tail),
                vec![t, arcs[0].tail],
            ));
        }
        if arcs[arcs.len() - 1].head != inst.root {
            v.push(violation(
                "path-wrong-end",
                format!("path of terminal {t} ends at {}", arcs[arcs.len() - 1].head),
                vec![t, arcs[arcs.len() - 1].head],
            ));
        }
        for w in arcs.windows(2) {
            if w[0].head != w[1].tail {
                v.push(violation(
                    "path-not-contiguous",
                    format!("path of terminal {t} jumps from {} to {}", w[0].head, w[1].tail),
                    vec![t],
                ));
                break;
            }
        }
        let mut visited: BTreeSet<VertexId> = BTreeSet::new();
        visited.insert(arcs[0].tail);
        for a in &arcs {
            if !visited.insert(a.head) {
                v.push(violation(
                    "path-not-simple",
                    format!("path of terminal {t} revisits vertex {}", a.head),
                    vec![t, a.head],
                ));
                break;
            }
        }
        if arcs.iter().any(|a| a.color != arcs[0].color) {
            v.push(violation(
                "path-not-monochromatic",
                format!("path of terminal {t} mixes colors"),
                vec![t],
            ));
        }
    }

    ValidationReport::from(v)
}

// ---------------------------------------------------------------------------
// Walk repair
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalkError {
    #[error("walk is empty")]
    Empty,
    #[error("walk references missing arc {0}")]
    MissingArc(ArcId),
    #[error("walk is not contiguous at position {0}")]
    NotContiguous(usize),
    #[error("walk is not monochromatic at position {0}")]
    NotMonochromatic(usize),
}

/// Shortcut every loop of a monochromatic walk, scanning left to right, so
/// the result is a vertex-simple path with the same first tail and last head.
///
/// The solver never calls this: non-simple input paths are rejected by
/// [`validate_instance`], and repair stays an explicit user action.
pub fn simplify_walk(walk: &[ArcId], inst: &Instance) -> Result<Vec<ArcId>, WalkError> {
    if walk.is_empty() {
        return Err(WalkError::Empty);
    }
    for &a in walk {
        if a >= inst.arcs.len() {
            return Err(WalkError::MissingArc(a));
        }
    }
    let color = inst.arcs[walk[0]].color;
    let mut prev_head = inst.arcs[walk[0]].tail;
    for (i, &a) in walk.iter().enumerate() {
        let arc = &inst.arcs[a];
        if arc.tail != prev_head {
            return Err(WalkError::NotContiguous(i));
        }
        if arc.color != color {
            return Err(WalkError::NotMonochromatic(i));
        }
        prev_head = arc.head;
    }

    // Scan keeping a stack of visited vertices; a repeated head truncates the
    // kept arcs back to its first visit, deleting the whole cycle segment.
    let start = inst.arcs[walk[0]].tail;
    let mut kept: Vec<ArcId> = Vec::new();
    let mut vertices: Vec<VertexId> = vec![start];
    let mut position: BTreeMap<VertexId, usize> = BTreeMap::new();
    position.insert(start, 0);
    for &a in walk {
        let head = inst.arcs[a].head;
        if let Some(&at) = position.get(&head) {
            for dropped in &vertices[at + 1..] {
                position.remove(dropped);
            }
            vertices.truncate(at + 1);
            kept.truncate(at);
        } else {
            kept.push(a);
            position.insert(head, vertices.len());
            vertices.push(head);
        }
    }
    Ok(kept)
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed instance document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("arc at position {position} has id {id}; ids must equal array position")]
    ArcIdMismatch { position: usize, id: usize },
    #[error("arc {id} is a self-loop at vertex {vertex}")]
    SelfLoop { id: usize, vertex: usize },
    #[error("arc {id} references vertex {vertex} outside 0..{vertices}")]
    DanglingVertex { id: usize, vertex: usize, vertices: usize },
    #[error("root {root} outside 0..{vertices}")]
    DanglingRoot { root: usize, vertices: usize },
    #[error("terminal {terminal} outside 0..{vertices}")]
    DanglingTerminal { terminal: usize, vertices: usize },
    #[error("path of terminal {terminal} references missing arc {arc}")]
    DanglingPathArc { terminal: usize, arc: usize },
    #[error("path key {terminal} outside 0..{vertices}")]
    DanglingPathKey { terminal: usize, vertices: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcDoc {
    id: usize,
    tail: usize,
    head: usize,
    color: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    vertices: usize,
    root: usize,
    arcs: Vec<ArcDoc>,
    terminals: Vec<usize>,
    paths: BTreeMap<usize, Vec<usize>>,
}

/// Parse the instance file format. Structural identity rules (ids in range,
/// arc id equal to array position, no self-loops) are enforced here; the
/// semantic invariants stay with [`validate_instance`].
pub fn parse_instance(bytes: &[u8]) -> Result<Instance, ParseError> {
    let doc: InstanceDoc = serde_json::from_slice(bytes)?;
    let n = doc.vertices;
    let m = doc.arcs.len();
    if doc.root >= n {
        return Err(ParseError::DanglingRoot { root: doc.root, vertices: n });
    }
    for (position, arc) in doc.arcs.iter().enumerate() {
        if arc.id != position {
            return Err(ParseError::ArcIdMismatch { position, id: arc.id });
        }
        for vertex in [arc.tail, arc.head] {
            if vertex >= n {
                return Err(ParseError::DanglingVertex { id: arc.id, vertex, vertices: n });
            }
        }
        if arc.tail == arc.head {
            return Err(ParseError::SelfLoop { id: arc.id, vertex: arc.tail });
        }
    }
    for &t in &doc.terminals {
        if t >= n {
            return Err(ParseError::DanglingTerminal { terminal: t, vertices: n });
        }
    }
    for (&t, path) in &doc.paths {
        if t >= n {
            return Err(ParseError::DanglingPathKey { terminal: t, vertices: n });
        }
        for &a in path {
            if a >= m {
                return Err(ParseError::DanglingPathArc { terminal: t, arc: a });
            }
        }
    }
    Ok(Instance::new(
        n,
        doc.root,
        doc.arcs.into_iter().map(|a| (a.tail, a.head, a.color)).collect(),
        doc.terminals,
        doc.paths,
    ))
}

/// Serialize to the instance file format. Output is byte-deterministic:
/// fixed field order, sorted path keys, two-space indentation.
pub fn serialize_instance(inst: &Instance) -> String {
    let doc = InstanceDoc {
        vertices: inst.vertex_count,
        root: inst.root,
        arcs: inst
            .arcs
            .iter()
            .enumerate()
            .map(|(id, a)| ArcDoc {
                id,
                tail: a.tail,
                head: a.head,
                color: inst.color_token(a.color).to_string(),
            })
            .collect(),
        terminals: inst.terminals.clone(),
        paths: inst.paths.iter().map(|(&t, p)| (t, p.clone())).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("instance serialization cannot fail");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> Instance {
        Instance::new(2, 0, vec![(1, 0, "red".into())], vec![1], BTreeMap::from([(1, vec![0])]))
    }

    #[test]
    fn minimal_instance_validates() {
        let report = validate_instance(&minimal());
        assert!(report.ok, "{:?}", report.violations);
    }

    #[test]
    fn mixed_color_path_is_rejected() {
        let inst = Instance::new(
            3,
            0,
            vec![(2, 1, "red".into()), (1, 0, "blue".into())],
            vec![2],
            BTreeMap::from([(2, vec![0, 1])]),
        );
        let report = validate_instance(&inst);
        assert!(!report.ok);
        assert!(report.violations.iter().any(|v| v.rule == "path-not-monochromatic"));
    }

    #[test]
    fn revisiting_path_is_rejected() {
        // 2 -> 1 -> 3 -> 1 -> 0, all red
        let inst = Instance::new(
            4,
            0,
            vec![
                (2, 1, "red".into()),
                (1, 3, "red".into()),
                (3, 1, "red".into()),
                (1, 0, "red".into()),
            ],
            vec![2],
            BTreeMap::from([(2, vec![0, 1, 2, 3])]),
        );
        let report = validate_instance(&inst);
        assert!(!report.ok);
        assert!(report.violations.iter().any(|v| v.rule == "path-not-simple"));
    }

    #[test]
    fn all_violations_are_enumerated() {
        let inst = Instance::new(2, 0, vec![(1, 1, "red".into())], vec![1, 1, 0], BTreeMap::new());
        let report = validate_instance(&inst);
        let rules: BTreeSet<&str> = report.violations.iter().map(|v| v.rule.as_str()).collect();
        assert!(rules.contains("arc-self-loop"));
        assert!(rules.contains("terminal-duplicate"));
        assert!(rules.contains("root-is-terminal"));
        assert!(rules.contains("path-missing"));
    }

    #[test]
    fn simplify_keeps_simple_walk() {
        let inst = minimal();
        assert_eq!(simplify_walk(&[0], &inst).unwrap(), vec![0]);
    }

    #[test]
    fn simplify_removes_single_loop() {
        // v=1 -> a=2 -> b=3 -> a=2 -> r=0
        let inst = Instance::new(
            4,
            0,
            vec![(1, 2, "c".into()), (2, 3, "c".into()), (3, 2, "c".into()), (2, 0, "c".into())],
            vec![],
            BTreeMap::new(),
        );
        assert_eq!(simplify_walk(&[0, 1, 2, 3], &inst).unwrap(), vec![0, 3]);
    }

    #[test]
    fn simplify_rejects_broken_walks() {
        let inst = Instance::new(
            3,
            0,
            vec![(2, 1, "red".into()), (1, 0, "blue".into()), (2, 0, "red".into())],
            vec![],
            BTreeMap::new(),
        );
        assert_eq!(simplify_walk(&[0, 2], &inst), Err(WalkError::NotContiguous(1)));
        assert_eq!(simplify_walk(&[0, 1], &inst), Err(WalkError::NotMonochromatic(1)));
        assert_eq!(simplify_walk(&[], &inst), Err(WalkError::Empty));
    }

    /// Reference loop remover: repeatedly find the earliest repeated vertex
    /// and cut the segment between its two visits, restarting each time.
    fn reference_simplify(walk: &[ArcId], inst: &Instance) -> Vec<ArcId> {
        let mut walk = walk.to_vec();
        'outer: loop {
            if walk.is_empty() {
                return walk;
            }
            let mut vertices = vec![inst.arcs[walk[0]].tail];
            for &a in &walk {
                vertices.push(inst.arcs[a].head);
            }
            for j in 1..vertices.len() {
                if let Some(i) = (0..j).find(|&i| vertices[i] == vertices[j]) {
                    let mut next = walk[..i].to_vec();
                    next.extend_from_slice(&walk[j..]);
                    walk = next;
                    continue 'outer;
                }
            }
            return walk;
        }
    }

    #[test]
    fn simplify_matches_exhaustive_oracle_on_short_walks() {
        // Complete digraph on 4 vertices, one color; enumerate every
        // contiguous walk of length <= 6 starting at vertex 0.
        let mut arcs = Vec::new();
        for i in 0..4usize {
            for j in 0..4usize {
                if i != j {
                    arcs.push((i, j, "c".to_string()));
                }
            }
        }
        let inst = Instance::new(4, 0, arcs, vec![], BTreeMap::new());
        let out_arcs: Vec<Vec<ArcId>> = (0..4)
            .map(|v| (0..inst.arcs.len()).filter(|&a| inst.arcs[a].tail == v).collect())
            .collect();

        let mut stack: Vec<Vec<ArcId>> = out_arcs[0].iter().map(|&a| vec![a]).collect();
        let mut checked = 0usize;
        while let Some(walk) = stack.pop() {
            let simplified = simplify_walk(&walk, &inst).unwrap();
            assert_eq!(simplified, reference_simplify(&walk, &inst), "walk {walk:?}");
            // Output is vertex-simple with the original endpoints (a closed
            // walk collapses to nothing and has no endpoints to preserve).
            if !simplified.is_empty() {
                let mut seen = BTreeSet::new();
                seen.insert(inst.arcs[simplified[0]].tail);
                for &a in &simplified {
                    assert!(seen.insert(inst.arcs[a].head));
                }
                assert_eq!(inst.arcs[simplified[0]].tail, inst.arcs[walk[0]].tail);
                assert_eq!(
                    inst.arcs[*simplified.last().unwrap()].head,
                    inst.arcs[*walk.last().unwrap()].head
                );
            }
            let head = inst.arcs[*walk.last().unwrap()].head;
            checked += 1;
            if walk.len() < 6 {
                for &a in &out_arcs[head] {
                    let mut next = walk.clone();
                    next.push(a);
                    stack.push(next);
                }
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn roundtrip_is_identity() {
        let inst = minimal();
        let bytes = serialize_instance(&inst);
        let back = parse_instance(bytes.as_bytes()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn parse_counts_on_generated_fixture() {
        let inst = crate::generate::gen_binary_tree_lower_bound(2).unwrap();
        let parsed = parse_instance(serialize_instance(&inst).as_bytes()).unwrap();
        assert_eq!(parsed.vertex_count, 7);
        assert_eq!(parsed.terminal_count(), 6);
        assert_eq!(parsed.arc_count(), 10);
    }

    #[test]
    fn parse_rejects_self_loop() {
        let doc = r#"{
            "vertices": 2, "root": 0,
            "arcs": [{"id": 0, "tail": 1, "head": 1, "color": "red"}],
            "terminals": [1], "paths": {"1": [0]}
        }"#;
        assert!(matches!(parse_instance(doc.as_bytes()), Err(ParseError::SelfLoop { .. })));
    }

    #[test]
    fn parse_rejects_unknown_field() {
        let doc =
            r#"{ "vertices": 1, "root": 0, "arcs": [], "terminals": [], "paths": {}, "extra": 3 }"#;
        assert!(matches!(parse_instance(doc.as_bytes()), Err(ParseError::Malformed(_))));
    }

    #[test]
    fn parse_rejects_dangling_ids() {
        let doc = r#"{
            "vertices": 2, "root": 0,
            "arcs": [{"id": 0, "tail": 1, "head": 0, "color": "red"}],
            "terminals": [1], "paths": {"1": [7]}
        }"#;
        assert!(matches!(parse_instance(doc.as_bytes()), Err(ParseError::DanglingPathArc { .. })));
        let doc = r#"{
            "vertices": 2, "root": 5,
            "arcs": [], "terminals": [], "paths": {}
        }"#;
        assert!(matches!(parse_instance(doc.as_bytes()), Err(ParseError::DanglingRoot { .. })));
    }

    #[test]
    fn arc_id_must_match_position() {
        let doc = r#"{
            "vertices": 2, "root": 0,
            "arcs": [{"id": 1, "tail": 1, "head": 0, "color": "red"}],
            "terminals": [], "paths": {}
        }"#;
        assert!(matches!(parse_instance(doc.as_bytes()), Err(ParseError::ArcIdMismatch { .. })));
    }
}
