//! Path aggregation for colored directed multigraphs.
//!
//! Given a root, a set of terminals, and one monochromatic terminal-to-root
//! path per terminal, the solver builds a single arborescence containing all
//! terminals in which every terminal-to-root path switches colors O(log k)
//! times. The crate also ships a heavy-path-decomposition baseline for
//! tree-shaped instances, seeded instance generators, an exhaustive optimum
//! oracle for tiny instances, an independent per-round invariant checker
//! over execution traces, and Graphviz export.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod coloring;
pub mod dot;
pub mod fixtures;
pub mod generate;
pub mod heavy_path;
pub mod instance;
pub mod oracle;
pub mod solver;
pub mod verify;

pub use bounds::{iteration_bound, switching_bound, switching_bound_real};
pub use instance::{
    parse_instance, serialize_instance, validate_instance, Arc, ArcId, ColorId, Instance,
    ValidationReport, VertexId,
};
pub use solver::{solve, Solution, Trace};
pub use verify::{check_arborescence, check_trace, switching_costs, InvariantReport};
