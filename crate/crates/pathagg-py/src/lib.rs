//! Python bindings for the path aggregation toolkit.
//!
//! Exposes instances, generators, the solver with its replayable trace, the
//! trace checker, the tree baseline, and the exhaustive oracle as a native
//! extension module. Build with
//! `cargo build -p pathagg-py --release` and import the produced cdylib as
//! `pathagg_py` (see `python/smoke_test.py`).

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pathagg::bounds;
use pathagg::dot::render_solution;
use pathagg::generate;
use pathagg::heavy_path::{heavy_path_decomposition, is_tree_instance, solve_tree_instance};
use pathagg::instance::{parse_instance, serialize_instance, simplify_walk, validate_instance};
use pathagg::oracle::{brute_force_opt, OracleError, OracleLimits};
use pathagg::solver::{solve as solve_rs, Trace};
use pathagg::verify::{check_arborescence, check_trace as check_trace_rs, switching_costs};

/// A colored multigraph with root, terminals, and proposed paths.
#[pyclass(frozen)]
struct Instance {
    inner: pathagg::Instance,
}

#[pymethods]
impl Instance {
    /// Parse the instance file format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner =
            parse_instance(text.as_bytes()).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Instance { inner })
    }

    fn to_json(&self) -> String {
        serialize_instance(&self.inner)
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count
    }

    #[getter]
    fn arc_count(&self) -> usize {
        self.inner.arc_count()
    }

    #[getter]
    fn terminal_count(&self) -> usize {
        self.inner.terminal_count()
    }

    #[getter]
    fn root(&self) -> usize {
        self.inner.root
    }

    #[getter]
    fn terminals(&self) -> Vec<usize> {
        self.inner.terminals.clone()
    }

    /// All arcs as (tail, head, color token) triples, in arc-id order.
    fn arcs(&self) -> Vec<(usize, usize, String)> {
        self.inner
            .arcs
            .iter()
            .map(|a| (a.tail, a.head, self.inner.color_token(a.color).to_string()))
            .collect()
    }

    /// Arc ids of a terminal's proposed path.
    fn path(&self, terminal: usize) -> Option<Vec<usize>> {
        self.inner.path(terminal).map(|p| p.to_vec())
    }

    /// (rule, message) pairs for every broken invariant; empty means valid.
    fn validate(&self) -> Vec<(String, String)> {
        validate_instance(&self.inner).violations.into_iter().map(|v| (v.rule, v.message)).collect()
    }

    fn is_valid(&self) -> bool {
        validate_instance(&self.inner).ok
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    /// Shortcut loops out of a monochromatic walk (arc ids), returning a
    /// vertex-simple path with the same endpoints.
    fn simplify_walk(&self, walk: Vec<usize>) -> PyResult<Vec<usize>> {
        simplify_walk(&walk, &self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(n={}, m={}, k={}, root={})",
            self.inner.vertex_count,
            self.inner.arc_count(),
            self.inner.terminal_count(),
            self.inner.root,
        )
    }
}

/// An arborescence with per-terminal switching costs.
#[pyclass(frozen)]
struct Solution {
    inner: pathagg::Solution,
}

#[pymethods]
impl Solution {
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn max_switching(&self) -> usize {
        self.inner.max_switching
    }

    /// terminal -> number of color switches on its root path.
    fn switching_costs(&self) -> BTreeMap<usize, usize> {
        self.inner.switching_costs.clone()
    }

    /// vertex -> chosen outgoing arc id.
    fn out_arcs(&self) -> BTreeMap<usize, usize> {
        self.inner.out_arc.clone()
    }

    fn arc_count(&self) -> usize {
        self.inner.out_arc.len()
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("solution serialization")
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(arcs={}, iterations={}, max_switching={})",
            self.inner.out_arc.len(),
            self.inner.iterations,
            self.inner.max_switching,
        )
    }
}

fn gen_err(e: generate::GenError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Complete binary lower-bound tree of the given depth.
#[pyfunction]
fn generate_lower_bound_tree(depth: usize) -> PyResult<Instance> {
    Ok(Instance { inner: generate::gen_binary_tree_lower_bound(depth).map_err(gen_err)? })
}

/// Random in-tree with parallel colored paths; all non-root vertices are
/// terminals.
#[pyfunction]
#[pyo3(signature = (n, max_parallel=4, seed=0))]
fn generate_random_tree(n: usize, max_parallel: usize, seed: u64) -> PyResult<Instance> {
    Ok(Instance { inner: generate::gen_random_tree(n, max_parallel, seed).map_err(gen_err)? })
}

/// Planted-path DAG with decoy arcs.
#[pyfunction]
#[pyo3(signature = (n, k, extra_arcs=0, seed=0))]
fn generate_planted_dag(n: usize, k: usize, extra_arcs: usize, seed: u64) -> PyResult<Instance> {
    Ok(Instance { inner: generate::gen_planted_dag(n, k, extra_arcs, seed).map_err(gen_err)? })
}

/// Run the aggregation solver; returns (Solution, trace) where the trace is
/// the newline-delimited replay format.
#[pyfunction]
fn solve(inst: &Instance) -> PyResult<(Solution, String)> {
    let (solution, trace) =
        solve_rs(&inst.inner).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((Solution { inner: solution }, trace.to_ndjson()))
}

/// True iff the solution is an arborescence connecting every terminal to the
/// root and its recorded switching costs match recomputation.
#[pyfunction]
fn verify_solution(inst: &Instance, sol: &Solution) -> bool {
    if !check_arborescence(&sol.inner, &inst.inner).pass {
        return false;
    }
    let report = switching_costs(&sol.inner, &inst.inner);
    report.costs == sol.inner.switching_costs && report.max == sol.inner.max_switching
}

/// Replay a trace and check the per-round invariants. Returns
/// (pass, detail-of-first-failure-or-None).
#[pyfunction]
fn check_trace(inst: &Instance, trace_text: &str) -> PyResult<(bool, Option<String>)> {
    let trace = Trace::from_ndjson(trace_text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report =
        check_trace_rs(&trace, &inst.inner).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let detail = report
        .first_failure
        .map(|w| format!("iteration {} {}: {}", w.iteration, w.condition, w.detail));
    Ok((report.pass, detail))
}

/// Exhaustive minimum of the max switching cost; (optimum, search_space).
/// Raises RuntimeError when the choice space exceeds max_states.
#[pyfunction]
#[pyo3(signature = (inst, max_states=10_000_000))]
fn oracle_optimum(inst: &Instance, max_states: u64) -> PyResult<(usize, u128)> {
    match brute_force_opt(&inst.inner, OracleLimits { max_states }) {
        Ok(r) => Ok((r.optimum, r.search_space)),
        Err(e @ OracleError::SearchSpaceExceeded { .. }) => {
            Err(PyRuntimeError::new_err(e.to_string()))
        }
        Err(other) => Err(PyValueError::new_err(other.to_string())),
    }
}

/// Heavy-path baseline for tree-shaped instances; raises ValueError when
/// collapsing parallel arcs does not leave an in-tree.
#[pyfunction]
fn baseline_solve(inst: &Instance) -> PyResult<Solution> {
    let tree = is_tree_instance(&inst.inner)
        .ok_or_else(|| PyValueError::new_err("is_tree_instance: not a tree-shaped instance"))?;
    let decomposition = heavy_path_decomposition(&tree);
    let solution = solve_tree_instance(&inst.inner, &tree, &decomposition)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(Solution { inner: solution })
}

/// Graphviz rendering of a solution, arcs colored by token.
#[pyfunction]
fn render_dot(inst: &Instance, sol: &Solution) -> String {
    render_solution(&inst.inner, &sol.inner)
}

/// Integer-safe worst-case switching bound 2*(floor(log_{4/3} k) + 1).
#[pyfunction]
fn switching_bound(k: u64) -> u32 {
    bounds::switching_bound(k)
}

/// Worst-case iteration bound floor(log_{4/3} k) + 1.
#[pyfunction]
fn iteration_bound(k: u64) -> u32 {
    bounds::iteration_bound(k)
}

/// Real-valued 2*log_{4/3} k, for display.
#[pyfunction]
fn switching_bound_real(k: u64) -> f64 {
    bounds::switching_bound_real(k)
}

#[pymodule]
fn pathagg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Instance>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(generate_lower_bound_tree, m)?)?;
    m.add_function(wrap_pyfunction!(generate_random_tree, m)?)?;
    m.add_function(wrap_pyfunction!(generate_planted_dag, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify_solution, m)?)?;
    m.add_function(wrap_pyfunction!(check_trace, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_solve, m)?)?;
    m.add_function(wrap_pyfunction!(render_dot, m)?)?;
    m.add_function(wrap_pyfunction!(switching_bound, m)?)?;
    m.add_function(wrap_pyfunction!(iteration_bound, m)?)?;
    m.add_function(wrap_pyfunction!(switching_bound_real, m)?)?;
    Ok(())
}
