//! Command-line front end: generate instances, solve them, verify solutions
//! and traces, run the exhaustive oracle and the tree baseline, and batch
//! everything into CSV for cost-versus-k experiments.
//!
//! Exit codes are a stable scripting contract: 0 success, 1 verification
//! failure, 2 invalid input, 3 resource limit, 4 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pathagg::bounds::{switching_bound, switching_bound_real};
use pathagg::dot::render_solution;
use pathagg::generate::GenSpec;
use pathagg::heavy_path::{heavy_path_decomposition, is_tree_instance, solve_tree_instance};
use pathagg::instance::{parse_instance, serialize_instance, Instance};
use pathagg::oracle::{brute_force_opt, OracleError, OracleLimits};
use pathagg::solver::{solve, Solution, SolveError, Trace};
use pathagg::verify::{check_arborescence, check_trace, switching_costs, InvariantReport};

const EXIT_VERIFICATION: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "pathagg",
    version,
    about = "Aggregate colored terminal paths into a low-switch arborescence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance file and print a summary line.
    Generate(GenerateArgs),
    /// Solve an instance; optionally write the solution, trace, and DOT.
    Solve(SolveArgs),
    /// Check a solution (and optionally its trace) against an instance.
    Verify(VerifyArgs),
    /// Exhaustive optimum for tiny instances.
    Oracle(OracleArgs),
    /// Heavy-path baseline for tree-shaped instances.
    Baseline(BaselineArgs),
    /// Solve a seeded family and emit RunSummary rows as CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    /// Complete binary lower-bound tree (size from --depth).
    LbTree,
    /// Random in-tree with parallel colored paths.
    RandTree,
    /// Planted-path DAG with decoy arcs.
    PlantedDag,
}

#[derive(Args)]
struct FamilyParams {
    #[arg(long, value_enum)]
    family: Family,
    /// Depth of the lower-bound tree.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Vertex count (rand-tree, planted-dag).
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Terminal count (planted-dag).
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Decoy arc count (planted-dag).
    #[arg(long, default_value_t = 0)]
    extra_arcs: usize,
    /// Cap on fresh parallel arcs per tree edge (rand-tree).
    #[arg(long, default_value_t = 4)]
    max_parallel: usize,
}

impl FamilyParams {
    fn spec(&self, seed: u64) -> GenSpec {
        match self.family {
            Family::LbTree => GenSpec::LowerBoundTree { depth: self.depth },
            Family::RandTree => {
                GenSpec::RandomTree { n: self.n, max_parallel: self.max_parallel, seed }
            }
            Family::PlantedDag => {
                GenSpec::PlantedDag { n: self.n, k: self.k, extra_arcs: self.extra_arcs, seed }
            }
        }
    }

    /// Benchmark seeds map onto the lb-tree's depth parameter, since that
    /// family has no randomness of its own.
    fn bench_spec(&self, seed: u64) -> GenSpec {
        match self.family {
            Family::LbTree => GenSpec::LowerBoundTree { depth: seed as usize },
            _ => self.spec(seed),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    params: FamilyParams,
    /// Generator seed; falls back to $PATHAGG_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the instance file.
    #[arg(long)]
    out: PathBuf,
    /// Also write a Graphviz rendering of the instance here.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// Write the solution document here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the newline-delimited trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write a Graphviz rendering of the solution here.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    solution: PathBuf,
    /// Also replay and check this trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    /// Refuse instances whose choice space exceeds this many states.
    #[arg(long, default_value_t = 10_000_000)]
    max_states: u64,
}

#[derive(Args)]
struct BaselineArgs {
    instance: PathBuf,
    /// Write the solution document here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    params: FamilyParams,
    /// Seed range `A..B` (inclusive start, exclusive end), one row per seed.
    #[arg(long)]
    seeds: String,
    /// Parallel workers; rows stay ordered by seed.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add the exhaustive optimum column where the search space allows.
    #[arg(long, default_value_t = false)]
    oracle: bool,
    /// Oracle state limit when --oracle is set.
    #[arg(long, default_value_t = 10_000_000)]
    max_states: u64,
}

enum CliError {
    Io(String),
    Invalid(String),
    Verification,
    Limit(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Verification => EXIT_VERIFICATION,
            CliError::Limit(_) => EXIT_LIMIT,
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let text = read_file(path)?;
    parse_instance(text.as_bytes())
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn default_seed() -> u64 {
    std::env::var("PATHAGG_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

/// Solution file: the solution plus the hash of the instance it solves.
#[derive(Serialize, serde::Deserialize)]
struct SolutionDoc {
    instance_hash: String,
    solution: Solution,
}

/// One row of experiment output.
#[derive(Debug, Clone, Serialize)]
struct RunSummary {
    instance: String,
    n: usize,
    m: usize,
    k: usize,
    iterations: usize,
    max_switching: usize,
    /// Real-valued 2 log_{4/3} k, display only.
    bound_real: f64,
    /// Integer-exact 2 (floor(log_{4/3} k) + 1); asserted on every row.
    bound_safe: u32,
    oracle_opt: Option<usize>,
    wall_ms: f64,
}

impl RunSummary {
    const CSV_HEADER: &'static str =
        "instance,n,m,k,iterations,max_switching,bound_real,bound_safe,oracle_opt,wall_ms";

    fn new(id: &str, inst: &Instance, sol: &Solution, wall_ms: f64) -> Self {
        let k = inst.terminal_count() as u64;
        RunSummary {
            instance: id.to_string(),
            n: inst.vertex_count,
            m: inst.arc_count(),
            k: k as usize,
            iterations: sol.iterations,
            max_switching: sol.max_switching,
            bound_real: switching_bound_real(k),
            bound_safe: switching_bound(k),
            oracle_opt: None,
            wall_ms,
        }
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.3},{},{},{:.3}",
            self.instance,
            self.n,
            self.m,
            self.k,
            self.iterations,
            self.max_switching,
            self.bound_real,
            self.bound_safe,
            self.oracle_opt.map(|o| o.to_string()).unwrap_or_default(),
            self.wall_ms,
        )
    }

    fn print_human(&self) {
        println!(
            "instance={} n={} m={} k={} iterations={} max_switching={} bound_real={:.3} bound_safe={} wall_ms={:.3}",
            self.instance,
            self.n,
            self.m,
            self.k,
            self.iterations,
            self.max_switching,
            self.bound_real,
            self.bound_safe,
            self.wall_ms,
        );
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or_else(default_seed);
    let spec = args.params.spec(seed);
    let inst = spec.build().map_err(|e| CliError::Invalid(e.to_string()))?;
    write_file(&args.out, &serialize_instance(&inst))?;
    if let Some(path) = &args.dot {
        write_file(path, &pathagg::dot::render_instance(&inst))?;
    }
    println!(
        "wrote {} to {} (n={}, m={}, k={})",
        spec.id(),
        args.out.display(),
        inst.vertex_count,
        inst.arc_count(),
        inst.terminal_count()
    );
    Ok(())
}

fn solve_checked(inst: &Instance) -> Result<(Solution, Trace), CliError> {
    solve(inst).map_err(|e| match e {
        SolveError::InvalidInstance(report) => {
            let lines: Vec<String> =
                report.violations.iter().map(|v| format!("{}: {}", v.rule, v.message)).collect();
            CliError::Invalid(lines.join("; "))
        }
        SolveError::Internal(msg) => CliError::Invalid(format!("internal error: {msg}")),
    })
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    let started = Instant::now();
    let (solution, trace) = solve_checked(&inst)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    if let Some(path) = &args.trace {
        write_file(path, &trace.to_ndjson())?;
    }
    if let Some(path) = &args.dot {
        write_file(path, &render_solution(&inst, &solution))?;
    }
    if let Some(path) = &args.out {
        let doc = SolutionDoc { instance_hash: inst.content_hash(), solution: solution.clone() };
        let mut text = serde_json::to_string_pretty(&doc).expect("solution serialization");
        text.push('\n');
        write_file(path, &text)?;
    }
    let id = args.instance.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
    RunSummary::new(id, &inst, &solution, wall_ms).print_human();
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    pass: bool,
    arborescence: pathagg::verify::ArborescenceReport,
    max_switching: usize,
    costs_match_solution: bool,
    trace: Option<InvariantReport>,
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    let sol_text = read_file(&args.solution)?;
    let doc: SolutionDoc = serde_json::from_str(&sol_text)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.solution.display())))?;
    if doc.instance_hash != inst.content_hash() {
        return Err(CliError::Invalid(format!(
            "solution hash {} does not match instance hash {}",
            doc.instance_hash,
            inst.content_hash()
        )));
    }

    let arborescence = check_arborescence(&doc.solution, &inst);
    let mut pass = arborescence.pass;
    let (max_switching, costs_match_solution) = if arborescence.pass {
        let report = switching_costs(&doc.solution, &inst);
        let matches = report.costs == doc.solution.switching_costs
            && report.max == doc.solution.max_switching;
        pass &= matches;
        (report.max, matches)
    } else {
        (0, false)
    };

    let trace_report = match &args.trace {
        None => None,
        Some(path) => {
            let text = read_file(path)?;
            let trace = Trace::from_ndjson(&text)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
            let report =
                check_trace(&trace, &inst).map_err(|e| CliError::Invalid(e.to_string()))?;
            pass &= report.pass;
            Some(report)
        }
    };

    let report = VerifyReport {
        pass,
        arborescence,
        max_switching,
        costs_match_solution,
        trace: trace_report,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serialization"));
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification)
    }
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    let limits = OracleLimits { max_states: args.max_states };
    let result = brute_force_opt(&inst, limits).map_err(|e| match e {
        OracleError::SearchSpaceExceeded { .. } => CliError::Limit(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    })?;
    #[derive(Serialize)]
    struct OracleDoc {
        optimum: usize,
        search_space: u128,
        witness: std::collections::BTreeMap<usize, usize>,
    }
    let doc = OracleDoc {
        optimum: result.optimum,
        search_space: result.search_space,
        witness: result.witness,
    };
    println!("{}", serde_json::to_string_pretty(&doc).expect("report serialization"));
    Ok(())
}

fn cmd_baseline(args: &BaselineArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    let Some(tree) = is_tree_instance(&inst) else {
        return Err(CliError::Invalid(
            "is_tree_instance: collapsing parallel arcs does not leave an in-tree; use `solve`"
                .into(),
        ));
    };
    let decomposition = heavy_path_decomposition(&tree);
    let solution = solve_tree_instance(&inst, &tree, &decomposition)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    if let Some(path) = &args.out {
        let doc = SolutionDoc { instance_hash: inst.content_hash(), solution: solution.clone() };
        let mut text = serde_json::to_string_pretty(&doc).expect("solution serialization");
        text.push('\n');
        write_file(path, &text)?;
    }
    println!(
        "baseline: chains={} max_switching={} log2_bound={}",
        decomposition.paths.len(),
        solution.max_switching,
        (inst.vertex_count as f64).log2().ceil() as u32,
    );
    Ok(())
}

fn parse_seed_range(text: &str) -> Result<std::ops::Range<u64>, CliError> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| CliError::Invalid(format!("seed range `{text}` is not of the form A..B")))?;
    let start: u64 = a.parse().map_err(|_| CliError::Invalid(format!("bad range start `{a}`")))?;
    let end: u64 = b.parse().map_err(|_| CliError::Invalid(format!("bad range end `{b}`")))?;
    if end < start {
        return Err(CliError::Invalid(format!("empty seed range `{text}`")));
    }
    Ok(start..end)
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let seeds = parse_seed_range(&args.seeds)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| CliError::Invalid(e.to_string()))?;

    let rows: Vec<Result<RunSummary, String>> = pool.install(|| {
        use rayon::prelude::*;
        seeds
            .clone()
            .collect::<Vec<u64>>()
            .par_iter()
            .map(|&seed| {
                let spec = args.params.bench_spec(seed);
                let inst = spec.build().map_err(|e| format!("seed {seed}: {e}"))?;
                let started = Instant::now();
                let (solution, _) = solve(&inst).map_err(|e| format!("seed {seed}: {e:?}"))?;
                let wall_ms = started.elapsed().as_secs_f64() * 1e3;
                let mut row = RunSummary::new(&spec.id(), &inst, &solution, wall_ms);
                if args.oracle {
                    row.oracle_opt =
                        brute_force_opt(&inst, OracleLimits { max_states: args.max_states })
                            .ok()
                            .map(|r| r.optimum);
                }
                Ok(row)
            })
            .collect()
    });

    let mut csv = String::from(RunSummary::CSV_HEADER);
    csv.push('\n');
    let mut bound_violation = false;
    for row in rows {
        let row = row.map_err(CliError::Invalid)?;
        if row.max_switching > row.bound_safe as usize {
            eprintln!(
                "bound violation: {} switches {} > {}",
                row.instance, row.max_switching, row.bound_safe
            );
            bound_violation = true;
        }
        if (row.max_switching as f64) > row.bound_real + 1e-9 {
            // Reported, never fatal: the integer-safe bound is the contract.
            eprintln!(
                "note: {} exceeds the real-valued bound ({} > {:.3})",
                row.instance, row.max_switching, row.bound_real
            );
        }
        csv.push_str(&row.csv_row());
        csv.push('\n');
    }
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    if bound_violation {
        return Err(CliError::Verification);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match &err {
                CliError::Io(msg) | CliError::Invalid(msg) | CliError::Limit(msg) => {
                    eprintln!("pathagg: {msg}");
                }
                CliError::Verification => eprintln!("pathagg: verification failed"),
            }
            ExitCode::from(err.code())
        }
    }
}
