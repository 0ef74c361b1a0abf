//! `mstc`: solve, bound, generate, export and benchmark conflict-constrained
//! spanning tree instances.
//!
//! Exit codes: 0 success / optimal, 1 usage or input error, 2 infeasibility
//! proven, 3 time limit reached.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mstc_core::bench::{self, BenchConfig, BenchMode, Reference};
use mstc_core::bnb::{self, Progress, SolveConfig, DEFAULT_NODE_LIMIT, DEFAULT_TIME_LIMIT_SECONDS};
use mstc_core::bounds::{greedy_upper_bound_with, mst_lower_bound, DEFAULT_RESTARTS};
use mstc_core::io::{
    generate, read_instance_file, write_instance, ConflictCount, ConflictFormat, EdgeCount, GeneratorSpec,
};
use mstc_core::model::{build_flow_model, emit_lp};
use mstc_core::oracle::{brute_force_oracle, OracleResult};
use mstc_core::{is_feasible, EdgeId, EdgeSet, Instance, SolveStatus};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_TIME_LIMIT: u8 = 3;

#[derive(Parser)]
#[command(name = "mstc", version, about = "Minimum spanning trees with conflicting edge pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance to optimality (or until the time limit).
    Solve(SolveArgs),
    /// Print the MST lower bound and the greedy upper bound.
    Bound(BoundArgs),
    /// Generate a random connected instance.
    Generate(GenerateArgs),
    /// Write the flow MILP of an instance in LP format.
    ExportLp(ExportArgs),
    /// Validate a solution file against an instance.
    Check(CheckArgs),
    /// Solve a small instance (at most 20 edges) by enumeration.
    Oracle(OracleArgs),
    /// Run every instance in a directory and print a result table.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConflictFormatArg {
    /// `e1 e2` edge indices
    EdgeIndex,
    /// `i j k l` endpoint quadruples
    Endpoints,
}

impl From<ConflictFormatArg> for ConflictFormat {
    fn from(f: ConflictFormatArg) -> Self {
        match f {
            ConflictFormatArg::EdgeIndex => ConflictFormat::EdgeIndex,
            ConflictFormatArg::Endpoints => ConflictFormat::Endpoints,
        }
    }
}

#[derive(Args)]
struct InstanceArg {
    /// Instance file
    instance: PathBuf,
    /// How conflict lines are encoded
    #[arg(long, value_enum, default_value = "edge-index")]
    conflict_format: ConflictFormatArg,
}

impl InstanceArg {
    fn load(&self) -> Result<Instance> {
        let parsed = read_instance_file(&self.instance, self.conflict_format.into())?;
        if parsed.duplicate_conflicts > 0 {
            eprintln!(
                "warning: {}: ignored {} duplicate conflict pair(s)",
                self.instance.display(),
                parsed.duplicate_conflicts
            );
        }
        Ok(parsed.instance)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArg,
    /// Wall-clock limit in seconds
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_SECONDS)]
    time_limit: f64,
    /// Search threads
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Seed for the greedy warm start
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the greedy warm start
    #[arg(long)]
    no_warm_start: bool,
    /// Stop after this many branch-and-bound nodes
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    node_limit: u64,
    /// Write the best tree found to this file
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Print the report as JSON
    #[arg(long)]
    json: bool,
    /// Suppress the periodic progress line on stderr
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturbed restarts for the greedy heuristic
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of nodes
    #[arg(long)]
    n: usize,
    /// Number of edges
    #[arg(long, conflicts_with = "edge_density", required_unless_present = "edge_density")]
    m: Option<usize>,
    /// Fraction of all node pairs that become edges
    #[arg(long)]
    edge_density: Option<f64>,
    /// Number of conflict pairs
    #[arg(
        long,
        conflicts_with = "conflict_density",
        required_unless_present = "conflict_density"
    )]
    p: Option<usize>,
    /// Fraction of all edge pairs that conflict
    #[arg(long)]
    conflict_density: Option<f64>,
    /// Smallest edge cost (default 0 with --m, 1 with --edge-density)
    #[arg(long)]
    cost_min: Option<i64>,
    /// Largest edge cost (default 500 with --m, 30 with --edge-density)
    #[arg(long)]
    cost_max: Option<i64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; `-` or absent writes to stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write `<name>.mstc` into this directory instead
    #[arg(long, conflicts_with = "output")]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: InstanceArg,
    /// Flow source node
    #[arg(long, default_value_t = 0)]
    root: usize,
    /// Output file; absent writes to stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: InstanceArg,
    /// Solution file: cost on the first line, then one edge id per line
    solution: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: InstanceArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Heuristic,
    ExportLp,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Md,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of instance files
    dir: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT_SECONDS)]
    time_limit: f64,
    /// Instances run in parallel
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Best-known bounds, CSV `name,bk_lb,bk_ub`
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    /// Print rows and summary as JSON
    #[arg(long)]
    json: bool,
    /// Report -100 deviations for proven-infeasible rows with known bounds
    #[arg(long)]
    legacy_infeas_dev: bool,
    /// Instance file extension
    #[arg(long, default_value = "mstc")]
    ext: String,
    #[arg(long, value_enum, default_value = "edge-index")]
    conflict_format: ConflictFormatArg,
    /// Root node for export-lp mode
    #[arg(long, default_value_t = 0)]
    root: usize,
    /// Directory for LP files in export-lp mode (default: the suite directory)
    #[arg(long)]
    lp_dir: Option<PathBuf>,
    /// Write the table here instead of stdout
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

fn opt(v: Option<i64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn run_solve(args: &SolveArgs) -> Result<u8> {
    let inst = args.input.load()?;
    let initial_ub = if args.no_warm_start {
        None
    } else {
        greedy_upper_bound_with(&inst, DEFAULT_RESTARTS, args.seed).map(|b| b.value)
    };
    let config = SolveConfig {
        time_limit_seconds: args.time_limit,
        initial_ub,
        workers: args.workers,
        node_limit: args.node_limit,
        ..SolveConfig::default()
    };
    let report_progress = |p: &Progress| {
        eprintln!(
            "[{:.0}s] nodes {} open {} lb {} ub {}",
            p.elapsed_seconds,
            p.nodes_explored,
            p.open_nodes,
            opt(p.lower_bound),
            opt(p.upper_bound)
        );
    };
    let progress: Option<&(dyn Fn(&Progress) + Sync)> = if args.quiet { None } else { Some(&report_progress) };
    let report = bnb::solve_with_progress(&inst, &config, progress, Duration::from_secs(10))?;

    if let (Some(path), Some(tree)) = (&args.solution, &report.incumbent) {
        let mut text = format!("{}\n", tree.total_cost);
        for id in &tree.edge_ids {
            let _ = writeln!(text, "{id}");
        }
        write_output(Some(path), &text)?;
    }

    if args.json {
        let mut value = serde_json::to_value(&report)?;
        value["instance"] = serde_json::Value::String(inst.name.clone());
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        let mut out = String::new();
        let _ = writeln!(out, "instance: {}", inst.name);
        let _ = writeln!(out, "status: {:?}", report.status);
        let _ = writeln!(out, "lower_bound: {}", opt(report.lower_bound));
        let _ = writeln!(out, "upper_bound: {}", opt(report.upper_bound));
        let _ = writeln!(out, "cost: {}", opt(report.incumbent.as_ref().map(|t| t.total_cost)));
        if let Some(tree) = &report.incumbent {
            let ids: Vec<String> = tree.edge_ids.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "edges: {}", ids.join(" "));
        }
        let _ = writeln!(out, "nodes_explored: {}", report.nodes_explored);
        let _ = writeln!(out, "node_limit_reached: {}", report.node_limit_reached);
        let _ = writeln!(out, "depth_first_fallback: {}", report.depth_first_fallback);
        let _ = writeln!(out, "time_limit_seconds: {}", report.time_limit_seconds);
        let _ = writeln!(out, "elapsed_seconds: {:.6}", report.elapsed_seconds);
        print!("{out}");
    }

    Ok(match report.status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::TimeLimit => EXIT_TIME_LIMIT,
    })
}

fn run_bound(args: &BoundArgs) -> Result<u8> {
    let inst = args.input.load()?;
    let m = inst.edge_count();
    let lb = mst_lower_bound(&inst, &EdgeSet::new(m), &EdgeSet::new(m));
    let ub = greedy_upper_bound_with(&inst, args.restarts, args.seed);
    println!("instance: {}", inst.name);
    match &lb {
        Some(b) => println!("lower_bound: {}", b.value),
        None => println!("lower_bound: infeasible"),
    }
    println!("upper_bound: {}", opt(ub.as_ref().map(|b| b.value)));
    Ok(if lb.is_none() { EXIT_INFEASIBLE } else { EXIT_OK })
}

fn run_generate(args: &GenerateArgs) -> Result<u8> {
    let edges = match (args.m, args.edge_density) {
        (Some(m), _) => EdgeCount::Explicit(m),
        (None, Some(d)) => EdgeCount::Density(d),
        (None, None) => bail!("one of --m or --edge-density is required"),
    };
    let conflicts = match (args.p, args.conflict_density) {
        (Some(p), _) => ConflictCount::Explicit(p),
        (None, Some(q)) => ConflictCount::Density(q),
        (None, None) => bail!("one of --p or --conflict-density is required"),
    };
    let (lo, hi) = if args.m.is_some() { (0, 500) } else { (1, 30) };
    let spec = GeneratorSpec {
        n: args.n,
        edges,
        cost_range: (args.cost_min.unwrap_or(lo), args.cost_max.unwrap_or(hi)),
        conflicts,
        seed: args.seed,
    };
    let inst = generate(&spec)?;
    let text = write_instance(&inst);
    match &args.output_dir {
        Some(dir) => {
            let path = dir.join(format!("{}.mstc", inst.name));
            write_output(Some(&path), &text)?;
            eprintln!("wrote {}", path.display());
        }
        None => write_output(args.output.as_deref(), &text)?,
    }
    Ok(EXIT_OK)
}

fn run_export(args: &ExportArgs) -> Result<u8> {
    let inst = args.input.load()?;
    let model = build_flow_model(&inst, args.root)?;
    write_output(args.output.as_deref(), &emit_lp(&model))?;
    Ok(EXIT_OK)
}

fn read_solution(path: &Path) -> Result<(i64, Vec<EdgeId>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut records = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let Some((line, first)) = records.next() else {
        bail!("{}:1: empty solution file", path.display());
    };
    let cost = first
        .parse()
        .with_context(|| format!("{}:{line}: invalid cost '{first}'", path.display()))?;
    let mut ids = Vec::new();
    for (line, rec) in records {
        let id = rec
            .parse()
            .with_context(|| format!("{}:{line}: invalid edge id '{rec}'", path.display()))?;
        ids.push(EdgeId(id));
    }
    Ok((cost, ids))
}

fn run_check(args: &CheckArgs) -> Result<u8> {
    let inst = args.input.load()?;
    let (declared, ids) = read_solution(&args.solution)?;
    let m = inst.edge_count();
    if let Some(bad) = ids.iter().find(|id| id.0 >= m) {
        bail!("{}: edge id {bad} out of range [0, {m})", args.solution.display());
    }
    let Some(tree) = inst.graph.spanning_tree(ids.iter().copied())? else {
        println!("spanning_tree: false");
        println!("feasible: false");
        return Ok(EXIT_USAGE);
    };
    let check = is_feasible(&inst, &tree)?;
    println!("spanning_tree: true");
    println!("feasible: {}", check.feasible);
    println!("cost: {}", tree.total_cost);
    println!("declared_cost: {declared}");
    for (a, b) in &check.violations {
        println!("violation: {a} {b}");
    }
    let ok = check.feasible && declared == tree.total_cost && tree.edge_ids.len() == ids.len();
    Ok(if ok { EXIT_OK } else { EXIT_USAGE })
}

fn run_oracle(args: &OracleArgs) -> Result<u8> {
    let inst = args.input.load()?;
    println!("instance: {}", inst.name);
    match brute_force_oracle(&inst)? {
        OracleResult::Optimal(tree) => {
            let ids: Vec<String> = tree.edge_ids.iter().map(ToString::to_string).collect();
            println!("status: Optimal");
            println!("cost: {}", tree.total_cost);
            println!("edges: {}", ids.join(" "));
            Ok(EXIT_OK)
        }
        OracleResult::Infeasible => {
            println!("status: Infeasible");
            Ok(EXIT_INFEASIBLE)
        }
    }
}

fn run_bench(args: &BenchArgs) -> Result<u8> {
    let reference = args.reference.as_deref().map(Reference::read).transpose()?;
    let config = BenchConfig {
        mode: match args.mode {
            ModeArg::Exact => BenchMode::Exact,
            ModeArg::Heuristic => BenchMode::Heuristic,
            ModeArg::ExportLp => BenchMode::ExportLp,
        },
        time_limit_seconds: args.time_limit,
        workers: args.workers,
        seed: args.seed,
        extension: args.ext.clone(),
        conflict_format: args.conflict_format.into(),
        lp_dir: args.lp_dir.clone(),
        root: args.root,
        legacy_infeas_dev: args.legacy_infeas_dev,
    };
    if config.time_limit_seconds.is_nan() || config.time_limit_seconds <= 0.0 {
        bail!("--time-limit must be positive");
    }
    let result = bench::run_suite(&args.dir, &config, reference.as_ref())?;
    for (name, message) in &result.errors {
        eprintln!("error: {name}: {message}");
    }
    let text = if args.json {
        serde_json::to_string_pretty(&result)? + "\n"
    } else {
        match args.format {
            TableFormat::Csv => bench::write_csv(&result),
            TableFormat::Md => bench::write_markdown(&result),
        }
    };
    write_output(args.output.as_deref(), &text)?;
    Ok(EXIT_OK)
}

/// Joins the error chain, skipping causes the outer message already quotes.
fn render_error(e: &anyhow::Error) -> String {
    let mut text = e.to_string();
    for cause in e.chain().skip(1) {
        let c = match cause.downcast_ref::<mstc_core::ParseError>() {
            Some(pe) => pe.message.clone(),
            None => cause.to_string(),
        };
        if !text.contains(&c) {
            text.push_str(": ");
            text.push_str(&c);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Bound(a) => run_bound(a),
        Command::Generate(a) => run_generate(a),
        Command::ExportLp(a) => run_export(a),
        Command::Check(a) => run_check(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Bench(a) => run_bench(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", render_error(&e));
            ExitCode::from(EXIT_USAGE)
        }
    }
}
