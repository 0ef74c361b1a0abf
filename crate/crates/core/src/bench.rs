//! Batch runs over a directory of instance files, with deviation metrics
//! against best-known bounds and CSV / Markdown result tables.
//!
//! Reported seconds are raw wall-clock on the current machine; no CPU speed
//! normalisation is applied.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use crate::bnb::{solve_with, SolveConfig, SolveStatus, DEFAULT_TIME_LIMIT_SECONDS};
use crate::bounds::{greedy_upper_bound_with, mst_lower_bound, DEFAULT_RESTARTS};
use crate::graph::EdgeSet;
use crate::io::{read_instance_file, ConflictFormat};
use crate::model::{build_flow_model, emit_lp};

pub const CSV_HEADER: [&str; 10] = [
    "name", "n", "m", "p", "status", "lb", "ub", "seconds", "dev_lb", "dev_ub",
];

const AVERAGES: &str = "Averages";
const AVERAGES_TRIMMED: &str = "Averages (excl. Infeas)";

/// `100 (bk_lb - lb) / bk_lb`; negative when `lb` improves on the best known.
/// Undefined for `bk_lb = 0`.
pub fn deviation_lb(lb: i64, bk_lb: i64) -> Option<f64> {
    (bk_lb != 0).then(|| 100.0 * (bk_lb - lb) as f64 / bk_lb as f64)
}

/// `100 (ub - bk_ub) / bk_ub`; negative when `ub` improves on the best known.
/// Undefined for `bk_ub = 0`.
pub fn deviation_ub(ub: i64, bk_ub: i64) -> Option<f64> {
    (bk_ub != 0).then(|| 100.0 * (ub - bk_ub) as f64 / bk_ub as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BenchMode {
    #[default]
    Exact,
    Heuristic,
    ExportLp,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub mode: BenchMode,
    pub time_limit_seconds: f64,
    /// Instances solved concurrently.
    pub workers: usize,
    pub seed: u64,
    /// Only files with this extension are treated as instances.
    pub extension: String,
    pub conflict_format: ConflictFormat,
    /// Where `ExportLp` writes `<name>.lp`; defaults to the suite directory.
    pub lp_dir: Option<PathBuf>,
    pub root: usize,
    /// Report `-100` deviations for infeasibility proofs against known bounds.
    pub legacy_infeas_dev: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            mode: BenchMode::Exact,
            time_limit_seconds: DEFAULT_TIME_LIMIT_SECONDS,
            workers: 1,
            seed: 0,
            extension: "mstc".into(),
            conflict_format: ConflictFormat::EdgeIndex,
            lp_dir: None,
            root: 0,
            legacy_infeas_dev: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowStatus {
    Optimal,
    Infeas,
    TimeLimit,
    Heuristic,
    Exported,
    Error,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RowStatus::Optimal => "Optimal",
            RowStatus::Infeas => "Infeas",
            RowStatus::TimeLimit => "TimeLimit",
            RowStatus::Heuristic => "Heuristic",
            RowStatus::Exported => "Exported",
            RowStatus::Error => "Error",
        };
        f.write_str(s)
    }
}

impl FromStr for RowStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Optimal" => RowStatus::Optimal,
            "Infeas" => RowStatus::Infeas,
            "TimeLimit" => RowStatus::TimeLimit,
            "Heuristic" => RowStatus::Heuristic,
            "Exported" => RowStatus::Exported,
            "Error" => RowStatus::Error,
            other => return Err(format!("unknown status '{other}'")),
        })
    }
}

/// One result line. Seconds are kept at millisecond and deviations at 1e-4
/// precision, the resolution the tables are printed with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub status: RowStatus,
    pub lb: Option<i64>,
    pub ub: Option<i64>,
    pub seconds: f64,
    pub dev_lb: Option<f64>,
    pub dev_ub: Option<f64>,
}

fn round_to(x: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (x * scale).round() / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DeviationMeans {
    pub dev_lb: Option<f64>,
    pub dev_ub: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BenchSummary {
    /// Means over all rows where the deviation is defined.
    pub all: DeviationMeans,
    /// Same, skipping `Infeas` rows.
    pub excluding_infeasible: DeviationMeans,
}

impl BenchSummary {
    pub fn from_rows(rows: &[BenchRow]) -> Self {
        fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
            let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            (count > 0).then(|| round_to(sum / count as f64, 4))
        }
        let means = |keep: &dyn Fn(&BenchRow) -> bool| DeviationMeans {
            dev_lb: mean(rows.iter().filter(|r| keep(r)).filter_map(|r| r.dev_lb)),
            dev_ub: mean(rows.iter().filter(|r| keep(r)).filter_map(|r| r.dev_ub)),
        };
        BenchSummary {
            all: means(&|_| true),
            excluding_infeasible: means(&|r| r.status != RowStatus::Infeas),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub summary: BenchSummary,
    /// `(instance, message)` for rows with status `Error`.
    #[serde(skip)]
    pub errors: Vec<(String, String)>,
}

/// Best-known bounds per instance name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reference {
    bounds: HashMap<String, (Option<i64>, Option<i64>)>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {message}")]
    Format { context: String, message: String },
}

impl Reference {
    pub fn insert(&mut self, name: impl Into<String>, bk_lb: Option<i64>, bk_ub: Option<i64>) {
        self.bounds.insert(name.into(), (bk_lb, bk_ub));
    }

    pub fn get(&self, name: &str) -> (Option<i64>, Option<i64>) {
        self.bounds.get(name).copied().unwrap_or((None, None))
    }

    /// Parses `name,bk_lb,bk_ub` CSV with a header line; blank means unknown.
    pub fn parse_csv(text: &str) -> Result<Self, BenchError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut reference = Reference::default();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| format_err(line, e.to_string()))?;
            if record.len() != 3 {
                return Err(format_err(line, format!("expected 3 fields, found {}", record.len())));
            }
            let lb = opt_field::<i64>(&record[1], line)?;
            let ub = opt_field::<i64>(&record[2], line)?;
            reference.insert(&record[0], lb, ub);
        }
        Ok(reference)
    }

    pub fn read(path: &Path) -> Result<Self, BenchError> {
        let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_csv(&text).map_err(|e| match e {
            BenchError::Format { context, message } => BenchError::Format {
                context: format!("{}:{context}", path.display()),
                message,
            },
            other => other,
        })
    }
}

fn format_err(line: usize, message: String) -> BenchError {
    BenchError::Format {
        context: format!("line {line}"),
        message,
    }
}

fn opt_field<T: FromStr>(field: &str, line: usize) -> Result<Option<T>, BenchError> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| format_err(line, format!("invalid value '{field}'")))
}

fn row_for(path: &Path, config: &BenchConfig, reference: Option<&Reference>) -> Result<BenchRow, (String, String)> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let start = Instant::now();
    let parsed = read_instance_file(path, config.conflict_format).map_err(|e| (stem.clone(), e.to_string()))?;
    let inst = parsed.instance;

    let (status, lb, ub) = match config.mode {
        BenchMode::Exact => {
            let greedy = greedy_upper_bound_with(&inst, DEFAULT_RESTARTS, config.seed);
            let solve_config = SolveConfig {
                time_limit_seconds: config.time_limit_seconds,
                initial_ub: greedy.as_ref().map(|b| b.value),
                ..SolveConfig::default()
            };
            let report = solve_with(&inst, &solve_config).map_err(|e| (stem.clone(), e.to_string()))?;
            let status = match report.status {
                SolveStatus::Optimal => RowStatus::Optimal,
                SolveStatus::Infeasible => RowStatus::Infeas,
                SolveStatus::TimeLimit => RowStatus::TimeLimit,
            };
            (status, report.lower_bound, report.upper_bound)
        }
        BenchMode::Heuristic => {
            let m = inst.edge_count();
            let lb = mst_lower_bound(&inst, &EdgeSet::new(m), &EdgeSet::new(m)).map(|b| b.value);
            let ub = greedy_upper_bound_with(&inst, DEFAULT_RESTARTS, config.seed).map(|b| b.value);
            match (lb, ub) {
                (None, _) => (RowStatus::Infeas, None, None),
                (Some(l), Some(u)) if l == u => (RowStatus::Optimal, lb, ub),
                _ => (RowStatus::Heuristic, lb, ub),
            }
        }
        BenchMode::ExportLp => {
            let model = build_flow_model(&inst, config.root).map_err(|e| (stem.clone(), e.to_string()))?;
            let dir = config
                .lp_dir
                .clone()
                .unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
            let target = dir.join(format!("{}.lp", inst.name));
            fs::write(&target, emit_lp(&model)).map_err(|e| (stem.clone(), format!("{}: {e}", target.display())))?;
            (RowStatus::Exported, None, None)
        }
    };
    let seconds = round_to(start.elapsed().as_secs_f64(), 3);

    let (bk_lb, bk_ub) = reference.map(|r| r.get(&inst.name)).unwrap_or((None, None));
    let (dev_lb, dev_ub) = if status == RowStatus::Infeas {
        if config.legacy_infeas_dev {
            (
                bk_lb.filter(|&b| b != 0).map(|_| -100.0),
                bk_ub.filter(|&b| b != 0).map(|_| -100.0),
            )
        } else {
            (None, None)
        }
    } else {
        (
            lb.zip(bk_lb)
                .and_then(|(l, b)| deviation_lb(l, b))
                .map(|d| round_to(d, 4)),
            ub.zip(bk_ub)
                .and_then(|(u, b)| deviation_ub(u, b))
                .map(|d| round_to(d, 4)),
        )
    };

    Ok(BenchRow {
        name: inst.name,
        n: inst.graph.node_count(),
        m: inst.graph.edge_count(),
        p: inst.conflicts.len(),
        status,
        lb,
        ub,
        seconds,
        dev_lb,
        dev_ub,
    })
}

fn error_row(name: String) -> BenchRow {
    BenchRow {
        name,
        n: 0,
        m: 0,
        p: 0,
        status: RowStatus::Error,
        lb: None,
        ub: None,
        seconds: 0.0,
        dev_lb: None,
        dev_ub: None,
    }
}

/// Instance files in `dir` with the configured extension, sorted by name.
pub fn list_instances(dir: &Path, extension: &str) -> Result<Vec<PathBuf>, BenchError> {
    let io_err = |source| BenchError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == extension) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

type RowOutcome = Result<BenchRow, (String, String)>;

/// Runs every instance in `dir`. Unreadable instances become `Error` rows;
/// rows come back sorted by name whatever the completion order.
pub fn run_suite(dir: &Path, config: &BenchConfig, reference: Option<&Reference>) -> Result<BenchResult, BenchError> {
    let files = list_instances(dir, &config.extension)?;
    let results: Mutex<Vec<(usize, RowOutcome)>> = Mutex::new(Vec::with_capacity(files.len()));
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(path) = files.get(i) else { break };
        let row = row_for(path, config, reference);
        results.lock().unwrap().push((i, row));
    };
    let workers = config.workers.clamp(1, files.len().max(1));
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }

    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(i, _)| *i);
    let mut rows = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for (_, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err((name, message)) => {
                rows.push(error_row(name.clone()));
                errors.push((name, message));
            }
        }
    }
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    let summary = BenchSummary::from_rows(&rows);
    Ok(BenchResult { rows, summary, errors })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// CSV with one line per row followed by the two averages lines.
pub fn write_csv(result: &BenchResult) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in &result.rows {
        w.write_record([
            r.name.clone(),
            r.n.to_string(),
            r.m.to_string(),
            r.p.to_string(),
            r.status.to_string(),
            opt(r.lb),
            opt(r.ub),
            format!("{:.3}", r.seconds),
            pct(r.dev_lb),
            pct(r.dev_ub),
        ])
        .expect("in-memory write");
    }
    for (label, means) in [
        (AVERAGES, result.summary.all),
        (AVERAGES_TRIMMED, result.summary.excluding_infeasible),
    ] {
        w.write_record([
            label,
            "",
            "",
            "",
            "",
            "",
            "",
            "",
            &pct(means.dev_lb),
            &pct(means.dev_ub),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Inverse of [`write_csv`]. The averages lines, when present, are read into
/// the summary.
pub fn parse_csv(text: &str) -> Result<BenchResult, BenchError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| format_err(1, e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(format_err(
            1,
            format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        ));
    }
    let mut result = BenchResult::default();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let rec = record.map_err(|e| format_err(line, e.to_string()))?;
        let means = || -> Result<DeviationMeans, BenchError> {
            Ok(DeviationMeans {
                dev_lb: opt_field(&rec[8], line)?,
                dev_ub: opt_field(&rec[9], line)?,
            })
        };
        match &rec[0] {
            AVERAGES => result.summary.all = means()?,
            AVERAGES_TRIMMED => result.summary.excluding_infeasible = means()?,
            name => {
                let req = |f: &str| -> Result<usize, BenchError> {
                    f.parse().map_err(|_| format_err(line, format!("invalid count '{f}'")))
                };
                result.rows.push(BenchRow {
                    name: name.to_string(),
                    n: req(&rec[1])?,
                    m: req(&rec[2])?,
                    p: req(&rec[3])?,
                    status: rec[4].parse().map_err(|e| format_err(line, e))?,
                    lb: opt_field(&rec[5], line)?,
                    ub: opt_field(&rec[6], line)?,
                    seconds: opt_field(&rec[7], line)?.unwrap_or(0.0),
                    dev_lb: opt_field(&rec[8], line)?,
                    dev_ub: opt_field(&rec[9], line)?,
                });
            }
        }
    }
    Ok(result)
}

/// Markdown table, one row per instance plus the two average lines.
pub fn write_markdown(result: &BenchResult) -> String {
    let mut out = String::new();
    out.push_str("| Instance | n | m | p | Status | LB | UB | Sec | Dev LB % | Dev UB % |\n");
    out.push_str("|---|---:|---:|---:|---|---:|---:|---:|---:|---:|\n");
    for r in &result.rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {:.3} | {} | {} |",
            r.name,
            r.n,
            r.m,
            r.p,
            r.status,
            opt(r.lb),
            opt(r.ub),
            r.seconds,
            pct(r.dev_lb),
            pct(r.dev_ub)
        );
    }
    for (label, means) in [
        (AVERAGES, result.summary.all),
        (AVERAGES_TRIMMED, result.summary.excluding_infeasible),
    ] {
        let _ = writeln!(
            out,
            "| {label} | | | | | | | | {} | {} |",
            pct(means.dev_lb),
            pct(means.dev_ub)
        );
    }
    out.push_str("\nSeconds are wall-clock on this machine, not normalised across CPUs.\n");
    out
}
