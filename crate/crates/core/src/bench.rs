//! Multi-run experiments: seeded solves on a worker pool, per-instance
//! aggregates, optimality gaps and report output.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::policy::Strategy;
use crate::solver::{preprocess, solve_with, RunResult, SolverConfig};
use crate::tsplib::Instance;

/// Outcome of one seeded solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub strategy: Strategy,
    pub run: usize,
    pub seed: u64,
    pub length: i64,
    pub trials: usize,
    pub time: f64,
    pub reached_optimum: bool,
}

/// Aggregate over the runs of one instance under one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub strategy: Strategy,
    pub optimum: Option<i64>,
    pub best: i64,
    pub average: f64,
    pub worst: i64,
    pub success: usize,
    pub runs: usize,
    pub mean_time: f64,
    pub mean_trials: f64,
    pub gap: Option<f64>,
}

/// Mean relative excess over the optimum; `None` without a positive optimum.
pub fn gap(lengths: &[i64], optimum: Option<i64>) -> Option<f64> {
    let opt = optimum.filter(|&o| o > 0)? as f64;
    if lengths.is_empty() {
        return None;
    }
    Some(lengths.iter().map(|&a| (a as f64 - opt) / opt).sum::<f64>() / lengths.len() as f64)
}

/// Running prefix sums of per-instance gaps.
pub fn cumulative_gap(gaps: &[f64]) -> Vec<f64> {
    gaps.iter()
        .scan(0.0, |acc, g| {
            *acc += g;
            Some(*acc)
        })
        .collect()
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Aggregates records of a single (instance, strategy) pair.
pub fn aggregate(records: &[RunRecord], optimum: Option<i64>) -> RunReport {
    assert!(!records.is_empty(), "aggregate needs at least one run");
    let lengths: Vec<i64> = records.iter().map(|r| r.length).collect();
    let runs = records.len();
    RunReport {
        instance: records[0].instance.clone(),
        strategy: records[0].strategy,
        optimum,
        best: *lengths.iter().min().unwrap(),
        average: lengths.iter().sum::<i64>() as f64 / runs as f64,
        worst: *lengths.iter().max().unwrap(),
        success: optimum.map_or(0, |o| lengths.iter().filter(|&&l| l == o).count()),
        runs,
        mean_time: round2(records.iter().map(|r| r.time).sum::<f64>() / runs as f64),
        mean_trials: records.iter().map(|r| r.trials as f64).sum::<f64>() / runs as f64,
        gap: gap(&lengths, optimum),
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    /// Per-run settings; the seed and strategy are overridden per job.
    pub solver: SolverConfig,
    pub strategies: Vec<Strategy>,
    pub runs: usize,
    /// Run i uses seed `base_seed + i`.
    pub base_seed: u64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { solver: SolverConfig::default(), strategies: vec![Strategy::Vsr], runs: 10, base_seed: 1, threads: None }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteResult {
    /// One report per (instance, strategy), in input order.
    pub reports: Vec<RunReport>,
    /// Every run, ordered by (instance, strategy, run).
    pub records: Vec<RunRecord>,
}

/// Solves every instance `runs` times under every strategy. Preprocessing is
/// shared per instance; runs execute on a worker pool and are merged in
/// (instance, strategy, run) order.
pub fn run_suite(instances: &[Instance], cfg: &SuiteConfig) -> SuiteResult {
    let runs = cfg.runs.max(1);
    let work = || {
        let pre: Vec<_> = instances.par_iter().map(|inst| preprocess(inst, &cfg.solver)).collect();
        let jobs: Vec<(usize, usize, usize)> = (0..instances.len())
            .flat_map(|i| (0..cfg.strategies.len()).flat_map(move |s| (0..runs).map(move |r| (i, s, r))))
            .collect();
        let results: Vec<(RunRecord, RunResult)> = jobs
            .par_iter()
            .map(|&(i, s, r)| {
                let inst = &instances[i];
                let strategy = cfg.strategies[s];
                let seed = cfg.base_seed + r as u64;
                let mut solver = cfg.solver.clone();
                solver.seed = seed;
                solver.rl.strategy = strategy;
                let res = solve_with(inst, &pre[i], &solver);
                let rec = RunRecord {
                    instance: inst.name.clone(),
                    strategy,
                    run: r,
                    seed,
                    length: res.best_length,
                    trials: res.trials_used,
                    time: res.wall_time,
                    reached_optimum: res.reached_optimum,
                };
                (rec, res)
            })
            .collect();
        results.into_iter().map(|(rec, _)| rec).collect::<Vec<_>>()
    };
    let records = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build().expect("thread pool").install(work),
        None => work(),
    };
    let reports = records
        .chunks(runs)
        .enumerate()
        .map(|(k, chunk)| aggregate(chunk, instances[k / cfg.strategies.len()].known_optimum))
        .collect();
    SuiteResult { reports, records }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected table, csv or json)")),
        }
    }
}

const COLUMNS: [&str; 11] =
    ["instance", "strategy", "optimum", "best", "average", "worst", "success", "runs", "mean_time", "mean_trials", "gap"];

/// Renders reports; column order is fixed by [`RunReport`]'s field order.
pub fn emit_report(reports: &[RunReport], format: Format) -> Result<String, ReportError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(reports)? + "\n"),
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(COLUMNS)?;
            for r in reports {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| ReportError::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Table => Ok(table(reports)),
    }
}

fn table(reports: &[RunReport]) -> String {
    let rows: Vec<[String; 11]> = reports
        .iter()
        .map(|r| {
            [
                r.instance.clone(),
                r.strategy.to_string(),
                r.optimum.map_or("-".into(), |o| o.to_string()),
                r.best.to_string(),
                format!("{:.1}", r.average),
                r.worst.to_string(),
                format!("{}/{}", r.success, r.runs),
                r.runs.to_string(),
                format!("{:.2}", r.mean_time),
                format!("{:.1}", r.mean_trials),
                r.gap.map_or("-".into(), |g| format!("{:.4}%", 100.0 * g)),
            ]
        })
        .collect();
    let mut width: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
    for row in &rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells.zip(&width).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &mut COLUMNS.iter().copied());
    for row in &rows {
        line(&mut out, &mut row.iter().map(String::as_str));
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub fn parse_reports_csv(text: &str) -> Result<Vec<RunReport>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn parse_reports_json(text: &str) -> Result<Vec<RunReport>, ReportError> {
    Ok(serde_json::from_str(text)?)
}

/// CSV of per-run records, ordered as stored.
pub fn records_csv(records: &[RunRecord]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
