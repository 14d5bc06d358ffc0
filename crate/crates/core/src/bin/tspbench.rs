//! `tspbench`: solve single TSPLIB instances or run multi-seed suites.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rlkopt::bench::{aggregate, emit_report, records_csv, run_suite, Format, RunRecord, SuiteConfig};
use rlkopt::solver::{initial_table, preprocess, solve_with_table, ClosingRule, InitialTour, RunResult, SolverConfig};
use rlkopt::tsplib::{load_instance, Instance, KnownOptima, TourFile};
use rlkopt::{AscentConfig, QTable, RLConfig, Strategy};

#[derive(Parser)]
#[command(name = "tspbench", version, about = "RL-guided k-opt search on TSPLIB instances")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print its best tour length.
    Solve(SolveCmd),
    /// Run every instance of a directory or list file under one or more strategies.
    Suite(SuiteCmd),
    /// Print the penalized 1-tree lower bound of an instance.
    Bound(BoundCmd),
}

#[derive(Args)]
struct SolveCmd {
    file: PathBuf,
    #[arg(long, default_value = "vsr")]
    strategy: Strategy,
    /// Independent runs with seeds seed, seed+1, ...; dumps describe the best run.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Aggregate report destination.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    format: Format,
    /// Known optimum; overrides the bundled table.
    #[arg(long)]
    optimum: Option<i64>,
    /// Write the best tour in TSPLIB format.
    #[arg(long)]
    tour_out: Option<PathBuf>,
    /// Write the per-trial trace and run statistics as JSON.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Dump node penalties as CSV.
    #[arg(long)]
    pi_out: Option<PathBuf>,
    /// Dump the α table as CSV.
    #[arg(long)]
    alpha_out: Option<PathBuf>,
    /// Dump the initial and final candidate tables as CSV (suffixes `.initial.csv`, `.final.csv`).
    #[arg(long)]
    candidates_out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SuiteCmd {
    /// Directory of `.tsp` files, a single `.tsp` file, or a list file with one path per line.
    input: PathBuf,
    /// Comma-separated strategies: vsr, q, sarsa, mc, td, fixq, alpha.
    #[arg(long, value_delimiter = ',', default_value = "vsr")]
    strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value = "table")]
    format: Format,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-run records as CSV.
    #[arg(long)]
    records_out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BoundCmd {
    file: PathBuf,
    #[command(flatten)]
    ascent: AscentArgs,
}

#[derive(Args)]
struct Common {
    /// Seed of the first run; run i uses seed + i.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trials per run; defaults to the number of cities.
    #[arg(long)]
    max_trials: Option<usize>,
    /// Seconds per run.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 0.4)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.99)]
    beta: f64,
    /// Learning rate.
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    /// Discount factor.
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    /// Non-improving trials before switching method; defaults to max(1, trials/20).
    #[arg(long)]
    max_num: Option<usize>,
    /// Candidates per city.
    #[arg(long, default_value_t = 5)]
    candidates: usize,
    #[arg(long, default_value_t = 5)]
    max_depth: usize,
    /// Keep searching after the known optimum is reached.
    #[arg(long)]
    no_stop_at_optimum: bool,
    /// One improvement pass per trial.
    #[arg(long)]
    single_pass: bool,
    /// free, prefer or strict.
    #[arg(long, default_value = "free", value_parser = parse_closing)]
    closing: ClosingRule,
    /// Build each trial's start from scratch instead of following the best tours.
    #[arg(long)]
    greedy_start: bool,
    /// Re-verify every applied move.
    #[arg(long)]
    audit: bool,
    /// Extra `name optimum` table merged over the bundled one.
    #[arg(long)]
    optima: Option<PathBuf>,
    #[command(flatten)]
    ascent: AscentArgs,
}

#[derive(Args)]
struct AscentArgs {
    /// Cap on 1-tree evaluations during the ascent.
    #[arg(long)]
    ascent_iterations: Option<usize>,
    /// Use a nearest-neighbour graph for ascent trees above this many cities.
    #[arg(long, default_value_t = 1000)]
    dense_limit: usize,
    /// Rows of the α table.
    #[arg(long, default_value_t = 20)]
    neighborhood: usize,
}

fn parse_closing(s: &str) -> Result<ClosingRule, String> {
    match s {
        "free" => Ok(ClosingRule::Free),
        "prefer" => Ok(ClosingRule::PreferClosable),
        "strict" => Ok(ClosingRule::Strict),
        _ => Err(format!("unknown closing rule `{s}` (expected free, prefer or strict)")),
    }
}

impl AscentArgs {
    fn config(&self) -> AscentConfig {
        AscentConfig { max_iterations: self.ascent_iterations, dense_limit: self.dense_limit, ..AscentConfig::default() }
    }
}

impl Common {
    fn solver(&self, strategy: Strategy) -> Result<SolverConfig> {
        let rl = RLConfig {
            epsilon: self.epsilon,
            beta: self.beta,
            lambda: self.lambda,
            gamma: self.gamma,
            strategy,
            max_num: self.max_num,
        };
        rl.validate()?;
        if !(2..=5).contains(&self.max_depth) {
            bail!("--max-depth must be between 2 and 5");
        }
        if self.candidates == 0 {
            bail!("--candidates must be positive");
        }
        Ok(SolverConfig {
            max_trials: self.max_trials,
            rl,
            seed: self.seed,
            time_limit: self.time_limit,
            stop_at_optimum: !self.no_stop_at_optimum,
            candidates: self.candidates,
            neighborhood: self.ascent.neighborhood.max(self.candidates),
            max_depth: self.max_depth,
            ascent: self.ascent.config(),
            single_pass: self.single_pass,
            closing: self.closing,
            audit: self.audit,
            initial_tour: if self.greedy_start { InitialTour::Greedy } else { InitialTour::BestTourWalk },
            ..SolverConfig::default()
        })
    }

    fn optima(&self) -> Result<KnownOptima> {
        let mut table = KnownOptima::bundled();
        if let Some(path) = &self.optima {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            for (name, v) in KnownOptima::parse(&text)?.iter() {
                table.insert(name, v);
            }
        }
        Ok(table)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path, optima: &KnownOptima) -> Result<Instance> {
    let mut inst = load_instance(path)?;
    optima.annotate(&mut inst);
    Ok(inst)
}

fn solve_cmd(cmd: SolveCmd) -> Result<()> {
    let optima = cmd.common.optima()?;
    let mut inst = load(&cmd.file, &optima)?;
    if cmd.optimum.is_some() {
        inst.known_optimum = cmd.optimum;
    }
    let cfg = cmd.common.solver(cmd.strategy)?;
    let pre = preprocess(&inst, &cfg);
    if let Some(p) = &cmd.pi_out {
        write(p, &pre.penalties.to_csv())?;
    }
    if let Some(p) = &cmd.alpha_out {
        write(p, &pre.alpha.to_csv())?;
    }
    if let Some(p) = &cmd.candidates_out {
        let mut qt = initial_table(&inst, &pre, &cfg);
        write(&p.with_extension("initial.csv"), &qt.to_csv(&inst, &pre.alpha))?;
    }
    let mut records = Vec::new();
    let mut best: Option<(RunResult, QTable)> = None;
    for run in 0..cmd.runs.max(1) {
        let seed = cfg.seed + run as u64;
        let (res, table) = solve_with_table(&inst, &pre, &SolverConfig { seed, ..cfg.clone() });
        if res.stats.audit_failures > 0 {
            bail!("seed {seed}: {} applied moves failed verification", res.stats.audit_failures);
        }
        if cmd.runs > 1 {
            println!("run {run:>3}  seed {seed:>4}  best {:>10}  trials {:>6}  {:.2}s", res.best_length, res.trials_used, res.wall_time);
        }
        records.push(RunRecord {
            instance: inst.name.clone(),
            strategy: cmd.strategy,
            run,
            seed,
            length: res.best_length,
            trials: res.trials_used,
            time: res.wall_time,
            reached_optimum: res.reached_optimum,
        });
        if best.as_ref().is_none_or(|(b, _)| res.best_length < b.best_length) {
            best = Some((res, table));
        }
    }
    let (res, mut final_table) = best.expect("at least one run");
    println!("instance     {} ({} cities)", inst.name, inst.dimension());
    println!("bound        {:.1}", pre.penalties.w());
    println!("best         {}", res.best_length);
    if let Some(opt) = inst.known_optimum {
        println!("optimum      {opt}  gap {:.4}%", 100.0 * (res.best_length - opt) as f64 / opt as f64);
    }
    println!("trials       {}", res.trials_used);
    println!("time         {:.2}s (+{:.2}s preprocessing)", res.wall_time, pre.seconds);
    if res.timed_out {
        println!("stopped      time limit");
    }
    let report = emit_report(&[aggregate(&records, inst.known_optimum)], cmd.format)?;
    match &cmd.out {
        Some(p) => write(p, &report)?,
        None if cmd.runs > 1 => print!("{report}"),
        None => {}
    }
    if let Some(p) = &cmd.tour_out {
        let tour = TourFile { name: format!("{}.tour", inst.name), permutation: res.best_tour.clone() };
        write(p, &tour.to_tsplib())?;
    }
    if let Some(p) = &cmd.trace_out {
        write(p, &serde_json::to_string_pretty(&res)?)?;
    }
    if let Some(p) = &cmd.candidates_out {
        write(&p.with_extension("final.csv"), &final_table.to_csv(&inst, &pre.alpha))?;
    }
    Ok(())
}

fn suite_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(input)
            .with_context(|| format!("reading {}", input.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tsp"))
            .collect();
        files.sort();
        return Ok(files);
    }
    if input.extension().is_some_and(|x| x == "tsp") {
        return Ok(vec![input.to_path_buf()]);
    }
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let base = input.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap().trim())
        .filter(|l| !l.is_empty())
        .map(|l| base.join(l))
        .collect())
}

fn suite_cmd(cmd: SuiteCmd) -> Result<()> {
    let optima = cmd.common.optima()?;
    let paths = suite_inputs(&cmd.input)?;
    if paths.is_empty() {
        bail!("no instances found in {}", cmd.input.display());
    }
    let instances = paths.iter().map(|p| load(p, &optima)).collect::<Result<Vec<_>>>()?;
    let cfg = SuiteConfig {
        solver: cmd.common.solver(Strategy::Vsr)?,
        strategies: cmd.strategies,
        runs: cmd.runs,
        base_seed: cmd.common.seed,
        threads: cmd.threads,
    };
    let result = run_suite(&instances, &cfg);
    let report = emit_report(&result.reports, cmd.format)?;
    match &cmd.out {
        Some(p) => write(p, &report)?,
        None => print!("{report}"),
    }
    if let Some(p) = &cmd.records_out {
        write(p, &records_csv(&result.records)?)?;
    }
    Ok(())
}

fn bound_cmd(cmd: BoundCmd) -> Result<()> {
    let inst = load(&cmd.file, &KnownOptima::bundled())?;
    let start = std::time::Instant::now();
    let pen = rlkopt::subgradient_ascent(&inst, &cmd.ascent.config());
    println!("{} {:.1} {:.2}s", inst.name, pen.w(), start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> std::process::ExitCode {
    let outcome = match Cli::parse().cmd {
        Command::Solve(c) => solve_cmd(c),
        Command::Suite(c) => suite_cmd(c),
        Command::Bound(c) => bound_cmd(c),
    };
    match outcome {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
