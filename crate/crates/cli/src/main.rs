//! `adiabatic`: instance generation, single runs, time searches, sweeps and
//! fits from the command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical
//! accuracy failure, 4 generation failure.

mod range;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adiabatic_core::evolution::evolve_with_stats;
use adiabatic_core::experiments::*;
use adiabatic_core::instance::MAX_BITS;
use adiabatic_core::{
    evolution, generate_fixed_clauses, generate_gusa, success_probability, Error, EvolutionConfig,
    ExactCoverInstance, StepControl,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "adiabatic",
    version,
    about = "Quantum adiabatic evolution on random Exact Cover instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Evolve one instance for a fixed run time.
    Evolve(EvolveArgs),
    /// Find a run time whose success probability lies in the band.
    Search(SearchArgs),
    /// Run an ensemble experiment.
    Sweep {
        #[command(subcommand)]
        kind: SweepCommand,
    },
    /// Fit a quadratic to per-n median run times from a records CSV.
    Fit(FitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Gusa,
    Fixed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepFormat {
    Csv,
    Json,
    Both,
}

#[derive(Clone, Debug)]
struct List(Vec<usize>);

fn parse_list(text: &str) -> Result<List, String> {
    range::parse_list(text).map(List)
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "gusa")]
    mode: Mode,
    /// Number of bits.
    #[arg(long)]
    n: usize,
    /// Clause count (fixed mode only).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
struct IntegratorArgs {
    /// Largest accepted norm drift.
    #[arg(long = "norm-tol", default_value_t = 1e-6)]
    norm_tol: f64,
    /// Agreement required between step sizes in the convergence self-check.
    #[arg(long = "oracle-tol", default_value_t = 1e-6)]
    oracle_tol: f64,
    /// Halvings of the default RK4 step.
    #[arg(long, default_value_t = 0)]
    halvings: u32,
}

#[derive(Args, Clone, Copy)]
struct BandArgs {
    #[arg(long = "band-lo", default_value_t = 0.12)]
    band_lo: f64,
    #[arg(long = "band-hi", default_value_t = 0.13)]
    band_hi: f64,
    #[arg(long = "t-max", default_value_t = 1048576.0)]
    t_max: f64,
}

#[derive(Args)]
struct EvolveArgs {
    /// Instance JSON file.
    instance: PathBuf,
    /// Run time.
    #[arg(long = "T")]
    run_time: f64,
    #[command(flatten)]
    integrator: IntegratorArgs,
    /// Write the final state as JSON (n <= 10).
    #[arg(long = "dump-state")]
    dump_state: Option<PathBuf>,
    /// Also write the report as JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

#[derive(Args)]
struct SearchArgs {
    instance: PathBuf,
    #[command(flatten)]
    band: BandArgs,
    #[command(flatten)]
    integrator: IntegratorArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

#[derive(Args)]
struct SweepCommon {
    /// Master seed; every instance seed derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory for records.csv and summary.json; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to both with --out and json without.
    #[arg(long, value_enum)]
    format: Option<SweepFormat>,
    #[command(flatten)]
    band: BandArgs,
    #[command(flatten)]
    integrator: IntegratorArgs,
    /// Skip the step-size convergence check.
    #[arg(long = "no-self-check")]
    no_self_check: bool,
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Median band-search time per n, with a quadratic fit.
    MedianTime {
        #[arg(long, value_parser = parse_list)]
        n: List,
        #[arg(long, default_value_t = 75)]
        instances: usize,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// Success probabilities at the fitted run time.
    #[command(name = "fixed-T", alias = "fixed-t")]
    FixedT {
        #[arg(long, value_parser = parse_list)]
        n: List,
        /// Fit JSON written by a median-time sweep or `fit`.
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Include a 100-bin probability histogram per n.
        #[arg(long)]
        histogram: bool,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// Fixed-clause-count instances by category at the fitted run time.
    Clauses {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_list)]
        m: List,
        #[arg(long)]
        fit: PathBuf,
        /// Quota per category and clause count.
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// Unsatisfiable and uniquely satisfiable fractions per clause count.
    Phase {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_list)]
        m: List,
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[command(flatten)]
        common: SweepCommon,
    },
}

#[derive(Args)]
struct FitArgs {
    /// CSV with `n` and `T` columns, such as a median-time records.csv.
    input: PathBuf,
    /// Fit JSON file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(Error::Json(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(Error::Io(_)) => 1,
            Failure::Core(Error::Csv(e)) if e.is_io_error() => 1,
            Failure::Core(Error::GenerationFailure { .. }) => 4,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(_) => 2,
        }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "{msg}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

type Outcome = Result<(), Failure>;

fn check(ok: bool, flag: &str, constraint: impl Display) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{flag}: {constraint}")))
    }
}

fn check_bits(n: usize, flag: &str) -> Outcome {
    check(
        (1..=MAX_BITS).contains(&n),
        flag,
        format!("{n} must be between 1 and {MAX_BITS}"),
    )
}

impl IntegratorArgs {
    fn config(&self, run_time: f64) -> Result<EvolutionConfig, Failure> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        check(
            positive(self.norm_tol),
            "--norm-tol",
            format!("{} must be positive", self.norm_tol),
        )?;
        check(
            positive(self.oracle_tol),
            "--oracle-tol",
            format!("{} must be positive", self.oracle_tol),
        )?;
        check(
            self.halvings <= 30,
            "--halvings",
            format!("{} must be at most 30", self.halvings),
        )?;
        let mut cfg = EvolutionConfig::new(run_time).with_step_control(StepControl::Auto {
            halvings: self.halvings,
        });
        cfg.norm_tolerance = self.norm_tol;
        cfg.oracle_tolerance = self.oracle_tol;
        Ok(cfg)
    }
}

impl BandArgs {
    fn search(&self) -> Result<BandSearch, Failure> {
        let lo = self.band_lo;
        let hi = self.band_hi;
        check(
            lo > 0.0 && lo < 1.0,
            "--band-lo",
            format!("{lo} must lie in (0, 1)"),
        )?;
        check(
            hi > lo && hi <= 1.0,
            "--band-hi",
            format!("{hi} must lie in (--band-lo, 1]"),
        )?;
        let search = BandSearch {
            p_lo: lo,
            p_hi: hi,
            t_max: self.t_max,
            ..BandSearch::default()
        };
        check(
            self.t_max.is_finite() && self.t_max >= search.t_start,
            "--t-max",
            format!(
                "{} must be finite and at least {}",
                self.t_max, search.t_start
            ),
        )?;
        Ok(search)
    }
}

impl SweepCommon {
    fn config(&self) -> Result<SweepConfig, Failure> {
        if self.format == Some(SweepFormat::Both) && self.out.is_none() {
            return Err(Failure::Usage("--format both: requires --out".into()));
        }
        let mut cfg = SweepConfig::new(self.seed).with_workers(self.workers);
        cfg.evolution = self.integrator.config(0.0)?;
        cfg.search = self.band.search()?;
        cfg.self_check = !self.no_self_check;
        Ok(cfg)
    }

    fn format(&self) -> SweepFormat {
        self.format.unwrap_or(if self.out.is_some() {
            SweepFormat::Both
        } else {
            SweepFormat::Json
        })
    }

    /// Writes records and summary to the output directory or stdout.
    fn emit(
        &self,
        records: &[EnsembleRecord],
        summary: Value,
        fit: Option<&QuadraticFit>,
    ) -> Outcome {
        let format = self.format();
        let csv = records_csv(records);
        let summary = serde_json::to_string_pretty(&summary)? + "\n";
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                if format != SweepFormat::Json {
                    write_file(&dir.join("records.csv"), &csv)?;
                }
                if format != SweepFormat::Csv {
                    write_file(&dir.join("summary.json"), &summary)?;
                }
                if let Some(fit) = fit {
                    fit.write(dir.join("fit.json"))?;
                    eprintln!("wrote {}", dir.join("fit.json").display());
                }
            }
            None if format == SweepFormat::Csv => print!("{csv}"),
            None => print!("{summary}"),
        }
        Ok(())
    }
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Outcome {
    check_bits(args.n, "--n")?;
    let mut rng = seeded_rng(args.seed);
    let inst = match (args.mode, args.m) {
        (Mode::Gusa, Some(_)) => {
            return Err(Failure::Usage("--m: only valid with --mode fixed".into()))
        }
        (Mode::Fixed, None) => {
            return Err(Failure::Usage("--m: required with --mode fixed".into()))
        }
        (Mode::Gusa, None) => generate_gusa(args.n, &mut rng)?,
        (Mode::Fixed, Some(m)) => {
            let n = args.n;
            let triples = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
            check(
                m <= triples,
                "--m",
                format!("{m} exceeds the {triples} distinct clauses on {n} bits"),
            )?;
            generate_fixed_clauses(n, m, &mut rng)?
        }
    };
    let satisfying = inst.count_satisfying()?;
    match &args.out {
        Some(path) => {
            inst.write(path)?;
            println!("clauses: {}", inst.num_clauses());
            println!("satisfying: {satisfying}");
        }
        None => {
            print!("{}", inst.to_json());
            eprintln!("clauses: {}", inst.num_clauses());
            eprintln!("satisfying: {satisfying}");
        }
    }
    Ok(())
}

fn print_report(report: &BTreeMap<&str, Value>, format: ReportFormat) -> Result<String, Failure> {
    let json = serde_json::to_string_pretty(report)? + "\n";
    match format {
        ReportFormat::Json => print!("{json}"),
        ReportFormat::Text => {
            for (k, v) in report {
                if !v.is_array() {
                    println!("{k}: {v}");
                }
            }
        }
    }
    Ok(json)
}

fn cmd_evolve(args: &EvolveArgs) -> Outcome {
    check(
        args.run_time.is_finite() && args.run_time >= 0.0,
        "--T",
        format!("{} must be finite and >= 0", args.run_time),
    )?;
    let cfg = args.integrator.config(args.run_time)?;
    let prepared = PreparedInstance::new(0, ExactCoverInstance::read(&args.instance)?)?;
    let n = prepared.instance.n();
    if args.dump_state.is_some() {
        check(
            n <= evolution::DUMP_MAX_BITS,
            "--dump-state",
            format!("n = {n} exceeds {}", evolution::DUMP_MAX_BITS),
        )?;
    }
    let (psi, stats) = evolve_with_stats(&prepared.hamiltonian, &cfg)?;
    let p = success_probability(&psi, &prepared.targets)?;
    if let Some(path) = &args.dump_state {
        psi.write_json(path)?;
    }
    let mut report = BTreeMap::from([
        ("n", json!(n)),
        ("clauses", json!(prepared.instance.num_clauses())),
        ("T", json!(args.run_time)),
        ("satisfying", json!(prepared.num_satisfying())),
        ("probability", json!(p)),
        ("steps", json!(stats.steps)),
        ("norm_drift", json!(stats.norm_drift)),
    ]);
    if !prepared.satisfiable() {
        report.insert("min_violations", json!(prepared.min_violations));
        report.insert("minimal_assignments", json!(prepared.targets.len()));
    }
    let json = print_report(&report, args.format)?;
    if let Some(path) = &args.out {
        fs::write(path, json)?;
    }
    Ok(())
}

fn cmd_search(args: &SearchArgs) -> Outcome {
    let search = args.band.search()?;
    let cfg = args.integrator.config(search.t_start)?;
    let prepared = PreparedInstance::new(0, ExactCoverInstance::read(&args.instance)?)?;
    let found = prepared.find_time_for_band(&cfg, &search)?;
    let report = BTreeMap::from([
        ("n", json!(prepared.instance.n())),
        ("clauses", json!(prepared.instance.num_clauses())),
        ("T", json!(found.run_time)),
        ("probability", json!(found.probability)),
        ("stalled", json!(found.stalled)),
        ("evaluations", json!(found.probes.len())),
        ("probes", json!(found.probes)),
    ]);
    let json = print_report(&report, args.format)?;
    if let Some(path) = &args.out {
        fs::write(path, json)?;
    }
    Ok(())
}

fn positive_count(value: usize) -> Outcome {
    check(
        value > 0,
        "--instances",
        format!("{value} must be positive"),
    )
}

fn cmd_sweep(kind: &SweepCommand) -> Outcome {
    match kind {
        SweepCommand::MedianTime {
            n,
            instances,
            common,
        } => {
            let cfg = common.config()?;
            positive_count(*instances)?;
            for &v in &n.0 {
                check_bits(v, "--n")?;
            }
            let sweep = median_time_sweep(&n.0, *instances, &cfg)?;
            let summary = json!({
                "kind": "median-time",
                "master_seed": cfg.master_seed,
                "config": cfg,
                "n": n.0,
                "instances": instances,
                "rows": sweep.rows,
                "fit": sweep.fit,
            });
            common.emit(&sweep.records, summary, sweep.fit.as_ref())
        }
        SweepCommand::FixedT {
            n,
            fit,
            instances,
            histogram,
            common,
        } => {
            let cfg = common.config()?;
            positive_count(*instances)?;
            let fit = QuadraticFit::read(fit)?;
            for &v in &n.0 {
                check_bits(v, "--n")?;
                fit.run_time(v)?;
            }
            let sweep = fixed_t_sweep(&n.0, &fit, *instances, *histogram, &cfg)?;
            let summary = json!({
                "kind": "fixed-T",
                "master_seed": cfg.master_seed,
                "config": cfg,
                "n": n.0,
                "instances": instances,
                "fit": fit,
                "rows": sweep.rows,
            });
            common.emit(&sweep.records, summary, None)
        }
        SweepCommand::Clauses {
            n,
            m,
            fit,
            instances,
            common,
        } => {
            let cfg = common.config()?;
            positive_count(*instances)?;
            check_bits(*n, "--n")?;
            let triples = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
            for &v in &m.0 {
                check(
                    v >= 1 && v <= triples,
                    "--m",
                    format!("{v} must lie in 1..={triples}"),
                )?;
            }
            let fit = QuadraticFit::read(fit)?;
            fit.run_time(*n)?;
            let sweep = clause_sweep(*n, &m.0, *instances, &fit, &cfg)?;
            let summary = json!({
                "kind": "clauses",
                "master_seed": cfg.master_seed,
                "config": cfg,
                "n": n,
                "m": m.0,
                "quota": instances,
                "fit": fit,
                "T": sweep.run_time,
                "step_halvings": sweep.step_halvings,
                "rows": sweep.rows,
            });
            common.emit(&sweep.records, summary, None)
        }
        SweepCommand::Phase {
            n,
            m,
            instances,
            common,
        } => {
            let cfg = common.config()?;
            positive_count(*instances)?;
            check_bits(*n, "--n")?;
            let triples = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
            for &v in &m.0 {
                check(
                    v <= triples,
                    "--m",
                    format!("{v} exceeds the {triples} distinct clauses on {n} bits"),
                )?;
            }
            let scan = phase_transition_scan(*n, &m.0, *instances, &cfg)?;
            let summary = json!({
                "kind": "phase",
                "master_seed": cfg.master_seed,
                "config": cfg,
                "n": n,
                "m": m.0,
                "instances": instances,
                "rows": scan.rows,
            });
            common.emit(&scan.records, summary, None)
        }
    }
}

/// Per-n medians of the `T` column, skipping empty cells.
fn median_points(path: &Path) -> Result<Vec<(f64, f64)>, Failure> {
    let mut reader = csv::Reader::from_path(path).map_err(Error::Csv)?;
    let headers = reader.headers().map_err(Error::Csv)?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Failure::Core(Error::InvalidArgument(format!(
                "{}: no {name:?} column",
                path.display()
            )))
        })
    };
    let (n_col, t_col) = (column("n")?, column("T")?);
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(Error::Csv)?;
        let bad = |what: &str| {
            Failure::Core(Error::InvalidArgument(format!(
                "{} row {}: bad {what}",
                path.display(),
                line + 2
            )))
        };
        let t = row.get(t_col).unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        let t: f64 = t.parse().map_err(|_| bad("T"))?;
        let n: usize = row
            .get(n_col)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| bad("n"))?;
        by_n.entry(n).or_default().push(t);
    }
    Ok(by_n
        .into_iter()
        .map(|(n, mut ts)| {
            ts.sort_by(f64::total_cmp);
            (n as f64, median_sorted(&ts))
        })
        .collect())
}

fn cmd_fit(args: &FitArgs) -> Outcome {
    let fit = fit_quadratic(&median_points(&args.input)?)?;
    match &args.out {
        Some(path) => {
            fit.write(path)?;
            let [a, b, c] = fit.coefficients;
            println!("T(n) = {a} + {b} n + {c} n^2");
        }
        None => println!("{}", serde_json::to_string_pretty(&fit)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Evolve(args) => cmd_evolve(args),
        Command::Search(args) => cmd_search(args),
        Command::Sweep { kind } => cmd_sweep(kind),
        Command::Fit(args) => cmd_fit(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
