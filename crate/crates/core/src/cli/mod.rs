//! Command-line front end.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::error::Error;
use crate::executors::prepare_inner;
use crate::geometry::{
    cap_fraction, coverage_deficit_with, monte_carlo_cap, sphere_measure, GeometryQuery,
};
use config::{run_config, ExperimentConfig, RunOutcome, SweepConfig};
use report::{write_report, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "qsynth",
    version,
    about = "Oracle-based state synthesis experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment config and write its report.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run every config of a grid and write one report.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Oracle file operations.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Run the randomized invariant suites.
    Verify {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Only suites whose name contains this string.
        #[arg(long)]
        only: Option<String>,
    },
    /// Sphere-measure, cap and counting calculations (JSON on stdout).
    Geometry {
        #[command(subcommand)]
        command: GeometryCommand,
    },
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Build the oracle for a config's target and write it in binary form.
    Export {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum GeometryCommand {
    /// Surface measure of the unit sphere S_d.
    Measure {
        #[arg(long)]
        d: usize,
    },
    /// Exact and sampled fraction of states within trace distance epsilon.
    Cap {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// log2(circuit count) + log2(covered fraction per circuit).
    Deficit {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 3)]
        gates: usize,
        #[arg(long, default_value_t = 3)]
        arity: usize,
        #[arg(long, default_value_t = crate::geometry::DEFAULT_QUBIT_CONSTANT)]
        qubit_constant: f64,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::EpsilonOutOfRange(_)
            | Error::OutOfRange { .. }
            | Error::RegisterTooLarge { .. }
            | Error::DimensionMismatch { .. }
            | Error::ZeroNorm => Failure::Config(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
            Failure::Verify(_) => EXIT_VERIFY,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) | Failure::Verify(m) => m,
        }
    }
}

fn prepare_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn report_path(out: &OutArgs, name: Option<&str>, fallback: &str) -> PathBuf {
    out.out.join(format!(
        "{}.{}",
        name.unwrap_or(fallback),
        out.format.extension()
    ))
}

fn print_warnings(o: &RunOutcome) {
    for w in &o.warnings {
        eprintln!("warning: {w}");
    }
}

fn synth(config: &Path, out: &OutArgs) -> Result<(), Failure> {
    let c = ExperimentConfig::from_file(config)?;
    prepare_dir(&out.out)?;
    let o = run_config(&c)?;
    print_warnings(&o);
    let path = report_path(out, c.output.report.as_deref(), "report");
    write_report(std::slice::from_ref(&o), &path, out.format)?;
    let r = &o.report;
    println!(
        "{} n={} epsilon={} queries={} error_2norm={} error_trace={} -> {}",
        r.algorithm,
        r.n,
        r.epsilon,
        r.query_count,
        r.error_2norm.map(|e| e.to_string()).unwrap_or_default(),
        r.error_trace.map(|e| e.to_string()).unwrap_or_default(),
        path.display()
    );
    Ok(())
}

fn sweep(config: &Path, out: &OutArgs, jobs: usize) -> Result<(), Failure> {
    let configs = SweepConfig::from_file(config)?.expand()?;
    prepare_dir(&out.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let results: Vec<Result<RunOutcome, Error>> =
        pool.install(|| configs.par_iter().map(run_config).collect());
    let mut outcomes = Vec::with_capacity(results.len());
    for r in results {
        let o = r?;
        print_warnings(&o);
        outcomes.push(o);
    }
    let name = configs.first().and_then(|c| c.output.report.clone());
    let path = report_path(out, name.as_deref(), "sweep");
    write_report(&outcomes, &path, out.format)?;
    println!("{} runs -> {}", outcomes.len(), path.display());
    Ok(())
}

fn oracle_export(config: &Path, out: &Path) -> Result<(), Failure> {
    let c = ExperimentConfig::from_file(config)?;
    prepare_dir(out)?;
    let (psi, _) = c.target_state()?;
    let (plan, oracle) = prepare_inner(&psi, c.epsilon, &c.options())?;
    let path = out.join(
        c.output
            .oracle
            .clone()
            .unwrap_or_else(|| "oracle.osyn".into()),
    );
    oracle.write_file(&path)?;
    println!(
        "n={} t={} T={} input_bits={} bytes={} -> {}",
        plan.n(),
        oracle.t(),
        oracle.big_t(),
        oracle.total_input_bits(),
        oracle.to_bytes().len(),
        path.display()
    );
    Ok(())
}

fn verify(instances: usize, seed: u64, jobs: usize, only: Option<&str>) -> Result<(), Failure> {
    let run = || crate::verify::run_selected(instances, seed, only);
    let report = if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Failure::Runtime(e.to_string()))?
            .install(run)
    } else {
        run()
    };
    for s in &report.suites {
        println!(
            "{} {} ({} instances, {} ms)",
            if s.passed() { "PASS" } else { "FAIL" },
            s.name,
            s.instances,
            s.elapsed_ms
        );
        for f in s.failures.iter().take(5) {
            println!("    {f}");
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verify(format!(
            "{} suite(s) failed",
            report.suites.iter().filter(|s| !s.passed()).count()
        )))
    }
}

fn geometry(cmd: &GeometryCommand) -> Result<(), Failure> {
    let value = match *cmd {
        GeometryCommand::Measure { d } => json!({ "d": d, "measure": sphere_measure(d) }),
        GeometryCommand::Cap {
            n,
            epsilon,
            trials,
            seed,
        } => {
            let q = GeometryQuery::new(n, epsilon)?;
            let mut v =
                json!({ "n": n, "m": q.m(), "epsilon": epsilon, "cap_fraction": cap_fraction(&q) });
            if trials > 0 {
                v["monte_carlo"] = json!(monte_carlo_cap(&q, trials, seed)?);
                v["trials"] = json!(trials);
            }
            v
        }
        GeometryCommand::Deficit {
            n,
            epsilon,
            s,
            gates,
            arity,
            qubit_constant,
        } => {
            let d = coverage_deficit_with(n, epsilon, s, gates, arity, qubit_constant)?;
            json!({ "n": n, "epsilon": epsilon, "s": s, "gates": gates, "arity": arity,
                    "qubit_constant": qubit_constant, "deficit": d, "covers": d >= 0.0 })
        }
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("plain data")
    );
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Synth { config, out } => synth(config, out),
        Command::Sweep { config, out, jobs } => sweep(config, out, *jobs),
        Command::Oracle {
            command: OracleCommand::Export { config, out },
        } => oracle_export(config, out),
        Command::Verify {
            instances,
            seed,
            jobs,
            only,
        } => verify(*instances, *seed, *jobs, only.as_deref()),
        Command::Geometry { command } => geometry(command),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}
