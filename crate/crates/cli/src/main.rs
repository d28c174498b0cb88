//! `onestep` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or solver failure, 2 usage error.

mod commands;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::parse::{parse_list, parse_range, parse_real, Interval, Reals};

#[derive(Parser, Debug)]
#[command(name = "onestep", version, about = "One-step β-scheme integrators: coefficients, stability, convergence, runs")]
struct Cli {
    /// Worker threads for data-parallel sections (default: all cores;
    /// ONESTEP_THREADS is used when the flag is absent).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print or write difference/interpolation coefficients as JSON.
    Coeffs(CoeffsArgs),
    /// Rasterize a region of absolute stability to PGM plus a JSON sidecar.
    StabilityRegion(RegionArgs),
    /// Classify A-/L-stability analytically and numerically.
    StabilityCheck(CheckArgs),
    /// Temporal convergence study written as CSV and JSON.
    Converge(ConvergeArgs),
    /// Integrate a problem and write field snapshots.
    Run(RunArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CoeffScheme {
    Gbdf,
    Onestep2,
    Onestep3,
}

#[derive(Args, Debug)]
struct CoeffsArgs {
    #[arg(long, value_enum)]
    scheme: CoeffScheme,
    /// Stage count (gbdf only).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    beta: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RegionArgs {
    #[arg(long)]
    order: u32,
    #[arg(long, value_parser = parse_real)]
    beta1: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    beta2: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    beta3: Option<f64>,
    /// Rasterize the explicit Runge–Kutta polynomial of this order instead.
    #[arg(long)]
    rk: bool,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "-10:2")]
    re: Interval,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true, default_value = "-6:6")]
    im: Interval,
    /// Cells per axis.
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// PGM path; the sidecar is written next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    order: u32,
    /// Comma-separated β values, e.g. `2/3,1`.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    betas: Reals,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeName {
    Onestep2,
    Onestep3,
    Rk2,
    Rk3,
}

#[derive(Args, Debug, Clone)]
struct SchemeArgs {
    #[arg(long, value_enum, default_value = "onestep2")]
    scheme: SchemeName,
    /// Comma-separated β values (rk2: the single abscissa e2).
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true, default_value = "2/3,1")]
    betas: Reals,
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    #[arg(long)]
    problem: String,
    /// Grid points per axis for grid problems.
    #[arg(long = "nx", default_value_t = 32)]
    n: usize,
    /// Decay rate for `decay`.
    #[arg(long, value_parser = parse_real, default_value = "1000")]
    lambda: f64,
    /// Diffusion coefficient for `convdiff`.
    #[arg(long = "K", value_parser = parse_real, default_value = "2e-3")]
    diffusion: f64,
    /// Interface width for `allen-cahn`.
    #[arg(long, value_parser = parse_real, default_value = "0.2")]
    eps: f64,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Comma-separated decreasing time steps, e.g. `1/8,1/16,1/32`.
    #[arg(long, value_parser = parse_list)]
    dts: Reals,
    #[arg(long = "T", value_parser = parse_real)]
    t_end: f64,
    /// Reference time step for problems without an exact solution.
    #[arg(long, value_parser = parse_real)]
    reference_dt: Option<f64>,
    #[arg(long)]
    csv: PathBuf,
    /// JSON report path (default: the CSV path with a .json extension).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, value_parser = parse_real)]
    dt: f64,
    #[arg(long = "T", value_parser = parse_real)]
    t_end: f64,
    /// Comma-separated snapshot times (default: 0 and T).
    #[arg(long, value_parser = parse_list)]
    snapshots: Option<Reals>,
    #[arg(long)]
    out: PathBuf,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

fn configure_threads(flag: Option<usize>) -> CliResult {
    let env = std::env::var("ONESTEP_THREADS").ok();
    let threads = match (flag, env) {
        (Some(n), _) => Some(n),
        (None, Some(v)) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("ONESTEP_THREADS must be an integer, got '{v}'")))?,
        ),
        (None, None) => None,
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.into()))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Coeffs(a) => commands::coeffs(a),
        Command::StabilityRegion(a) => commands::stability_region(a),
        Command::StabilityCheck(a) => commands::stability_check(a),
        Command::Converge(a) => commands::converge(a),
        Command::Run(a) => commands::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Runtime(err) => eprintln!("error: {err:#}"),
            }
            ExitCode::from(e.code())
        }
    }
}
