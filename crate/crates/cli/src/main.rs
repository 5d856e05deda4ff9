//! `slelab`: simulate chordal SLE traces, evaluate closed forms and run the
//! Monte Carlo experiments from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 statistical
//! acceptance failure (including too many undecided runs), 3 numerical failure.

mod config;
mod experiment;
mod formula;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slelab::loewner::trace;
use slelab::{build_chain, sample_brownian, SleError};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "slelab", version, about = "Chordal SLE simulation and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one trace and write it as CSV, optionally also as SVG.
    Trace(TraceArgs),
    /// Evaluate a closed-form prediction.
    Formula(formula::FormulaArgs),
    /// Run a Monte Carlo experiment; writes results.csv and manifest.json.
    Experiment(Box<experiment::ExperimentArgs>),
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long)]
    kappa: f64,
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output with columns t, re, im.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Acceptance(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Acceptance(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<SleError> for CliError {
    fn from(e: SleError) -> Self {
        match e {
            SleError::InvalidParameter { .. } | SleError::Parse(_) | SleError::Io(_) => CliError::Usage(e.to_string()),
            SleError::RunLimit { .. } => CliError::Acceptance(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

fn cmd_trace(args: &TraceArgs) -> Result<(), CliError> {
    let path = sample_brownian(args.kappa, args.horizon, args.steps, args.seed)?;
    let tr = trace(&build_chain(&path)?);
    let file = File::create(&args.out).map_err(|e| io_error(&args.out, e))?;
    tr.write_csv(BufWriter::new(file))?;
    if let Some(svg) = &args.svg {
        std::fs::write(svg, tr.to_svg()).map_err(|e| io_error(svg, e))?;
    }
    println!("wrote {} points to {}", tr.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout and are not errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Trace(args) => cmd_trace(args),
        Command::Formula(args) => formula::run(args),
        Command::Experiment(args) => experiment::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
