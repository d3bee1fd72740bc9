//! `nftledger` command-line front-end.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nftledger::pipeline::{self, Dataset};
use nftledger::Error;

use config::{RunArgs, RunConfig, UsageError};

const THREADS_VAR: &str = "NFTLEDGER_THREADS";

#[derive(Parser)]
#[command(
    name = "nftledger",
    version,
    about = "NFT collection transaction analytics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the input files and write validation_report.json.
    Validate(RunArgs),
    /// Daily series and collection summary.
    Summarize(RunArgs),
    /// Rarity scores and the price-on-rarity regression (needs --traits).
    Rarity(RunArgs),
    /// Wash-trading screen: per-token report, per-transaction flags, circuits.
    WashScan(RunArgs),
    /// Flag lateral swaps.
    Swaps(RunArgs),
    /// Daily log returns and trailing realized volatility.
    Volatility(RunArgs),
    /// Full bundle: series, returns, volatility, rarity, regression, wash
    /// report and Benford test (needs --traits).
    Report(RunArgs),
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(msg) => Failure::Usage(msg),
            e => Failure::Data(e),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::Usage(format!(
                "{THREADS_VAR} must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure thread pool: {e}")))
}

fn load(cfg: &RunConfig) -> Result<Dataset, Failure> {
    let dataset = pipeline::load(&cfg.inputs)?;
    let rejected = dataset.validation.error_entries.len();
    if rejected > 0 {
        eprintln!("warning: {rejected} rows rejected; run `nftledger validate` for details");
    }
    Ok(dataset)
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

/// Returns whether the data passed validation (only `validate` can fail it).
fn run(command: Command) -> Result<bool, Failure> {
    configure_threads()?;
    let (args, name) = match &command {
        Command::Validate(a) => (a, "validate"),
        Command::Summarize(a) => (a, "summarize"),
        Command::Rarity(a) => (a, "rarity"),
        Command::WashScan(a) => (a, "wash-scan"),
        Command::Swaps(a) => (a, "swaps"),
        Command::Volatility(a) => (a, "volatility"),
        Command::Report(a) => (a, "report"),
    };
    let cfg = args.resolve()?;
    if matches!(command, Command::Rarity(_) | Command::Report(_)) && cfg.inputs.traits.is_none() {
        return Err(Failure::Usage(format!("{name} needs --traits")));
    }

    if let Command::Validate(_) = command {
        let dataset = pipeline::load(&cfg.inputs)?;
        let v = &dataset.validation;
        print_written(&pipeline::run_validate(&dataset, &cfg.out)?);
        println!(
            "rows: {}  accepted: {}  errors: {}  warnings: {}  duplicates collapsed: {}",
            v.input_rows,
            v.record_count,
            v.error_entries.len(),
            v.warning_entries.len(),
            v.duplicates_collapsed
        );
        return Ok(v.accepted());
    }

    let dataset = load(&cfg)?;
    let a = &cfg.analysis;
    let written = match command {
        Command::Summarize(_) => pipeline::run_summarize(&dataset, a, &cfg.out)?,
        Command::Rarity(_) => pipeline::run_rarity(&dataset, a, &cfg.out)?,
        Command::WashScan(_) => pipeline::run_wash_scan(&dataset, a, &cfg.out)?,
        Command::Swaps(_) => pipeline::run_swaps(&dataset, a, &cfg.out)?,
        Command::Volatility(_) => pipeline::run_volatility(&dataset, a, &cfg.out)?,
        Command::Report(_) => pipeline::run_report(&dataset, a, &cfg.out)?,
        Command::Validate(_) => unreachable!("handled above"),
    };
    print_written(&written);
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
