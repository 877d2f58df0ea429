mod commands;
mod config;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "reflow", version, about = "Loop-group deformations of reflective submanifolds: data generation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Sectioned key = value run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Comma- or space-separated λ values (angles t for circle loops).
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override one acceptance budget; repeatable.
    #[arg(long, value_name = "NAME=VAL")]
    tol: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the symmetric pair, its subspace dimensions and the rank verdict.
    Pair(Common),
    /// Generate connection data and write it as a container file.
    Vacuum(Common),
    /// Verify connection data over the λ list; writes report.csv and report.json.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Container file to verify instead of the configured source.
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
    /// Sweep λ and write scan.csv.
    Scan(Common),
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(l) = &common.lambda {
        cfg.set_lambdas(l)?;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    for t in &common.tol {
        cfg.set_tol(t)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Pair(c) => commands::pair(&load(&c)?),
        Command::Vacuum(c) => commands::vacuum(&load(&c)?),
        Command::Verify { common, input } => commands::verify(&load(&common)?, input),
        Command::Scan(c) => commands::scan(&load(&c)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("REFLOW_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("configuration error: REFLOW_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
