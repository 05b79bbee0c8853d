//! `privtree` command-line tool.
//!
//! Exit codes: 0 success, 1 configuration error, 2 input-data error,
//! 3 numeric failure.

mod commands;
mod config;
mod fail;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use commands::Command;
use config::RunConfig;
use fail::CliError;

#[derive(Debug, Parser)]
#[command(name = "privtree", version, about = "Differentially private hierarchical decompositions")]
struct Cli {
    /// JSON file whose settings replace the corresponding flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut cfg = cli.run;
    if let Some(path) = &cli.config {
        cfg = cfg.overlay(RunConfig::load(path)?);
    }
    if cfg.noiseless {
        eprintln!("WARNING: --noiseless is set. No noise is added; the output is NOT differentially private.");
    }
    let jobs = cfg.jobs.unwrap_or(0);
    privtree::par::with_jobs(jobs, || commands::run(&cli.command, &cfg))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
