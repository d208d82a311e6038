//! Command-line front end: merges flags with an optional TOML file, runs one
//! diagnostic and writes a JSON report plus an optional CSV.
//!
//! Exit codes: 0 when every check passes, 1 on a runtime failure, 2 on a
//! configuration error and 3 when a check fails.

use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;
mod output;

use config::{Command, Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] wildsim::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Model(wildsim::Error::PremiseFailed { .. }) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "wildsim",
    version,
    about = "Monte Carlo diagnostics for the Boltzmann equation with Maxwellian molecules"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::build(cli.command, &cli.overrides).and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("wildsim: {} checks failed", cli.command.name());
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("wildsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
