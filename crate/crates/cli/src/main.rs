//! `smms` command-line tool.
//!
//! Exit codes: 0 success, 1 numerical failure or non-convergence (and any
//! failed check in `verify`), 2 configuration error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command, RunConfig, OUT_DIR_ENV};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl From<smms::SmmsError> for CliError {
    fn from(e: smms::SmmsError) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let env_out = std::env::var_os(OUT_DIR_ENV).filter(|s| !s.is_empty()).map(PathBuf::from);
    let cfg = RunConfig::resolve(cli.command, cli.flags, env_out)?;
    match cfg.command {
        Command::Model => commands::cmd_model(&cfg),
        Command::Energy => commands::cmd_energy(&cfg),
        Command::Verify => commands::cmd_verify(&cfg),
        Command::QeSolve => commands::cmd_qe_solve(&cfg),
        Command::Sweep => commands::cmd_sweep(&cfg),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("smms: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
