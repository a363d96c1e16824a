//! Batch front end: configuration files in, CSV and JSON artifacts out.

pub mod commands;
pub mod config;
pub mod scenario;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    certify_trajectory, cmd_certify, cmd_compare, cmd_ladder, cmd_refine, cmd_run, load_config,
    Check, CliError, EXIT_CERTIFICATION, EXIT_CONFIG, EXIT_NO_CONVERGENCE, EXIT_OK,
};
pub use config::{ConfigError, RunConfig, ScenarioName};
pub use scenario::build_scenario;

#[derive(Debug, Parser)]
#[command(name = "bnsf", version, about = "Picard solver and estimate diagnostics for the 1D BNSF system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one scenario; writes trajectory.csv, diagnostics.csv, summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Refine grid and step together; writes rates.csv.
    Refine {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Configured run against the same run with tau = 0; writes compare.csv.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Level-set energies of both ladders; writes ladder.csv.
    Ladder {
        #[arg(long)]
        config: PathBuf,
    },
    /// All diagnostic checks; writes certify.json.
    Certify {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Runs a parsed command and returns the process exit code.
pub fn execute(command: &Command) -> i32 {
    let path = match command {
        Command::Run { config }
        | Command::Refine { config, .. }
        | Command::Compare { config }
        | Command::Ladder { config }
        | Command::Certify { config } => config,
    };
    let result = load_config(path).and_then(|cfg| match command {
        Command::Run { .. } => cmd_run(&cfg),
        Command::Refine { levels, .. } => cmd_refine(&cfg, *levels),
        Command::Compare { .. } => cmd_compare(&cfg),
        Command::Ladder { .. } => cmd_ladder(&cfg),
        Command::Certify { .. } => cmd_certify(&cfg),
    });
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("bnsf: {err}");
            err.exit_code()
        }
    }
}
