#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::Format;

/// Low-rank plus sparse video decomposition with nonconvex ADMM.
#[derive(Debug, Parser)]
#[command(name = "ncxadmm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the config-driven commands.
#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed of generated data.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides the output format of the config.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scene: D, S_true and a manifest.
    Synth(RunArgs),
    /// Run the configured solvers on one problem.
    Solve(RunArgs),
    /// Sweep penalties, μ and τ; write result and profile tables.
    Compare(RunArgs),
    /// Turn a problems × solvers table into performance profile series.
    Profile {
        /// Table written by `compare` (e.g. iterations.csv).
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        nu_max: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::NotConverged(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ncxadmm::Error> for CliError {
    fn from(e: ncxadmm::Error) -> Self {
        use ncxadmm::Error as E;
        match e {
            E::CgNotConverged { .. } => CliError::NotConverged(e.to_string()),
            E::Io(_) | E::Format(_) => CliError::Io(e.to_string()),
            E::Shape { .. } | E::Domain(_) | E::UnsupportedPsf { .. } | E::Unsupported(_) => {
                CliError::Config(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("NCXADMM_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Profile {
            table,
            nu_max,
            points,
            out,
        } => commands::profile(&table, nu_max, points, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ncxadmm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
