//! Command-line front end for the equilibrium engine and the fund-evaluation
//! pipeline.
//!
//! Subcommands map one-to-one onto pipeline stages: `simulate-table1` emits
//! the noise/asymmetry simulation grid with its Monte-Carlo verification,
//! `estimate-proxy` turns a daily stock panel into per-stock informativeness
//! estimates, `build-uirp` assembles the reference portfolio, `evaluate` fits
//! the performance models, and `synth` generates seeded synthetic inputs for
//! the whole chain. Every run writes a `run_meta.json` with the resolved
//! configuration hash so outputs are reproducible byte for byte.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Configuration or usage problems exit with 2, runtime failures with 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(anyhow::Error),
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "uirp",
    about = "Grossman-Stiglitz equilibrium grid and uninformed-investor reference-portfolio pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone, Default)]
struct CommonArgs {
    /// JSON configuration file (flags override its values).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Informativeness variant override.
    #[arg(long, global = true, value_parser = ["cond_u", "cond_n", "cond_n_plus_u"])]
    variant: Option<String>,
    /// Enter the reference portfolio net of the risk-free rate.
    #[arg(long, global = true)]
    uirp_excess: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the simulation grid and its Monte-Carlo verification report.
    SimulateTable1 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Estimate per-stock informativeness from a daily stock panel.
    EstimateProxy {
        #[command(flatten)]
        common: CommonArgs,
        /// Stock panel CSV (overrides the config's `stocks`).
        #[arg(long)]
        stocks: Option<PathBuf>,
    },
    /// Build the monthly reference portfolio from a panel and R² file.
    BuildUirp {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        stocks: Option<PathBuf>,
        /// Informativeness CSV from estimate-proxy (overrides config `r2`).
        #[arg(long)]
        r2: Option<PathBuf>,
    },
    /// Fit performance models for fund portfolios.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        funds: Option<PathBuf>,
        #[arg(long)]
        factors: Option<PathBuf>,
        #[arg(long)]
        uirp: Option<PathBuf>,
    },
    /// Generate seeded synthetic stock/fund/factor panels.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SimulateTable1 { common } => commands::simulate::run(&common),
        Command::EstimateProxy { common, stocks } => commands::estimate::run(&common, stocks),
        Command::BuildUirp { common, stocks, r2 } => commands::build_uirp::run(&common, stocks, r2),
        Command::Evaluate {
            common,
            funds,
            factors,
            uirp,
        } => commands::evaluate::run(&common, funds, factors, uirp),
        Command::Synth { common } => commands::synth::run(&common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
