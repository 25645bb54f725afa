//! `hsm`: run identity checks, exact quadrature, Monte Carlo decay measurements
//! and bound tables from a TOML experiment file.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Sink;
use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "hsm", version, about = "Numerical lab for the H^(2|2) sigma model in t-field form")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Machine-check the exact identities and inequalities.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Seed of the randomized instances (default: run.seed, or 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Skip the quadrature-based checks.
        #[arg(long)]
        no_quadrature: bool,
    },
    /// Partition function and expectations by quadrature (at most 4 sites).
    Exact {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo decay profile compared against the envelope.
    Sample {
        #[command(flatten)]
        common: Common,
    },
    /// Tables of I_beta, r, beta_c and the localization condition.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set run.seed=7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides output.directory).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<Option<ExperimentConfig>, CliError> {
        match &self.config {
            Some(path) => config::load(path, &self.overrides).map(Some),
            None if !self.overrides.is_empty() => Err(CliError::Validation("--set needs --config".into())),
            None => Ok(None),
        }
    }

    fn require(&self) -> Result<ExperimentConfig, CliError> {
        self.load()?.ok_or_else(|| CliError::Validation("this command needs --config".into()))
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Verify { common, seed, no_quadrature } => {
            let config = common.load()?;
            commands::verify(config.as_ref(), seed, !no_quadrature, &Sink::new(config.as_ref(), common.out))
        }
        Command::Exact { common } => {
            let config = common.require()?;
            commands::exact(&config, &Sink::new(Some(&config), common.out))
        }
        Command::Sample { common } => {
            let config = common.require()?;
            commands::sample(&config, &Sink::new(Some(&config), common.out))
        }
        Command::Bounds { common } => {
            let config = common.load()?;
            commands::bounds(config.as_ref(), &Sink::new(config.as_ref(), common.out))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
