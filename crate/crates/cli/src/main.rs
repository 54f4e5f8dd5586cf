//! `psynet`: batch front end for the network-psychometrics toolkit.
//!
//! Every run reads an optional TOML configuration (`--config`), applies the
//! command-line overrides and writes its artifacts plus `manifest.json` to
//! the output directory. Exit codes: 0 success, 1 file I/O failure,
//! 2 invalid configuration or input, 3 numerical failure. Errors are printed
//! to stderr as one line of JSON.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Command;
use config::{InputConfig, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "psynet",
    version,
    about = "Network psychometrics: Ising, GGM, VAR, GIMME, idiographic and recurrence models"
)]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Input CSV (overrides `input.path`).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Comma-separated item columns (overrides `input.items`).
    #[arg(long, global = true, value_delimiter = ',')]
    items: Option<Vec<String>>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Fit or load an Ising model and check its MIRT representation.
    Ising,
    /// Partial-correlation network of a covariance matrix.
    Ggm,
    /// Per-person graphical VAR.
    Gvar,
    /// Multilevel VAR: temporal, contemporaneous and between-person networks.
    Mlvar,
    /// GIMME group, subgroup and individual structures.
    Gimme,
    /// Marginal distribution of the encompassing idiographic model.
    Idio,
    /// Recurrence plots and quantification.
    Rqa,
    /// Recurrence networks.
    Rn,
    /// Synthetic data from a known gVAR or uSEM.
    Simulate,
    /// Print the effective configuration as TOML.
    Config,
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.output {
        cfg.output_dir = dir.clone();
    }
    if cli.input.is_some() || cli.items.is_some() {
        let mut input = cfg.input.take().unwrap_or_else(|| InputConfig {
            path: PathBuf::new(),
            id: "id".into(),
            day: "day".into(),
            beep: "beep".into(),
            items: Vec::new(),
            group: None,
            delimiter: ',',
        });
        if let Some(path) = &cli.input {
            input.path = path.clone();
        }
        if let Some(items) = &cli.items {
            input.items = items.clone();
        }
        if input.path.as_os_str().is_empty() || input.items.is_empty() {
            return Err(CliError::validation("config", "input needs both a path and at least one item"));
        }
        cfg.input = Some(input);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    let command = match cli.command {
        Sub::Ising => Command::Ising,
        Sub::Ggm => Command::Ggm,
        Sub::Gvar => Command::Gvar,
        Sub::Mlvar => Command::Mlvar,
        Sub::Gimme => Command::Gimme,
        Sub::Idio => Command::Idio,
        Sub::Rqa => Command::Rqa,
        Sub::Rn => Command::Rn,
        Sub::Simulate => Command::Simulate,
        Sub::Config => {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
    };
    commands::run(command, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
