//! Subcommands. Each reads the run configuration, computes its results
//! (in parallel where the core allows) and writes artifacts in a fixed order.

mod ggm;
mod gimme;
mod gvar;
mod idio;
mod ising;
mod mlvar;
mod recurrence;
mod simulate;

use std::path::Path;

use nalgebra::DMatrix;
use psynet::dataset::{preprocess, read_ild, IldDataset, PreprocessOptions};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{InputRecord, OutputWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ising,
    Ggm,
    Gvar,
    Mlvar,
    Gimme,
    Idio,
    Rqa,
    Rn,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ising => "ising",
            Command::Ggm => "ggm",
            Command::Gvar => "gvar",
            Command::Mlvar => "mlvar",
            Command::Gimme => "gimme",
            Command::Idio => "idio",
            Command::Rqa => "rqa",
            Command::Rn => "rn",
            Command::Simulate => "simulate",
        }
    }
}

/// Runs one subcommand and writes its manifest last.
pub fn run(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    let mut out = OutputWriter::create(&cfg.output_dir)?;
    let input = match command {
        Command::Ising => ising::run(cfg, &mut out)?,
        Command::Ggm => ggm::run(cfg, &mut out)?,
        Command::Gvar => gvar::run(cfg, &mut out)?,
        Command::Mlvar => mlvar::run(cfg, &mut out)?,
        Command::Gimme => gimme::run(cfg, &mut out)?,
        Command::Idio => idio::run(cfg, &mut out)?,
        Command::Rqa => recurrence::run_rqa(cfg, &mut out)?,
        Command::Rn => recurrence::run_rn(cfg, &mut out)?,
        Command::Simulate => simulate::run(cfg, &mut out)?,
    };
    out.finish(command.name(), cfg, input)
}

/// Reads the configured input CSV and records its checksum.
pub(crate) fn load_input(cfg: &RunConfig) -> Result<(IldDataset, InputRecord), CliError> {
    let input = cfg.input()?;
    let bytes = read_file(&input.path)?;
    let record = InputRecord::of_bytes(&input.path, &bytes);
    let data = read_ild(bytes.as_slice(), &input.schema())?;
    Ok((data, record))
}

/// Input after the configured preprocessing.
pub(crate) fn load_preprocessed(
    cfg: &RunConfig,
    opts: &PreprocessOptions,
) -> Result<(IldDataset, InputRecord), CliError> {
    let (raw, record) = load_input(cfg)?;
    Ok((preprocess(&raw, opts)?, record))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io("input", format!("cannot read {}: {e}", path.display())))
}

/// Reads and parses a JSON parameter file.
pub(crate) fn read_json<T: serde::de::DeserializeOwned>(
    path: &Path,
    context: &str,
) -> Result<(T, InputRecord), CliError> {
    let bytes = read_file(path)?;
    let value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::validation(context, format!("{}: {e}", path.display())))?;
    Ok((value, InputRecord::of_bytes(path, &bytes)))
}

/// Directory name of the `k`-th person: zero-padded index plus the id with
/// characters outside `[A-Za-z0-9_-]` replaced, so ids never collide or
/// escape the output directory.
pub(crate) fn person_dir(k: usize, id: &str) -> String {
    let clean: String =
        id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    format!("persons/{k:03}_{clean}")
}

/// Directory name of a group label, sanitized like person ids.
pub(crate) fn group_dir(k: usize, label: &str) -> String {
    let clean: String =
        label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    format!("groups/{k:02}_{clean}")
}

pub(crate) fn node_labels(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("x{i}")).collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    psynet::linalg::from_rows(rows)
        .ok_or_else(|| CliError::validation("config", format!("{what} must be a non-ragged matrix")))
}
