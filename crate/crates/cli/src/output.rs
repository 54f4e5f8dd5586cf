//! Serialized artifact writing and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files below one output directory and records their checksums.
pub struct OutputWriter {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutputWriter {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::io("output", format!("cannot create {}: {e}", root.display())))?;
        Ok(OutputWriter { root: root.to_path_buf(), files: BTreeMap::new() })
    }

    /// Writes `bytes` to `relative` (with `/` separators), creating parent
    /// directories.
    pub fn write(&mut self, relative: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let bytes = bytes.as_ref();
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::io("output", format!("cannot create {}: {e}", parent.display())))?;
        }
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::io("output", format!("cannot write {}: {e}", path.display())))?;
        self.files.insert(relative.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&mut self, relative: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::numeric("output", format!("cannot serialize {relative}: {e}")))?;
        text.push('\n');
        self.write(relative, text)
    }

    /// Writes `manifest.json`, which lists every file written before it.
    pub fn finish(mut self, command: &str, config: &RunConfig, input: Option<InputRecord>) -> Result<(), CliError> {
        let config_value = serde_json::to_value(config)
            .map_err(|e| CliError::numeric("output", format!("cannot serialize config: {e}")))?;
        let manifest = Manifest {
            command: command.to_string(),
            seed: config.seed,
            versions: Versions {
                psynet: psynet::VERSION.to_string(),
                psynet_cli: env!("CARGO_PKG_VERSION").to_string(),
            },
            config: config_value,
            input,
            outputs: self.files.clone(),
        };
        self.write_json("manifest.json", &manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

impl InputRecord {
    pub fn of_bytes(path: &Path, bytes: &[u8]) -> Self {
        InputRecord { path: path.display().to_string(), sha256: sha256_hex(bytes) }
    }
}

#[derive(Debug, Serialize)]
struct Versions {
    psynet: String,
    psynet_cli: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    seed: u64,
    versions: Versions,
    config: serde_json::Value,
    input: Option<InputRecord>,
    /// Relative path to sha256 of every artifact of the run.
    outputs: BTreeMap<String, String>,
}
