//! `manifest.json`: the effective configuration plus its hash. Running the
//! embedded configuration again reproduces every CSV.

use std::fs;
use std::path::Path;

use mmnoma_core::engine::Algorithm;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub loads_mbps: Vec<f64>,
    pub users: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub runs: usize,
    pub failed_runs: usize,
    pub config: ExperimentConfig,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    Sha256::digest(cfg.canonical_json().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, runs: usize, failed_runs: usize) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config_hash(cfg),
            seeds: cfg.seeds(),
            loads_mbps: cfg.experiment.loads_mbps.clone(),
            users: cfg.experiment.users.clone(),
            algorithms: cfg.experiment.algorithms.clone(),
            runs,
            failed_runs,
            config: cfg.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(io_err(path))
    }

    /// Reads a manifest and checks the embedded configuration against its hash.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        let m: Manifest = serde_json::from_str(&text)?;
        m.config.validate()?;
        let actual = config_hash(&m.config);
        if actual != m.config_sha256 {
            return Err(CliError::Parse(format!(
                "manifest config hash mismatch: recorded {}, computed {actual}",
                m.config_sha256
            )));
        }
        Ok(m)
    }
}
