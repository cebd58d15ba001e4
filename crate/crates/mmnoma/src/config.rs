//! TOML experiment files. Sections mirror the simulator configuration, plus
//! an `[experiment]` section describing the sweep. Every key is optional;
//! unknown keys are rejected.

use std::path::Path;

use mmnoma_core::agent::AgentConfig;
use mmnoma_core::config::SimulationConfig;
use mmnoma_core::deployment::DeploymentConfig;
use mmnoma_core::engine::Algorithm;
use mmnoma_core::interference::InterferenceConfig;
use mmnoma_core::mac::{HarqConfig, TrafficConfig};
use mmnoma_core::noma::NomaConfig;
use mmnoma_core::phy::PhyConfig;
use mmnoma_core::SimConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// Offered loads for the load sweep, run at `simulation.num_users` users.
    pub loads_mbps: Vec<f64>,
    /// User counts for the user sweep; empty disables it.
    pub users: Vec<usize>,
    pub users_sweep_load_mbps: f64,
    pub algorithms: Vec<Algorithm>,
    /// Seeds are `base_seed, base_seed + 1, ...` unless `seeds` is given.
    pub base_seed: u64,
    pub seeds: Option<Vec<u64>>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            loads_mbps: vec![0.5, 1.0, 2.0, 4.0],
            users: Vec::new(),
            users_sweep_load_mbps: 0.5,
            algorithms: vec![Algorithm::QLearning, Algorithm::Upa],
            base_seed: 1,
            seeds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phy: PhyConfig,
    pub harq: HarqConfig,
    pub deployment: DeploymentConfig,
    pub traffic: TrafficConfig,
    pub qlearning: AgentConfig,
    pub noma: NomaConfig,
    pub interference: InterferenceConfig,
    pub simulation: SimulationConfig,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn sim(&self) -> SimConfig {
        SimConfig {
            phy: self.phy.clone(),
            harq: self.harq.clone(),
            deployment: self.deployment.clone(),
            traffic: self.traffic.clone(),
            qlearning: self.qlearning.clone(),
            noma: self.noma.clone(),
            interference: self.interference.clone(),
            simulation: self.simulation.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim().validate()?;
        let e = &self.experiment;
        if e.loads_mbps.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(invalid("experiment.loads_mbps", "loads must be finite and non-negative"));
        }
        if e.users.contains(&0) {
            return Err(invalid("experiment.users", "user counts must be positive"));
        }
        if !(e.users_sweep_load_mbps.is_finite() && e.users_sweep_load_mbps >= 0.0) {
            return Err(invalid("experiment.users_sweep_load_mbps", "must be finite and non-negative"));
        }
        if e.algorithms.is_empty() {
            return Err(invalid("experiment.algorithms", "must name at least one algorithm"));
        }
        if matches!(&e.seeds, Some(s) if s.is_empty()) {
            return Err(invalid("experiment.seeds", "must not be empty when given"));
        }
        Ok(())
    }

    /// Seeds for this experiment: the explicit list, or `simulation.runs`
    /// consecutive seeds from `base_seed`.
    pub fn seeds(&self) -> Vec<u64> {
        match &self.experiment.seeds {
            Some(s) => s.clone(),
            None => (0..self.simulation.runs as u64).map(|i| self.experiment.base_seed + i).collect(),
        }
    }

    /// Canonical JSON rendering. Unlike TOML it can express unset options,
    /// so it identifies the configuration exactly.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes to JSON")
    }
}

fn invalid(key: &str, reason: &str) -> CliError {
    CliError::Config(mmnoma_core::Error::invalid(key, reason))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
