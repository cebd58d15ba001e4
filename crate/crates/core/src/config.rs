//! Aggregate simulator configuration. Every field has a default, so an empty
//! override set describes the reference two-cell scenario.

use crate::agent::AgentConfig;
use crate::deployment::DeploymentConfig;
use crate::error::{Error, Result};
use crate::interference::InterferenceConfig;
use crate::mac::{HarqConfig, TrafficConfig};
use crate::noma::NomaConfig;
use crate::phy::PhyConfig;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SimulationConfig {
    pub ttis: u32,
    pub tti_duration_ms: f64,
    /// Fixed user count; when unset the PCP draws it.
    pub num_users: Option<usize>,
    pub runs: usize,
    pub confidence_level: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            ttis: 4000,
            tti_duration_ms: 0.1429,
            num_users: Some(9),
            runs: 40,
            confidence_level: 0.95,
        }
    }
}

impl SimulationConfig {
    pub fn tti_s(&self) -> f64 {
        self.tti_duration_ms * 1e-3
    }

    pub fn validate(&self) -> Result<()> {
        if self.ttis == 0 {
            return Err(Error::invalid("simulation.ttis", "must be at least 1"));
        }
        if !(self.tti_duration_ms > 0.0 && self.tti_duration_ms.is_finite()) {
            return Err(Error::invalid("simulation.tti_duration_ms", "must be positive"));
        }
        if self.num_users == Some(0) {
            return Err(Error::invalid("simulation.num_users", "must be at least 1"));
        }
        if self.runs == 0 {
            return Err(Error::invalid("simulation.runs", "must be at least 1"));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::invalid("simulation.confidence_level", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SimConfig {
    pub phy: PhyConfig,
    pub harq: HarqConfig,
    pub deployment: DeploymentConfig,
    pub traffic: TrafficConfig,
    pub qlearning: AgentConfig,
    pub noma: NomaConfig,
    pub interference: InterferenceConfig,
    pub simulation: SimulationConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.phy.validate()?;
        self.harq.validate()?;
        self.deployment.validate()?;
        self.traffic.validate()?;
        self.qlearning.validate()?;
        self.noma.validate()?;
        self.simulation.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ActionSpace;
    use alloc::vec;

    #[test]
    fn defaults_describe_reference_scenario() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.phy.bandwidth_hz, 20e6);
        assert_eq!(c.phy.carrier_frequency_hz, 30e9);
        assert_eq!(c.simulation.ttis, 4000);
        assert_eq!(c.simulation.runs, 40);
        assert_eq!(c.harq.processes, 6);
        assert_eq!(c.traffic.packet_size_bytes, 32);
    }

    #[test]
    fn bad_exploration_names_the_key() {
        let mut c = SimConfig::default();
        c.qlearning.exploration = 1.5;
        let msg = alloc::format!("{}", c.validate().unwrap_err());
        assert!(msg.contains("exploration"), "{msg}");
    }

    #[test]
    fn three_power_levels_shrink_the_action_space() {
        let mut c = SimConfig::default();
        c.qlearning.power_levels_dbm = vec![0.0, 4.0, 8.0];
        c.validate().unwrap();
        let space = ActionSpace {
            num_assoc: 2,
            num_levels: c.qlearning.power_levels_dbm.len(),
            num_beams: c.deployment.beams_per_gnb,
        };
        assert_eq!(space.size(), 36);
    }
}
