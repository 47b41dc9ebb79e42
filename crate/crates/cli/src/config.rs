//! The JSON run configuration and its resolution against command-line flags.
//!
//! Precedence, highest first: command-line flag, config file value, built-in
//! default. Without a `network` section the baseline at
//! β = 2, Q = 1, E = 10 is used.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sustain5g_core::keychain::RefreshPolicy;
use sustain5g_core::model::{NetworkConfig, OptimizationConstraints};
use sustain5g_core::sim::SimConfig;

use crate::error::{CliError, Result};
use crate::sweep::SweepSpec;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<OptimizationConstraints>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<RefreshPolicy>,
}

/// Simulation settings as written in the config. The seed may come from
/// `--seed` instead; one of the two is required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_unit_window")]
    pub unit_window: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_dwell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fs_window: Option<f64>,
    /// Q values for the message-growth comparison; empty skips it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q_sweep: Vec<u32>,
}

fn default_trials() -> u64 {
    100_000
}

fn default_horizon() -> f64 {
    100.0
}

fn default_unit_window() -> f64 {
    1.0
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            seed: None,
            trials: default_trials(),
            horizon: default_horizon(),
            unit_window: default_unit_window(),
            mean_dwell: None,
            fs_window: None,
            q_sweep: Vec::new(),
        }
    }
}

impl SimSection {
    pub fn resolve(&self, seed_flag: Option<u64>) -> Result<SimConfig> {
        let seed = seed_flag
            .or(self.seed)
            .ok_or_else(|| CliError::Config("a seed is required: pass --seed or set sim.seed".into()))?;
        let sim = SimConfig {
            seed,
            trials: self.trials,
            horizon: self.horizon,
            unit_window: self.unit_window,
            mean_dwell: self.mean_dwell,
            fs_window: self.fs_window,
        };
        sim.validate()?;
        Ok(sim)
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn network_or_default(&self) -> NetworkConfig {
        self.network.clone().unwrap_or_else(|| NetworkConfig::baseline(2.0, 1, 10))
    }

    pub fn network_or_error(&self) -> Result<NetworkConfig> {
        self.network
            .clone()
            .ok_or_else(|| CliError::Config("config has no \"network\" section".into()))
    }
}
