//! TOML configuration file.
//!
//! ```toml
//! [scenario]          # ScenarioConfig, SI units
//! num_antennas = 12
//!
//! [run]
//! p_max_dbm = 36.0
//!
//! [optimizer]         # AoConfig
//! [tracker]           # TrackerConfig
//!
//! [experiment]        # ExperimentSpec, used by `sweep`
//! kind = "static_pmax_sweep"
//! axis = [30.0, 32.0, 34.0, 36.0, 38.0]
//! modes = ["joint", "power_only"]
//! ```
//!
//! Every section and key is optional and falls back to the defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::optimizer::AoConfig;
use crate::runner::{ExperimentKind, ExperimentSpec, Mode, RunnerConfig};
use crate::scenario::ScenarioConfig;
use crate::signal::QosThresholds;
use crate::tracker::TrackerConfig;

const DEFAULT_P_MAX_DBM: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub p_max_dbm: f64,
    pub qos: QosThresholds,
    /// Coverage radius, meters.
    pub max_range: f64,
    pub warm_start: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        let r = RunnerConfig::default();
        Self { p_max_dbm: DEFAULT_P_MAX_DBM, qos: r.qos, max_range: r.max_range, warm_start: r.warm_start }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: ScenarioConfig,
    pub run: RunSection,
    pub optimizer: AoConfig,
    pub tracker: TrackerConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSpec>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| IsacError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| IsacError::InvalidConfig(e.to_string()))
    }

    pub fn runner(&self) -> RunnerConfig {
        RunnerConfig {
            p_max: crate::dbm_to_watts(self.run.p_max_dbm),
            qos: self.run.qos,
            max_range: self.run.max_range,
            warm_start: self.run.warm_start,
            ao: self.optimizer,
            tracker: self.tracker,
        }
    }

    /// Configuration written by `isac defaults`: every default plus an
    /// example experiment.
    pub fn example() -> Self {
        Self {
            experiment: Some(ExperimentSpec {
                kind: ExperimentKind::StaticPmaxSweep,
                axis: vec![30.0, 32.0, 34.0, 36.0, 38.0],
                modes: vec![Mode::Joint, Mode::PowerOnly],
                seeds: vec![0],
                static_delta: None,
            }),
            ..Self::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = FileConfig::parse("").unwrap();
        assert_eq!(c, FileConfig::default());
        assert!((c.runner().p_max - crate::dbm_to_watts(36.0)).abs() < 1e-12);
    }

    #[test]
    fn example_round_trips() {
        let c = FileConfig::example();
        let text = c.to_toml().unwrap();
        assert_eq!(FileConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn partial_sections_override_defaults() {
        let c = FileConfig::parse(
            "[scenario]\nnum_antennas = 8\n[run]\np_max_dbm = 30.0\n[optimizer]\nmax_iters = 5\n[optimizer.solver]\ngap_tol = 1e-8\n",
        )
        .unwrap();
        assert_eq!(c.scenario.num_antennas, 8);
        assert_eq!(c.scenario.users.len(), 4);
        assert_eq!(c.optimizer.max_iters, 5);
        assert_eq!(c.optimizer.solver.gap_tol, 1e-8);
        assert_eq!(c.optimizer.solver.feas_tol, AoConfig::default().solver.feas_tol);
        assert!((c.runner().p_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(FileConfig::parse("[run]\npmax = 3\n").is_err());
    }
}
