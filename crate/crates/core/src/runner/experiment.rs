use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_episode, Mode, RunnerConfig};
use crate::error::{IsacError, Result};
use crate::optimizer::{SlotInputs, SlotStatus};
use crate::scenario::{build_scenario, ScenarioConfig};
use crate::signal::qos_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Fixed geometry, axis is the power budget in dBm.
    StaticPmaxSweep,
    /// Fixed geometry, axis is the number of antennas.
    StaticMSweep,
    /// Full episode per axis value, axis is the power budget in dBm.
    DynamicEpisode,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::StaticPmaxSweep => "static_pmax_sweep",
            ExperimentKind::StaticMSweep => "static_m_sweep",
            ExperimentKind::DynamicEpisode => "dynamic_episode",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub axis: Vec<f64>,
    pub modes: Vec<Mode>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// QoS indicators of the static experiments; defaults to the first user
    /// demanding high QoS and the others low.
    #[serde(default)]
    pub static_delta: Option<Vec<bool>>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axis.is_empty() || self.axis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(IsacError::InvalidConfig("axis values must be non-empty and strictly increasing".into()));
        }
        if self.modes.is_empty() || self.seeds.is_empty() {
            return Err(IsacError::InvalidConfig("an experiment needs at least one mode and one seed".into()));
        }
        if self.axis.iter().any(|v| !v.is_finite()) {
            return Err(IsacError::InvalidConfig("axis values must be finite".into()));
        }
        if self.kind == ExperimentKind::StaticMSweep && self.axis.iter().any(|&m| !(m >= 1.0 && m.fract() == 0.0)) {
            return Err(IsacError::InvalidConfig("antenna counts must be positive integers".into()));
        }
        Ok(())
    }
}

/// One `(axis value, mode, seed)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub kind: ExperimentKind,
    pub axis: f64,
    pub mode: Mode,
    pub seed: u64,
    /// Worst status over the point's slots.
    pub status: SlotStatus,
    /// Sum sensing SINR of the last slot.
    pub sum_sens_sinr: f64,
    /// Sum sensing SINR averaged over slots.
    pub mean_sum_sens_sinr: f64,
    /// Same as `sum_sens_sinr` with the relaxed (lifted) beamformers.
    pub sum_sens_sinr_lifted: f64,
    pub iterations: usize,
    pub feasible_slots: usize,
    pub num_slots: usize,
    pub rank_one_qos_violation: bool,
}

/// Per-slot sum sensing SINR of a dynamic point.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub axis: f64,
    pub mode: Mode,
    pub seed: u64,
    pub slot: usize,
    pub sum_sens_sinr: f64,
    pub status: SlotStatus,
    /// Number of users with a high QoS demand.
    pub high_qos_users: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
    pub traces: Vec<TraceRow>,
}

fn severity(s: SlotStatus) -> u8 {
    match s {
        SlotStatus::Optimal => 0,
        SlotStatus::MaxIters => 1,
        SlotStatus::Infeasible => 2,
        SlotStatus::InternalError => 3,
    }
}

/// Slot inputs of the static experiments: every user at the midpoint
/// between the two gesture heights, no motion, fixed QoS indicators.
pub fn static_inputs(base: &ScenarioConfig, runner: &RunnerConfig, delta: &[bool]) -> Result<SlotInputs> {
    if delta.len() != base.users.len() {
        return Err(IsacError::DimensionMismatch(format!(
            "{} QoS indicators for {} users",
            delta.len(),
            base.users.len()
        )));
    }
    let mut config = base.clone();
    let mid = 0.5 * (config.h_pick + config.h_put);
    for (u, &d) in config.users.iter_mut().zip(delta) {
        u.position[2] = mid;
        u.gestures.clear();
        u.initial_delta = Some(d);
    }
    config.num_slots = 1;
    let scenario = build_scenario(config)?;
    let truth = scenario.truth_at(0)?;
    let positions: Vec<(f64, f64)> = truth.iter().map(|t| (t.distance, t.theta)).collect();
    let (los, echo) = super::channels_at(&scenario, 0, &positions, truth)?;
    let gamma = delta.iter().map(|&d| qos_threshold(d, &runner.qos)).collect();
    SlotInputs::from_channels(&los, &echo, gamma, runner.p_max, base.comm_noise, base.sens_noise)
}

fn default_delta(k: usize) -> Vec<bool> {
    (0..k).map(|i| i == 0).collect()
}

fn run_point(
    spec: &ExperimentSpec,
    base: &ScenarioConfig,
    runner: &RunnerConfig,
    axis: f64,
    mode: Mode,
    seed: u64,
) -> Result<(ExperimentRow, Vec<TraceRow>)> {
    let mut runner = *runner;
    let mut config = base.clone();
    match spec.kind {
        ExperimentKind::StaticPmaxSweep | ExperimentKind::DynamicEpisode => runner.p_max = crate::dbm_to_watts(axis),
        ExperimentKind::StaticMSweep => config.num_antennas = axis as usize,
    }
    config.seed = seed;
    let mut row = ExperimentRow {
        kind: spec.kind,
        axis,
        mode,
        seed,
        status: SlotStatus::Optimal,
        sum_sens_sinr: f64::NAN,
        mean_sum_sens_sinr: f64::NAN,
        sum_sens_sinr_lifted: f64::NAN,
        iterations: 0,
        feasible_slots: 0,
        num_slots: 0,
        rank_one_qos_violation: false,
    };
    if spec.kind != ExperimentKind::DynamicEpisode {
        let delta = spec.static_delta.clone().unwrap_or_else(|| default_delta(config.users.len()));
        let inputs = static_inputs(&config, &runner, &delta)?;
        let sol = mode.solve(&inputs, &runner.ao, None)?;
        row.status = sol.status;
        row.sum_sens_sinr = sol.sum_sens_sinr();
        row.mean_sum_sens_sinr = row.sum_sens_sinr;
        row.sum_sens_sinr_lifted = sol.sum_sens_sinr_lifted();
        row.iterations = sol.iterations;
        row.feasible_slots = usize::from(sol.status.is_feasible());
        row.num_slots = 1;
        row.rank_one_qos_violation = sol.rank_one_qos_violation;
        return Ok((row, Vec::new()));
    }

    let scenario = build_scenario(config)?;
    let records = run_episode(&scenario, mode, &runner, seed)?;
    let traces: Vec<TraceRow> = records
        .iter()
        .map(|r| TraceRow {
            axis,
            mode,
            seed,
            slot: r.slot,
            sum_sens_sinr: r.sum_sens_sinr,
            status: r.status,
            high_qos_users: r.users.iter().filter(|u| u.delta).count(),
        })
        .collect();
    row.num_slots = records.len();
    row.feasible_slots = records.iter().filter(|r| r.status.is_feasible()).count();
    row.iterations = records.iter().map(|r| r.iterations).sum();
    row.status = records.iter().map(|r| r.status).max_by_key(|&s| severity(s)).unwrap_or(SlotStatus::Optimal);
    row.rank_one_qos_violation = records.iter().any(|r| r.rank_one_qos_violation);
    if let Some(last) = records.last() {
        row.sum_sens_sinr = last.sum_sens_sinr;
        row.mean_sum_sens_sinr = records.iter().map(|r| r.sum_sens_sinr).sum::<f64>() / records.len() as f64;
    }
    Ok((row, traces))
}

/// Runs every `(axis value, mode, seed)` point of `spec` in parallel. Rows
/// come back ordered by axis value, then mode, then seed.
pub fn run_experiment(spec: &ExperimentSpec, base: &ScenarioConfig, runner: &RunnerConfig) -> Result<ExperimentTable> {
    spec.validate()?;
    let jobs: Vec<(f64, Mode, u64)> = spec
        .axis
        .iter()
        .flat_map(|&a| spec.modes.iter().flat_map(move |&m| spec.seeds.iter().map(move |&s| (a, m, s))))
        .collect();
    let results: Vec<Result<(ExperimentRow, Vec<TraceRow>)>> =
        jobs.par_iter().map(|&(a, m, s)| run_point(spec, base, runner, a, m, s)).collect();
    let mut table = ExperimentTable::default();
    for r in results {
        let (row, traces) = r?;
        table.rows.push(row);
        table.traces.extend(traces);
    }
    Ok(table)
}
