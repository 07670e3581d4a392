//! Episodes over time slots and parameter sweeps.
//!
//! Every slot of an episode predicts each user's range and angle, decides the
//! gesture state on the predicted height, sets the QoS targets, designs the
//! transmitter on channels built from the estimates, evaluates the design on
//! the true channels and finally applies the measurement update.

mod experiment;
mod output;

pub use experiment::{
    run_experiment, static_inputs, ExperimentKind, ExperimentRow, ExperimentSpec, ExperimentTable, TraceRow,
};
pub use output::{
    emit_episode_csv, emit_table_csv, emit_trace_csv, EPISODE_COLUMNS, TABLE_COLUMNS, TRACE_COLUMNS, WALL_TIME_COLUMN,
};

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{los_channel, reflection_channel, LosChannel, ReflectionChannel};
use crate::error::{IsacError, Result};
use crate::optimizer::{
    ao_solve, baseline_beam_only, baseline_power_only, AoConfig, SlotInputs, SlotSolution, SlotStatus,
};
use crate::scenario::{synth_measurement, KinematicTruth, Scenario};
use crate::signal::{comm_sinr, qos_threshold, sens_sinr, BeamSet, PowerSet, QosThresholds};
use crate::tracker::{
    detect_gesture, height_of, predict, update, Estimate, GestureState, NoiseModel, TrackState, TrackerConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Joint,
    PowerOnly,
    BeamOnly,
    /// Joint design with the QoS indicators frozen at their initial values.
    StaticNoAdapt,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Joint, Mode::PowerOnly, Mode::BeamOnly, Mode::StaticNoAdapt];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Joint => "joint",
            Mode::PowerOnly => "power_only",
            Mode::BeamOnly => "beam_only",
            Mode::StaticNoAdapt => "static_no_adapt",
        }
    }

    /// Solves one slot with the design this mode stands for.
    pub fn solve(self, inputs: &SlotInputs, ao: &AoConfig, warm: Option<&SlotSolution>) -> Result<SlotSolution> {
        match self {
            Mode::Joint | Mode::StaticNoAdapt => ao_solve(inputs, ao, warm),
            Mode::PowerOnly => baseline_power_only(inputs, ao),
            Mode::BeamOnly => baseline_beam_only(inputs, ao),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| IsacError::InvalidConfig(format!("unknown mode {s:?}")))
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunnerConfig {
    /// Power budget, watts.
    pub p_max: f64,
    pub qos: QosThresholds,
    /// Episodes stop once a predicted range exceeds this, meters.
    pub max_range: f64,
    /// Warm-start each slot from the previous feasible solution.
    pub warm_start: bool,
    pub ao: AoConfig,
    pub tracker: TrackerConfig,
}

impl Default for RunnerConfig {
    fn default() -> Self {
        Self {
            p_max: crate::dbm_to_watts(36.0),
            qos: QosThresholds::default(),
            max_range: 10.0,
            warm_start: false,
            ao: AoConfig::default(),
            tracker: TrackerConfig::default(),
        }
    }
}

/// Per-user part of a [`SlotRecord`].
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub truth: KinematicTruth,
    /// Posterior `(d, theta)` after the slot's measurement update.
    pub estimate: [f64; 2],
    pub est_height: f64,
    /// Height the gesture decision was based on.
    pub decision_height: f64,
    pub gesture: GestureState,
    pub delta: bool,
    pub gamma: f64,
    pub comm_sinr: f64,
    pub sens_sinr: f64,
}

#[derive(Debug, Clone)]
pub struct SlotRecord {
    pub slot: usize,
    pub users: Vec<UserRecord>,
    pub sum_sens_sinr: f64,
    /// Powers and beams actually transmitted in this slot.
    pub powers: PowerSet,
    pub beams: BeamSet,
    pub iterations: usize,
    pub status: SlotStatus,
    pub rank_one_qos_violation: bool,
    /// Seconds spent in the optimizer.
    pub wall_time: f64,
}

/// Tracking outcome of one user in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackStep {
    pub truth: KinematicTruth,
    pub predicted: Estimate,
    pub posterior: Estimate,
    pub gesture: GestureState,
    pub delta: bool,
    pub dh: f64,
}

/// EKF bank of one episode.
struct Tracking<'a> {
    scenario: &'a Scenario,
    config: TrackerConfig,
    noise: NoiseModel,
    states: Vec<TrackState>,
    frozen: bool,
    rng: ChaCha8Rng,
}

impl<'a> Tracking<'a> {
    fn new(scenario: &'a Scenario, config: TrackerConfig, frozen: bool, seed: u64) -> Result<Self> {
        let truth0 = scenario.truth_at(0)?;
        let states = truth0
            .iter()
            .zip(scenario.initial_delta())
            .map(|(t, &delta)| TrackState::new(t.distance, t.theta, &config, delta))
            .collect();
        let c = scenario.config();
        Ok(Self {
            scenario,
            config,
            noise: NoiseModel::new(&c.process_noise, &c.measurement_noise),
            states,
            frozen,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Prediction and gesture decision for `slot`; slot 0 uses the initial
    /// estimate as is.
    fn predict(&mut self, slot: usize) -> Result<Vec<(Estimate, f64)>> {
        if slot == 0 {
            return Ok(self.states.iter().map(|s| (Estimate { x: s.estimate, mse: s.mse }, 0.0)).collect());
        }
        let prev = self.scenario.truth_at(slot - 1)?;
        let dt = self.scenario.config().slot_duration;
        let mut out = Vec::with_capacity(self.states.len());
        for (state, truth) in self.states.iter_mut().zip(prev) {
            let pred = predict(state, truth.radial_velocity, truth.tangential_velocity, dt, &self.noise)?;
            let decision = detect_gesture(state, height_of(pred.x[0], pred.x[1]), self.config.eps_h, self.config.rule);
            let delta = state.delta;
            state.apply(&decision);
            if self.frozen {
                state.delta = delta;
            }
            out.push((pred, decision.dh));
        }
        Ok(out)
    }

    /// Measurement update for `slot`.
    fn update(&mut self, slot: usize, predicted: &[(Estimate, f64)]) -> Result<Vec<Estimate>> {
        if slot == 0 {
            return Ok(predicted.iter().map(|p| p.0).collect());
        }
        let truth = self.scenario.truth_at(slot)?;
        let mut out = Vec::with_capacity(self.states.len());
        for ((state, truth), (pred, _)) in self.states.iter_mut().zip(truth).zip(predicted) {
            let z = synth_measurement(truth, &self.scenario.config().measurement_noise, &mut self.rng);
            let post = update(pred, &z, &self.noise)?;
            state.estimate = post.x;
            state.mse = post.mse;
            out.push(post);
        }
        Ok(out)
    }
}

/// Tracking and gesture decisions only, for every slot of `scenario`.
/// The outer index is the slot, the inner the user.
pub fn run_tracking(scenario: &Scenario, config: &TrackerConfig, seed: u64) -> Result<Vec<Vec<TrackStep>>> {
    let mut tracking = Tracking::new(scenario, *config, false, seed)?;
    let mut out = Vec::with_capacity(scenario.num_slots());
    for slot in 0..scenario.num_slots() {
        let predicted = tracking.predict(slot)?;
        let posterior = tracking.update(slot, &predicted)?;
        let truth = scenario.truth_at(slot)?;
        out.push(
            (0..scenario.num_users())
                .map(|k| TrackStep {
                    truth: truth[k],
                    predicted: predicted[k].0,
                    posterior: posterior[k],
                    gesture: tracking.states[k].gesture,
                    delta: tracking.states[k].delta,
                    dh: predicted[k].1,
                })
                .collect(),
        );
    }
    Ok(out)
}

/// LoS and echo channels of every user at the given `(d, theta)` pairs.
pub fn channels_at(
    scenario: &Scenario,
    slot: usize,
    positions: &[(f64, f64)],
    truth: &[KinematicTruth],
) -> Result<(Vec<LosChannel>, Vec<ReflectionChannel>)> {
    let (prop, geom) = (scenario.propagation(), scenario.geometry());
    let time = slot as f64 * scenario.config().slot_duration;
    let mut los = Vec::with_capacity(positions.len());
    let mut echo = Vec::with_capacity(positions.len());
    for (k, &(d, theta)) in positions.iter().enumerate() {
        los.push(los_channel(prop, d, theta, geom)?);
        let rcs = scenario.config().users[k].rcs;
        echo.push(reflection_channel(prop, d, rcs, truth[k].radial_velocity, time, theta, geom)?);
    }
    Ok((los, echo))
}

/// Runs the full per-slot pipeline of `scenario` in `mode`. The measurement
/// noise stream is seeded with `seed`.
pub fn run_episode(scenario: &Scenario, mode: Mode, config: &RunnerConfig, seed: u64) -> Result<Vec<SlotRecord>> {
    run_episode_with(scenario, mode, config, seed, |_, _, _| {})
}

/// [`run_episode`] that also hands every slot's optimizer inputs and raw
/// solution to `inspect`.
pub fn run_episode_with<F>(
    scenario: &Scenario,
    mode: Mode,
    config: &RunnerConfig,
    seed: u64,
    mut inspect: F,
) -> Result<Vec<SlotRecord>>
where
    F: FnMut(usize, &SlotInputs, &SlotSolution),
{
    let c = scenario.config();
    let mut tracking = Tracking::new(scenario, config.tracker, mode == Mode::StaticNoAdapt, seed)?;
    let mut records = Vec::with_capacity(scenario.num_slots());
    let mut previous: Option<SlotSolution> = None;

    for slot in 0..scenario.num_slots() {
        let predicted = tracking.predict(slot)?;
        if let Some((k, p)) = predicted.iter().enumerate().find(|(_, p)| p.0.x[0] >= config.max_range) {
            log::info!("slot {slot}: user {k} left coverage at {:.3} m, stopping", p.0.x[0]);
            break;
        }
        let truth = scenario.truth_at(slot)?;
        let estimated: Vec<(f64, f64)> = predicted.iter().map(|p| (p.0.x[0], p.0.x[1])).collect();
        let (los, echo) = channels_at(scenario, slot, &estimated, truth)?;
        let gamma: Vec<f64> = tracking.states.iter().map(|s| qos_threshold(s.delta, &config.qos)).collect();
        let inputs = SlotInputs::from_channels(&los, &echo, gamma.clone(), config.p_max, c.comm_noise, c.sens_noise)?;

        let started = Instant::now();
        let warm = if config.warm_start { previous.as_ref() } else { None };
        let solution = mode.solve(&inputs, &config.ao, warm)?;
        let wall_time = started.elapsed().as_secs_f64();
        inspect(slot, &inputs, &solution);
        let status = solution.status;
        if !status.is_feasible() {
            log::warn!("slot {slot}: {mode} design {}, keeping the previous transmitter", status.as_str());
        }
        let (powers, beams) = match (&previous, status.is_feasible()) {
            (_, true) => (solution.powers.clone(), solution.beams.clone()),
            (Some(prev), false) => (prev.powers.clone(), prev.beams.clone()),
            (None, false) => {
                let steer = inputs.steering_beams()?;
                (PowerSet::proportional(inputs.num_users(), inputs.p_max), BeamSet::new(steer.clone(), steer)?)
            }
        };

        let truth_pos: Vec<(f64, f64)> = truth.iter().map(|t| (t.distance, t.theta)).collect();
        let (los_true, echo_true) = channels_at(scenario, slot, &truth_pos, truth)?;
        let posterior = tracking.update(slot, &predicted)?;
        let users: Vec<UserRecord> = (0..scenario.num_users())
            .map(|k| {
                let s = &tracking.states[k];
                UserRecord {
                    truth: truth[k],
                    estimate: [posterior[k].x[0], posterior[k].x[1]],
                    est_height: height_of(posterior[k].x[0], posterior[k].x[1]),
                    decision_height: height_of(predicted[k].0.x[0], predicted[k].0.x[1]),
                    gesture: s.gesture,
                    delta: s.delta,
                    gamma: gamma[k],
                    comm_sinr: comm_sinr(k, &los_true[k].h, &beams, &powers, c.comm_noise),
                    sens_sinr: sens_sinr(k, &echo_true[k].g, &beams, &powers, c.sens_noise),
                }
            })
            .collect();
        records.push(SlotRecord {
            slot,
            sum_sens_sinr: users.iter().map(|u| u.sens_sinr).sum(),
            users,
            powers,
            beams,
            iterations: solution.iterations,
            status,
            rank_one_qos_violation: solution.rank_one_qos_violation,
            wall_time,
        });
        if status.is_feasible() {
            previous = Some(solution);
        }
    }
    Ok(records)
}

/// True if any slot reported an internal error.
pub fn has_internal_error(records: &[SlotRecord]) -> bool {
    records.iter().any(|r| r.status == SlotStatus::InternalError)
}

#[cfg(test)]
mod tests;
