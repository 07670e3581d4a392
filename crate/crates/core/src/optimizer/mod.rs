//! Per-slot joint power and beamforming design.
//!
//! The sum of sensing SINRs is maximised under the power budget and the
//! per-user communication SINR requirements. Each ratio is replaced by its
//! quadratic transform `2 t sqrt(A) - t^2 B`, and the problem is solved by
//! alternating between the closed-form `t`, the beamforming matrices
//! (semidefinite relaxation) and the powers.

mod steps;

pub use steps::{
    beamforming_problem, beamforming_step, comm_sinrs, fp_objective, power_problem, power_step, scaled_problem,
    scaled_step, sens_sinrs, sum_ratio, update_t, BeamStep, ScaledStep,
};

use serde::{Deserialize, Serialize};

use crate::channel::{LosChannel, ReflectionChannel};
use crate::error::{IsacError, Result};
use crate::linalg::{normalized, outer, quad_form, CMatrix, CVector};
use crate::signal::{BeamSet, PowerSet};
use crate::solver::{principal_component, reduce_rank, SolveReport, SolveStatus, Tolerances};

/// Channel state and requirements of one slot.
#[derive(Debug, Clone)]
pub struct SlotInputs {
    /// LoS channels `h_k`.
    pub los: Vec<CVector>,
    /// Echo Gram matrices `G_k^H G_k`.
    pub grams: Vec<CMatrix>,
    /// Required communication SINR per user.
    pub gamma: Vec<f64>,
    pub p_max: f64,
    pub comm_noise: f64,
    pub sens_noise: f64,
}

impl SlotInputs {
    pub fn new(
        los: Vec<CVector>,
        grams: Vec<CMatrix>,
        gamma: Vec<f64>,
        p_max: f64,
        comm_noise: f64,
        sens_noise: f64,
    ) -> Result<Self> {
        let k = los.len();
        if k == 0 || grams.len() != k || gamma.len() != k {
            return Err(IsacError::DimensionMismatch(format!(
                "{k} LoS channels, {} echo channels, {} SINR targets",
                grams.len(),
                gamma.len()
            )));
        }
        let m = los[0].len();
        if los.iter().any(|h| h.len() != m) || grams.iter().any(|g| g.shape() != (m, m)) {
            return Err(IsacError::DimensionMismatch("channels disagree on the antenna count".into()));
        }
        if !(p_max >= 0.0 && comm_noise > 0.0 && sens_noise > 0.0) {
            return Err(IsacError::InvalidConfig("need a non-negative budget and positive noise powers".into()));
        }
        if gamma.iter().any(|g| !(*g >= 0.0)) {
            return Err(IsacError::InvalidConfig("SINR targets must be non-negative".into()));
        }
        Ok(Self { los, grams, gamma, p_max, comm_noise, sens_noise })
    }

    pub fn from_channels(
        los: &[LosChannel],
        echo: &[ReflectionChannel],
        gamma: Vec<f64>,
        p_max: f64,
        comm_noise: f64,
        sens_noise: f64,
    ) -> Result<Self> {
        Self::new(
            los.iter().map(|c| c.h.clone()).collect(),
            echo.iter().map(ReflectionChannel::gram).collect(),
            gamma,
            p_max,
            comm_noise,
            sens_noise,
        )
    }

    pub fn num_users(&self) -> usize {
        self.los.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.los[0].len()
    }

    /// Unit-norm steering beams `h_k / ||h_k||`.
    pub fn steering_beams(&self) -> Result<Vec<CVector>> {
        self.los.iter().map(|h| normalized(h).ok_or(IsacError::ZeroMatrix)).collect()
    }
}

/// Lifted beamforming matrices `W = w w^H` (or their relaxation).
#[derive(Debug, Clone, PartialEq)]
pub struct Lifted {
    pub comm: Vec<CMatrix>,
    pub sense: Vec<CMatrix>,
}

impl Lifted {
    pub fn from_beams(beams: &BeamSet) -> Self {
        Self {
            comm: beams.comm.iter().map(|w| outer(w, w)).collect(),
            sense: beams.sense.iter().map(|w| outer(w, w)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotStatus {
    /// Converged to the relative tolerance.
    Optimal,
    /// Feasible, stopped at the iteration cap.
    MaxIters,
    Infeasible,
    /// The objective decreased across a sub-step.
    InternalError,
}

impl SlotStatus {
    pub fn is_feasible(self) -> bool {
        matches!(self, SlotStatus::Optimal | SlotStatus::MaxIters)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SlotStatus::Optimal => "optimal",
            SlotStatus::MaxIters => "max_iters",
            SlotStatus::Infeasible => "infeasible",
            SlotStatus::InternalError => "internal_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "AoConfigPatch")]
pub struct AoConfig {
    /// Relative objective change that stops the iteration.
    pub rel_tol: f64,
    pub max_iters: usize,
    pub solver: Tolerances,
}

impl Default for AoConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-4, max_iters: 50, solver: Tolerances { feas_tol: 1e-9, gap_tol: 1e-9, max_iters: 100 } }
    }
}

/// Partial [`AoConfig`]; missing keys, including nested solver keys, take
/// the [`AoConfig::default`] values.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AoConfigPatch {
    rel_tol: Option<f64>,
    max_iters: Option<usize>,
    solver: Option<TolerancesPatch>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TolerancesPatch {
    feas_tol: Option<f64>,
    gap_tol: Option<f64>,
    max_iters: Option<usize>,
}

impl From<AoConfigPatch> for AoConfig {
    fn from(p: AoConfigPatch) -> Self {
        let d = AoConfig::default();
        let s = p.solver.unwrap_or(TolerancesPatch { feas_tol: None, gap_tol: None, max_iters: None });
        AoConfig {
            rel_tol: p.rel_tol.unwrap_or(d.rel_tol),
            max_iters: p.max_iters.unwrap_or(d.max_iters),
            solver: Tolerances {
                feas_tol: s.feas_tol.unwrap_or(d.solver.feas_tol),
                gap_tol: s.gap_tol.unwrap_or(d.solver.gap_tol),
                max_iters: s.max_iters.unwrap_or(d.solver.max_iters),
            },
        }
    }
}

/// Relative QoS shortfall of the rank-one beams that flags a solution.
pub const RANK_ONE_QOS_SLACK: f64 = 0.01;

/// Relative objective decrease treated as divergence.
const DECREASE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SlotSolution {
    pub powers: PowerSet,
    /// Rank-one unit-norm beams recovered from `lifted`.
    pub beams: BeamSet,
    pub lifted: Lifted,
    pub t: Vec<f64>,
    /// Objective after every AO iteration.
    pub trace: Vec<f64>,
    /// Objective after every sub-step (`t`, beams, `t`, powers), starting
    /// with the first sub-step taken from a feasible point.
    pub sub_trace: Vec<f64>,
    pub comm_sinr_lifted: Vec<f64>,
    pub sens_sinr_lifted: Vec<f64>,
    pub comm_sinr: Vec<f64>,
    pub sens_sinr: Vec<f64>,
    pub status: SlotStatus,
    /// `1 - lambda_max / Tr` of every lifted block, communication first.
    pub rank_one_gaps: Vec<f64>,
    /// Rank-one beams miss a QoS target by more than [`RANK_ONE_QOS_SLACK`].
    pub rank_one_qos_violation: bool,
    pub iterations: usize,
    /// Phase-1 relaxation when a sub-problem was infeasible.
    pub infeasibility: Option<f64>,
}

impl SlotSolution {
    /// Final quadratic-transform objective.
    pub fn objective(&self) -> f64 {
        self.trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn sum_sens_sinr(&self) -> f64 {
        self.sens_sinr.iter().sum()
    }

    pub fn sum_sens_sinr_lifted(&self) -> f64 {
        self.sens_sinr_lifted.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variables {
    Joint,
    PowersOnly,
    BeamsOnly,
}

impl Variables {
    fn beams(self) -> bool {
        matches!(self, Variables::Joint | Variables::BeamsOnly)
    }

    fn powers(self) -> bool {
        matches!(self, Variables::Joint | Variables::PowersOnly)
    }
}

/// Initial point: steering beams for both functions and the proportional
/// split `P_k = P_r = P_max / (2K)`.
pub fn initial_point(inputs: &SlotInputs) -> Result<(Lifted, PowerSet)> {
    let steer = inputs.steering_beams()?;
    let beams = BeamSet::new(steer.clone(), steer)?;
    Ok((Lifted::from_beams(&beams), PowerSet::proportional(inputs.num_users(), inputs.p_max)))
}

/// Alternating optimization over `t`, the beamforming matrices and the
/// powers, warm-started from `warm` when given.
///
/// A cold start runs the power-only iteration at the steering beams, then
/// the quadratic-transform iteration on the power-scaled relaxation
/// ([`scaled_step`]) from that point, and continues from its result.
pub fn ao_solve(inputs: &SlotInputs, config: &AoConfig, warm: Option<&SlotSolution>) -> Result<SlotSolution> {
    let start = match warm {
        Some(w) if w.status.is_feasible() && w.powers.num_users() == inputs.num_users() => {
            (w.lifted.clone(), w.powers.clone())
        }
        _ => {
            let start = initial_point(inputs)?;
            let warm_up = run(inputs, config, start.clone(), Variables::PowersOnly)?;
            let start = if warm_up.status.is_feasible() { (warm_up.lifted, warm_up.powers) } else { start };
            scaled_ascent(inputs, config, &start)?.unwrap_or(start)
        }
    };
    run(inputs, config, start, Variables::Joint)
}

/// Quadratic-transform iteration over the power-scaled matrices from
/// `start`. Returns `None` if the first relaxation is not usable.
fn scaled_ascent(
    inputs: &SlotInputs,
    config: &AoConfig,
    start: &(Lifted, PowerSet),
) -> Result<Option<(Lifted, PowerSet)>> {
    let (mut lifted, mut powers) = start.clone();
    let mut moved = false;
    let mut prev: Option<f64> = None;
    for _ in 0..config.max_iters {
        let t = update_t(inputs, &powers, &lifted);
        let step = scaled_step(inputs, &t, &config.solver)?;
        if !usable(&step.report) {
            break;
        }
        (lifted, powers, moved) = (step.lifted, step.powers, true);
        let obj = sum_ratio(inputs, &powers, &lifted);
        if prev.is_some_and(|p| (obj - p).abs() <= config.rel_tol * p.abs().max(f64::MIN_POSITIVE)) {
            break;
        }
        prev = Some(obj);
    }
    Ok(moved.then_some((lifted, powers)))
}

/// Powers optimised with beams frozen at the steering vectors.
pub fn baseline_power_only(inputs: &SlotInputs, config: &AoConfig) -> Result<SlotSolution> {
    run(inputs, config, initial_point(inputs)?, Variables::PowersOnly)
}

/// Beams optimised with powers frozen at the proportional split.
pub fn baseline_beam_only(inputs: &SlotInputs, config: &AoConfig) -> Result<SlotSolution> {
    run(inputs, config, initial_point(inputs)?, Variables::BeamsOnly)
}

enum Outcome {
    Done(SlotStatus),
    Stop(SlotStatus, Option<f64>),
}

/// Accepts an optimal sub-problem, or a stalled one whose iterate is still
/// feasible.
fn usable(report: &SolveReport) -> bool {
    match report.status {
        SolveStatus::Optimal => true,
        SolveStatus::MaxIters => report.max_violation <= 1e-6,
        SolveStatus::Infeasible => false,
    }
}

fn run(inputs: &SlotInputs, config: &AoConfig, start: (Lifted, PowerSet), vars: Variables) -> Result<SlotSolution> {
    let tol = &config.solver;
    let (mut lifted, mut powers) = start;
    let mut t = update_t(inputs, &powers, &lifted);
    let mut trace: Vec<f64> = Vec::new();
    let mut sub_trace: Vec<f64> = Vec::new();
    let mut iterations = 0;

    let outcome = 'ao: {
        for iter in 1..=config.max_iters {
            iterations = iter;
            t = update_t(inputs, &powers, &lifted);
            if !sub_trace.is_empty() {
                sub_trace.push(fp_objective(inputs, &powers, &lifted, &t));
            }
            if vars.beams() {
                let mut step = beamforming_step(inputs, &powers, &t, tol)?;
                if !usable(&step.report) && iter == 1 && vars.powers() {
                    // the starting powers may violate QoS for every beam choice
                    let repair = power_step(inputs, &lifted, &t, tol)?;
                    if !usable(&repair.report) {
                        break 'ao Outcome::Stop(SlotStatus::Infeasible, repair.report.infeasibility);
                    }
                    powers = repair.powers;
                    t = update_t(inputs, &powers, &lifted);
                    step = beamforming_step(inputs, &powers, &t, tol)?;
                }
                if !usable(&step.report) {
                    break 'ao Outcome::Stop(SlotStatus::Infeasible, step.report.infeasibility);
                }
                lifted = step.lifted;
                sub_trace.push(fp_objective(inputs, &powers, &lifted, &t));
                if vars.powers() {
                    t = update_t(inputs, &powers, &lifted);
                    sub_trace.push(fp_objective(inputs, &powers, &lifted, &t));
                }
            }
            if vars.powers() {
                let step = power_step(inputs, &lifted, &t, tol)?;
                if !usable(&step.report) {
                    break 'ao Outcome::Stop(SlotStatus::Infeasible, step.report.infeasibility);
                }
                powers = step.powers;
                sub_trace.push(fp_objective(inputs, &powers, &lifted, &t));
            }
            let obj = *sub_trace.last().expect("every iteration records a sub-step");
            let decreased = sub_trace.windows(2).any(|w| w[1] < w[0] - DECREASE_TOL * w[0].abs().max(w[1].abs()));
            if decreased {
                log::warn!("objective decreased during alternating optimization: {sub_trace:?}");
                trace.push(obj);
                break 'ao Outcome::Done(SlotStatus::InternalError);
            }
            let prev = trace.last().copied();
            trace.push(obj);
            if let Some(prev) = prev {
                if (obj - prev).abs() <= config.rel_tol * prev.abs().max(f64::MIN_POSITIVE) {
                    break 'ao Outcome::Done(SlotStatus::Optimal);
                }
            }
        }
        Outcome::Done(SlotStatus::MaxIters)
    };

    let (status, infeasibility) = match outcome {
        Outcome::Done(s) => (s, None),
        Outcome::Stop(s, xi) => (s, xi),
    };
    if status.is_feasible() || status == SlotStatus::InternalError {
        t = update_t(inputs, &powers, &lifted);
    }
    finish(inputs, lifted, powers, t, trace, sub_trace, status, iterations, infeasibility)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    inputs: &SlotInputs,
    lifted: Lifted,
    powers: PowerSet,
    t: Vec<f64>,
    trace: Vec<f64>,
    sub_trace: Vec<f64>,
    status: SlotStatus,
    iterations: usize,
    infeasibility: Option<f64>,
) -> Result<SlotSolution> {
    let k_users = inputs.num_users();
    let m = inputs.num_antennas();
    let mut functionals: Vec<CMatrix> = vec![CMatrix::identity(m, m)];
    functionals.extend(inputs.los.iter().map(|h| outer(h, h)));

    let reduce = |w: &CMatrix, k: usize| {
        let mut f = functionals.clone();
        f.push(inputs.grams[k].clone());
        reduce_rank(w, &f)
    };
    let lifted = Lifted {
        comm: lifted.comm.iter().enumerate().map(|(k, w)| reduce(w, k)).collect(),
        sense: lifted.sense.iter().enumerate().map(|(k, w)| reduce(w, k)).collect(),
    };
    let mut gaps = Vec::with_capacity(2 * k_users);
    let mut extract = |w: &CMatrix| -> Result<CVector> {
        let (v, gap) = principal_component(w)?;
        gaps.push(gap);
        Ok(v)
    };
    let comm = lifted.comm.iter().map(&mut extract).collect::<Result<Vec<_>>>()?;
    let sense = lifted.sense.iter().map(&mut extract).collect::<Result<Vec<_>>>()?;
    let beams = BeamSet::new(comm, sense)?;

    let comm_sinr: Vec<f64> =
        (0..k_users).map(|k| crate::signal::comm_sinr(k, &inputs.los[k], &beams, &powers, inputs.comm_noise)).collect();
    let sens_sinr: Vec<f64> = (0..k_users)
        .map(|k| {
            let g = &inputs.grams[k];
            powers.sense * quad_form(g, &beams.sense[k])
                / (powers.user[k] * quad_form(g, &beams.comm[k]) + inputs.sens_noise)
        })
        .collect();
    let rank_one_qos_violation = (0..k_users).any(|k| comm_sinr[k] < inputs.gamma[k] * (1.0 - RANK_ONE_QOS_SLACK));
    Ok(SlotSolution {
        comm_sinr_lifted: comm_sinrs(inputs, &powers, &lifted),
        sens_sinr_lifted: sens_sinrs(inputs, &powers, &lifted),
        comm_sinr,
        sens_sinr,
        powers,
        beams,
        lifted,
        t,
        trace,
        sub_trace,
        status,
        rank_one_gaps: gaps,
        rank_one_qos_violation,
        iterations,
        infeasibility,
    })
}
