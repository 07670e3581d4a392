//! Sub-steps of the alternating optimization at fixed remaining variables.

use nalgebra::DMatrix;

use super::{Lifted, SlotInputs};
use crate::error::Result;
use crate::linalg::{inner, outer, quad_form, trace_re, CMatrix};
use crate::signal::PowerSet;
use crate::solver::{self, ConicProblem, PowerProblem, Sense, SolveReport, Tolerances};

/// Closed-form auxiliary variables
/// `t_k = sqrt(P_r <S_k, W_rk>) / (P_k <S_k, W_ck> + sigma_r^2)` with
/// `S_k = G_k^H G_k`.
pub fn update_t(inputs: &SlotInputs, powers: &PowerSet, lifted: &Lifted) -> Vec<f64> {
    (0..inputs.num_users())
        .map(|k| {
            let a = (powers.sense * inner(&inputs.grams[k], &lifted.sense[k])).max(0.0).sqrt();
            let b = powers.user[k] * inner(&inputs.grams[k], &lifted.comm[k]) + inputs.sens_noise;
            a / b
        })
        .collect()
}

/// Quadratic-transform objective
/// `sum_k 2 t_k sqrt(P_r <S_k, W_rk>) - t_k^2 (P_k <S_k, W_ck> + sigma_r^2)`.
pub fn fp_objective(inputs: &SlotInputs, powers: &PowerSet, lifted: &Lifted, t: &[f64]) -> f64 {
    (0..inputs.num_users())
        .map(|k| {
            let a = (powers.sense * inner(&inputs.grams[k], &lifted.sense[k])).max(0.0).sqrt();
            let b = powers.user[k] * inner(&inputs.grams[k], &lifted.comm[k]) + inputs.sens_noise;
            2.0 * t[k] * a - t[k] * t[k] * b
        })
        .sum()
}

/// Sum of sensing SINRs evaluated on lifted matrices.
pub fn sum_ratio(inputs: &SlotInputs, powers: &PowerSet, lifted: &Lifted) -> f64 {
    sens_sinrs(inputs, powers, lifted).iter().sum()
}

pub fn sens_sinrs(inputs: &SlotInputs, powers: &PowerSet, lifted: &Lifted) -> Vec<f64> {
    (0..inputs.num_users())
        .map(|k| {
            crate::signal::sens_sinr_lifted(
                k,
                &inputs.grams[k],
                &lifted.comm[k],
                &lifted.sense[k],
                powers,
                inputs.sens_noise,
            )
        })
        .collect()
}

pub fn comm_sinrs(inputs: &SlotInputs, powers: &PowerSet, lifted: &Lifted) -> Vec<f64> {
    (0..inputs.num_users())
        .map(|k| {
            crate::signal::comm_sinr_lifted(k, &inputs.los[k], &lifted.comm, &lifted.sense, powers, inputs.comm_noise)
        })
        .collect()
}

/// Result of the beamforming subproblem.
#[derive(Debug, Clone)]
pub struct BeamStep {
    pub lifted: Lifted,
    pub report: SolveReport,
}

/// Semidefinite relaxation of the beamforming subproblem at fixed powers and
/// `t`: blocks `W_c1..W_cK, W_r1..W_rK`, unit trace each, with the QoS
/// constraints written linearly in the lifted matrices.
pub fn beamforming_problem(inputs: &SlotInputs, powers: &PowerSet, t: &[f64]) -> ConicProblem {
    let k_users = inputs.num_users();
    let m = inputs.num_antennas();
    let mut p = ConicProblem::new(vec![m; 2 * k_users]);
    for k in 0..k_users {
        p.add_sqrt(k_users + k, 2.0 * t[k] * powers.sense.sqrt(), inputs.grams[k].clone());
        p.add_linear(k, inputs.grams[k].scale(-t[k] * t[k] * powers.user[k]));
    }
    p.constant = -t.iter().map(|t| t * t).sum::<f64>() * inputs.sens_noise;
    for b in 0..2 * k_users {
        p.add_trace_equality(b, 1.0);
    }
    for k in 0..k_users {
        let g = inputs.gamma[k];
        if g <= 0.0 {
            continue;
        }
        let hh = outer(&inputs.los[k], &inputs.los[k]);
        let mut terms: Vec<(usize, CMatrix)> = Vec::with_capacity(2 * k_users);
        for j in 0..k_users {
            let c = if j == k { powers.user[k] } else { -g * powers.user[j] };
            terms.push((j, hh.scale(c)));
        }
        for j in 0..k_users {
            terms.push((k_users + j, hh.scale(-g * powers.sense)));
        }
        p.add_constraint(terms, Sense::Ge, g * inputs.comm_noise);
    }
    p
}

pub fn beamforming_step(inputs: &SlotInputs, powers: &PowerSet, t: &[f64], tol: &Tolerances) -> Result<BeamStep> {
    let problem = beamforming_problem(inputs, powers, t);
    let report = solver::solve_psd(&problem, tol)?;
    let k = inputs.num_users();
    let lifted = Lifted { comm: report.blocks[..k].to_vec(), sense: report.blocks[k..].to_vec() };
    Ok(BeamStep { lifted, report })
}

/// Gains of fixed lifted beams as seen by the power subproblem.
pub fn power_problem(inputs: &SlotInputs, lifted: &Lifted, t: &[f64]) -> PowerProblem {
    let k_users = inputs.num_users();
    let h = &inputs.los;
    PowerProblem {
        t: t.to_vec(),
        sens_gain: (0..k_users).map(|k| inner(&inputs.grams[k], &lifted.sense[k])).collect(),
        leak_gain: (0..k_users).map(|k| inner(&inputs.grams[k], &lifted.comm[k])).collect(),
        comm_gain: DMatrix::from_fn(k_users, k_users, |k, j| quad_form(&lifted.comm[j], &h[k])),
        sense_interference: (0..k_users).map(|k| lifted.sense.iter().map(|w| quad_form(w, &h[k])).sum()).collect(),
        gamma: inputs.gamma.clone(),
        comm_noise: inputs.comm_noise,
        sens_noise: inputs.sens_noise,
        p_max: inputs.p_max,
    }
}

pub fn power_step(inputs: &SlotInputs, lifted: &Lifted, t: &[f64], tol: &Tolerances) -> Result<solver::PowerSolution> {
    solver::solve_power(&power_problem(inputs, lifted, t), tol)
}

/// Relaxation in the power-scaled matrices `V_ck = P_k W_ck` and
/// `V_rk = P_r W_rk` at fixed `t`. Powers and beams are then optimised
/// jointly: the objective and QoS constraints are linear in `V`, the budget
/// is `sum_k Tr V_ck + sum_k Tr V_rk <= P_max` and the sensing blocks share
/// one trace. Blocks are ordered as in [`beamforming_problem`].
pub fn scaled_problem(inputs: &SlotInputs, t: &[f64]) -> ConicProblem {
    let k_users = inputs.num_users();
    let m = inputs.num_antennas();
    let eye = CMatrix::identity(m, m);
    let mut p = ConicProblem::new(vec![m; 2 * k_users]);
    for k in 0..k_users {
        p.add_sqrt(k_users + k, 2.0 * t[k], inputs.grams[k].clone());
        p.add_linear(k, inputs.grams[k].scale(-t[k] * t[k]));
    }
    p.constant = -t.iter().map(|t| t * t).sum::<f64>() * inputs.sens_noise;
    p.add_constraint((0..2 * k_users).map(|b| (b, eye.clone())).collect(), Sense::Le, inputs.p_max);
    for k in 1..k_users {
        p.add_constraint(vec![(k_users + k, eye.clone()), (k_users, -eye.clone())], Sense::Eq, 0.0);
    }
    for k in 0..k_users {
        let g = inputs.gamma[k];
        if g <= 0.0 {
            continue;
        }
        let hh = outer(&inputs.los[k], &inputs.los[k]);
        let mut terms: Vec<(usize, CMatrix)> = Vec::with_capacity(2 * k_users);
        for j in 0..k_users {
            terms.push((j, if j == k { hh.clone() } else { hh.scale(-g) }));
        }
        for j in 0..k_users {
            terms.push((k_users + j, hh.scale(-g)));
        }
        p.add_constraint(terms, Sense::Ge, g * inputs.comm_noise);
    }
    p
}

/// Result of [`scaled_step`], split back into powers and unit-trace beams.
#[derive(Debug, Clone)]
pub struct ScaledStep {
    pub powers: PowerSet,
    pub lifted: Lifted,
    pub report: SolveReport,
}

/// Solves [`scaled_problem`] and splits every block into its trace and a
/// unit-trace matrix. Blocks with a vanishing trace fall back to the
/// steering projector.
pub fn scaled_step(inputs: &SlotInputs, t: &[f64], tol: &Tolerances) -> Result<ScaledStep> {
    let report = solver::solve_psd(&scaled_problem(inputs, t), tol)?;
    let k = inputs.num_users();
    let steer = inputs.steering_beams()?;
    let floor = 1e-12 * inputs.p_max.max(f64::MIN_POSITIVE);
    let split = |v: &CMatrix, j: usize| {
        let tr = trace_re(v).max(0.0);
        if tr > floor {
            (tr, v.unscale(tr))
        } else {
            (tr, outer(&steer[j], &steer[j]))
        }
    };
    let comm: Vec<(f64, CMatrix)> = report.blocks[..k].iter().enumerate().map(|(j, v)| split(v, j)).collect();
    let sense: Vec<(f64, CMatrix)> = report.blocks[k..].iter().enumerate().map(|(j, v)| split(v, j)).collect();
    let p_r = sense.iter().map(|s| s.0).sum::<f64>() / k as f64;
    let powers = PowerSet::new(comm.iter().map(|c| c.0).collect(), p_r)?;
    let lifted =
        Lifted { comm: comm.into_iter().map(|c| c.1).collect(), sense: sense.into_iter().map(|s| s.1).collect() };
    Ok(ScaledStep { powers, lifted, report })
}
