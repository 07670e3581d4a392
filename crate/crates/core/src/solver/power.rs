//! Power allocation at fixed beams and auxiliary variables.

use nalgebra::DMatrix;

use super::problem::{ConicProblem, Sense, SolveReport, SolveStatus, Tolerances};
use super::solve_psd;
use crate::error::{IsacError, Result};
use crate::linalg::{CMatrix, C64};
use crate::signal::PowerSet;

/// Gains entering the power subproblem. With `K` users the variables are
/// `P_1..P_K` and the shared sensing power `P_r`.
#[derive(Debug, Clone)]
pub struct PowerProblem {
    pub t: Vec<f64>,
    /// Echo gain of the sensing beam, `||G_k w_rk||^2`.
    pub sens_gain: Vec<f64>,
    /// Echo leakage of the communication beam, `||G_k w_ck||^2`.
    pub leak_gain: Vec<f64>,
    /// `comm_gain[(k, j)] = |h_k^H w_cj|^2`.
    pub comm_gain: DMatrix<f64>,
    /// `sum_j |h_k^H w_rj|^2`.
    pub sense_interference: Vec<f64>,
    /// Communication SINR requirement per user; 0 disables the constraint.
    pub gamma: Vec<f64>,
    pub comm_noise: f64,
    pub sens_noise: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone)]
pub struct PowerSolution {
    pub powers: PowerSet,
    pub report: SolveReport,
}

impl PowerProblem {
    pub fn num_users(&self) -> usize {
        self.t.len()
    }

    /// Fractional-programming objective
    /// `sum_k 2 t_k sqrt(P_r a_k) - t_k^2 (P_k b_k + sigma_r^2)`.
    pub fn objective(&self, powers: &PowerSet) -> f64 {
        (0..self.num_users())
            .map(|k| {
                let t = self.t[k];
                2.0 * t * (powers.sense * self.sens_gain[k]).max(0.0).sqrt()
                    - t * t * (powers.user[k] * self.leak_gain[k] + self.sens_noise)
            })
            .sum()
    }

    /// Smallest slack of the QoS constraints
    /// `P_k a_kk - gamma_k (interference + noise)`, relative to the
    /// requirement side.
    pub fn qos_margin(&self, powers: &PowerSet) -> f64 {
        (0..self.num_users())
            .filter(|&k| self.gamma[k] > 0.0)
            .map(|k| {
                let sinr = crate::signal::comm_sinr_from_gains(
                    k,
                    &self.comm_gain,
                    &self.sense_interference,
                    powers,
                    self.comm_noise,
                );
                sinr / self.gamma[k] - 1.0
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn validate(&self) -> Result<()> {
        let k = self.num_users();
        let ok = self.sens_gain.len() == k
            && self.leak_gain.len() == k
            && self.comm_gain.shape() == (k, k)
            && self.sense_interference.len() == k
            && self.gamma.len() == k;
        if !ok || k == 0 {
            return Err(IsacError::DimensionMismatch(format!("power problem with {k} users has inconsistent gains")));
        }
        if !(self.sens_noise > 0.0 && self.comm_noise > 0.0) {
            return Err(IsacError::InvalidConfig("noise powers must be positive".into()));
        }
        if !(self.p_max >= 0.0) || self.t.iter().any(|t| !(*t >= 0.0)) || self.gamma.iter().any(|g| !(*g >= 0.0)) {
            return Err(IsacError::InvalidConfig("budget, t and SINR targets must be non-negative".into()));
        }
        Ok(())
    }

    fn conic(&self) -> ConicProblem {
        let k = self.num_users();
        let s = |v: f64| CMatrix::from_element(1, 1, C64::new(v, 0.0));
        let mut p = ConicProblem::new(vec![1; k + 1]);
        let a: f64 = (0..k).map(|i| 2.0 * self.t[i] * self.sens_gain[i].max(0.0).sqrt()).sum();
        p.add_sqrt(k, a, s(1.0));
        for i in 0..k {
            p.add_linear(i, s(-self.t[i] * self.t[i] * self.leak_gain[i]));
        }
        p.constant = -self.t.iter().map(|t| t * t).sum::<f64>() * self.sens_noise;
        let mut budget: Vec<(usize, CMatrix)> = (0..k).map(|i| (i, s(1.0))).collect();
        budget.push((k, s(k as f64)));
        p.add_constraint(budget, Sense::Le, self.p_max);
        for i in (0..k).filter(|&i| self.gamma[i] > 0.0) {
            let g = self.gamma[i];
            let mut terms: Vec<(usize, CMatrix)> = (0..k)
                .map(|j| (j, s(if j == i { self.comm_gain[(i, i)] } else { -g * self.comm_gain[(i, j)] })))
                .collect();
            terms.push((k, s(-g * self.sense_interference[i])));
            p.add_constraint(terms, Sense::Ge, g * self.comm_noise);
        }
        p
    }
}

/// Maximizes [`PowerProblem::objective`] over `P_k, P_r >= 0` subject to the
/// power budget and the QoS constraints.
pub fn solve_power(problem: &PowerProblem, tol: &Tolerances) -> Result<PowerSolution> {
    problem.validate()?;
    let k = problem.num_users();
    let conic = problem.conic();
    if problem.p_max == 0.0 {
        let zero = PowerSet::new(vec![0.0; k], 0.0)?;
        let feasible = problem.gamma.iter().all(|&g| g == 0.0);
        let blocks = vec![CMatrix::zeros(1, 1); k + 1];
        let report = SolveReport {
            status: if feasible { SolveStatus::Optimal } else { SolveStatus::Infeasible },
            objective: problem.objective(&zero),
            dual_bound: problem.objective(&zero),
            blocks,
            epigraph: vec![0.0],
            max_violation: 0.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            gap: 0.0,
            iterations: 0,
            infeasibility: (!feasible).then_some(f64::INFINITY),
        };
        return Ok(PowerSolution { powers: zero, report });
    }
    let report = solve_psd(&conic, tol)?;
    let raw: Vec<f64> = report.blocks.iter().map(|b| b[(0, 0)].re.max(0.0)).collect();
    let mut powers = PowerSet::new(raw[..k].to_vec(), raw[k])?;
    let total = powers.total();
    if total > problem.p_max {
        let c = problem.p_max / total;
        powers = PowerSet::new(powers.user.iter().map(|p| p * c).collect(), powers.sense * c)?;
    }
    Ok(PowerSolution { powers, report })
}
