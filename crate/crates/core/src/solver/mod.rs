//! Small dense conic solver: Hermitian PSD blocks, linear constraints and
//! square-root objective terms, solved by a primal-dual interior-point
//! method. Infeasibility is detected by a phase-1 problem that minimises a
//! uniform relaxation of all inequalities.

mod compile;
mod ipm;
mod power;
mod problem;
mod rank;

pub use power::{solve_power, PowerProblem, PowerSolution};
pub use problem::{ConicProblem, LinearConstraint, Sense, SolveReport, SolveStatus, SqrtTerm, Tolerances};
pub use rank::{principal_component, reduce_rank};

use crate::error::Result;
use crate::linalg::{hermitian_part, CMatrix};
use compile::{compile, constraint_scale, extract, Compiled};
use ipm::{IpmResult, IpmStatus};

/// Phase-1 relaxations above `INFEASIBILITY_FACTOR * feas_tol` certify
/// infeasibility.
const INFEASIBILITY_FACTOR: f64 = 10.0;

/// Maximizes `problem` over its PSD blocks.
pub fn solve_psd(problem: &ConicProblem, tol: &Tolerances) -> Result<SolveReport> {
    problem.validate()?;
    let compiled = compile(problem, false);
    let run = ipm::solve(&compiled.data, tol);
    let mut report = assemble(problem, &compiled, &run);
    log::trace!(
        "ipm: {:?} after {} iterations, pres {:.2e} dres {:.2e} gap {:.2e}",
        run.status,
        run.iterations,
        run.pres,
        run.dres,
        run.gap
    );
    if run.status == IpmStatus::Optimal {
        report.status = SolveStatus::Optimal;
        return Ok(report);
    }

    let phase_one = compile(problem, true);
    let check = ipm::solve(&phase_one.data, tol);
    let xi = phase_one.relaxation.map(|b| check.x[b][(0, 0)]).unwrap_or(0.0);
    let infeasible = match check.status {
        IpmStatus::Optimal => xi > INFEASIBILITY_FACTOR * tol.feas_tol,
        IpmStatus::DualRay => true,
        _ => false,
    };
    report.infeasibility = Some(xi);
    if infeasible {
        let certificate = assemble(problem, &phase_one, &check);
        report.blocks = certificate.blocks;
        report.objective = certificate.objective;
        report.max_violation = certificate.max_violation;
        report.status = SolveStatus::Infeasible;
    } else {
        report.status = SolveStatus::MaxIters;
    }
    Ok(report)
}

fn assemble(problem: &ConicProblem, compiled: &Compiled, run: &IpmResult) -> SolveReport {
    let blocks: Vec<CMatrix> =
        problem.block_dims.iter().enumerate().map(|(b, &n)| hermitian_part(&extract(&run.x[b], n))).collect();
    let epigraph = problem
        .sqrt_terms
        .iter()
        .zip(&compiled.epigraph)
        .map(|(t, e)| match e {
            Some((eb, scale)) => run.x[*eb][(0, 1)] * scale,
            None => crate::linalg::inner(&t.matrix, &blocks[t.block]).max(0.0).sqrt(),
        })
        .collect();
    let values = problem.constraint_values(&blocks);
    let max_violation = problem
        .constraints
        .iter()
        .zip(&values)
        .map(|(c, &lhs)| {
            let v = match c.sense {
                Sense::Ge => c.rhs - lhs,
                Sense::Le => lhs - c.rhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            v.max(0.0) / constraint_scale(c)
        })
        .fold(0.0, f64::max);
    SolveReport {
        status: SolveStatus::MaxIters,
        objective: problem.objective_at(&blocks),
        dual_bound: -run.dobj * compiled.objective_scale + problem.constant,
        blocks,
        epigraph,
        max_violation,
        primal_residual: run.pres,
        dual_residual: run.dres,
        gap: run.gap,
        iterations: run.iterations,
        infeasibility: None,
    }
}
