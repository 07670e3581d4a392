use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::linalg::{hermitian_defect, CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `lhs >= rhs`
    Ge,
    /// `lhs <= rhs`
    Le,
    Eq,
}

/// `sum_i <Q_i, X_{b_i}> (sense) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, CMatrix)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Objective term `coeff * sqrt(<matrix, X_block>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtTerm {
    pub block: usize,
    pub coeff: f64,
    pub matrix: CMatrix,
}

/// Maximize
/// `sum_b <C_b, X_b> + sum_k a_k sqrt(<D_k, X_{b_k}>) + constant`
/// over Hermitian PSD blocks `X_b` subject to linear constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub block_dims: Vec<usize>,
    pub linear: Vec<Option<CMatrix>>,
    pub sqrt_terms: Vec<SqrtTerm>,
    pub constraints: Vec<LinearConstraint>,
    pub constant: f64,
}

impl ConicProblem {
    pub fn new(block_dims: Vec<usize>) -> Self {
        let n = block_dims.len();
        Self { block_dims, linear: vec![None; n], sqrt_terms: Vec::new(), constraints: Vec::new(), constant: 0.0 }
    }

    /// Adds `c` to the linear objective coefficient of `block`.
    pub fn add_linear(&mut self, block: usize, c: CMatrix) {
        let slot = &mut self.linear[block];
        *slot = Some(match slot.take() {
            Some(prev) => prev + c,
            None => c,
        });
    }

    pub fn add_sqrt(&mut self, block: usize, coeff: f64, matrix: CMatrix) {
        self.sqrt_terms.push(SqrtTerm { block, coeff, matrix });
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, CMatrix)>, sense: Sense, rhs: f64) {
        self.constraints.push(LinearConstraint { terms, sense, rhs });
    }

    /// `Tr(X_block) = value`.
    pub fn add_trace_equality(&mut self, block: usize, value: f64) {
        let n = self.block_dims[block];
        self.add_constraint(vec![(block, CMatrix::identity(n, n))], Sense::Eq, value);
    }

    /// Objective value at `blocks`; negative square-root arguments count as 0.
    pub fn objective_at(&self, blocks: &[CMatrix]) -> f64 {
        let lin: f64 =
            self.linear.iter().zip(blocks).filter_map(|(c, x)| c.as_ref().map(|c| crate::linalg::inner(c, x))).sum();
        let sq: f64 = self
            .sqrt_terms
            .iter()
            .map(|t| t.coeff * crate::linalg::inner(&t.matrix, &blocks[t.block]).max(0.0).sqrt())
            .sum();
        lin + sq + self.constant
    }

    /// Left-hand side of every constraint at `blocks`.
    pub fn constraint_values(&self, blocks: &[CMatrix]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.terms.iter().map(|(b, q)| crate::linalg::inner(q, &blocks[*b])).sum())
            .collect()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let nb = self.block_dims.len();
        if nb == 0 || self.block_dims.contains(&0) {
            return Err(IsacError::MalformedProblem("blocks must be non-empty".into()));
        }
        if self.linear.len() != nb {
            return Err(IsacError::MalformedProblem("one linear coefficient slot per block".into()));
        }
        let check = |b: usize, m: &CMatrix, what: &str| -> Result<()> {
            let n = *self
                .block_dims
                .get(b)
                .ok_or_else(|| IsacError::MalformedProblem(format!("{what} refers to block {b} of {nb}")))?;
            if m.shape() != (n, n) {
                return Err(IsacError::MalformedProblem(format!(
                    "{what} on block {b} has shape {:?}, expected {n}x{n}",
                    m.shape()
                )));
            }
            if m.iter().any(|z: &C64| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(IsacError::MalformedProblem(format!("{what} on block {b} is not finite")));
            }
            if hermitian_defect(m) > 1e-9 * m.norm().max(f64::MIN_POSITIVE) {
                return Err(IsacError::MalformedProblem(format!("{what} on block {b} is not Hermitian")));
            }
            Ok(())
        };
        for (b, c) in self.linear.iter().enumerate() {
            if let Some(c) = c {
                check(b, c, "objective")?;
            }
        }
        for t in &self.sqrt_terms {
            check(t.block, &t.matrix, "square-root term")?;
            if !(t.coeff >= 0.0 && t.coeff.is_finite()) {
                return Err(IsacError::MalformedProblem(format!("square-root coefficient {} is negative", t.coeff)));
            }
        }
        for c in &self.constraints {
            for (b, q) in &c.terms {
                check(*b, q, "constraint")?;
            }
            if !c.rhs.is_finite() {
                return Err(IsacError::MalformedProblem("constraint right-hand side is not finite".into()));
            }
        }
        Ok(())
    }
}

/// Interior-point stopping rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative primal/dual residual.
    pub feas_tol: f64,
    /// Relative duality gap.
    pub gap_tol: f64,
    pub max_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { feas_tol: 1e-7, gap_tol: 1e-6, max_iters: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Objective of the original maximization at `blocks`.
    pub objective: f64,
    /// Upper bound on the optimum from the dual iterate.
    pub dual_bound: f64,
    pub blocks: Vec<CMatrix>,
    /// Epigraph variables `s_k <= sqrt(<D_k, X>)`, one per square-root term.
    pub epigraph: Vec<f64>,
    /// Largest constraint violation, relative to the constraint's data norm.
    pub max_violation: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Minimal uniform constraint relaxation found by phase 1, if it ran.
    pub infeasibility: Option<f64>,
}
