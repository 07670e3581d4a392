//! Lowers a complex [`ConicProblem`] to the real block SDP of [`super::ipm`].
//!
//! Hermitian blocks of size `n > 1` become real `2n x 2n` blocks through
//! `E(X) = [[Re X, -Im X], [Im X, Re X]]`, for which
//! `<C, X> = <E(C), E(X)> / 2`. Size-one blocks stay scalar.
//!
//! A term `a sqrt(<D, X>)` gets a 2x2 block `[[u, s], [s, v]] >= 0` with
//! `v = 1` and `u = <D, X>`, so that `s <= sqrt(<D, X>)`, and contributes
//! `a s` to the objective. Inequalities get scalar slack blocks. Every row
//! is scaled to unit data norm and the objective to unit block norm.

use nalgebra::{DMatrix, DVector};

use super::ipm::SdpData;
use super::problem::{ConicProblem, LinearConstraint, Sense};
use crate::linalg::{trace_re, CMatrix, C64};

/// Real-embedded constraint row: `(block, coefficient)` terms and right-hand side.
type Row = (Vec<(usize, DMatrix<f64>)>, f64);

pub(crate) fn embed(q: &CMatrix) -> DMatrix<f64> {
    let n = q.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, q[(0, 0)].re);
    }
    let mut e = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = q[(i, j)];
            e[(i, j)] = z.re;
            e[(i + n, j + n)] = z.re;
            e[(i, j + n)] = -z.im;
            e[(i + n, j)] = z.im;
        }
    }
    e
}

/// Real data matrix `Q'` with `<Q', E(X)> = <Q, X>`.
fn embed_functional(q: &CMatrix) -> DMatrix<f64> {
    if q.nrows() == 1 {
        embed(q)
    } else {
        embed(q) * 0.5
    }
}

fn merged_terms(con: &LinearConstraint) -> Vec<(usize, DMatrix<f64>)> {
    let mut terms: Vec<(usize, DMatrix<f64>)> = Vec::new();
    for (b, q) in &con.terms {
        let e = embed_functional(q);
        match terms.iter_mut().find(|(tb, _)| tb == b) {
            Some((_, acc)) => *acc += e,
            None => terms.push((*b, e)),
        }
    }
    terms
}

fn row_scale(terms: &[(usize, DMatrix<f64>)]) -> f64 {
    let scale = terms.iter().map(|(_, m)| m.norm_squared()).sum::<f64>().sqrt();
    if scale > 0.0 {
        scale
    } else {
        1.0
    }
}

/// Norm of the constraint data as seen by the real problem.
pub(crate) fn constraint_scale(con: &LinearConstraint) -> f64 {
    row_scale(&merged_terms(con))
}

pub(crate) fn extract(y: &DMatrix<f64>, n: usize) -> CMatrix {
    if n == 1 {
        return CMatrix::from_element(1, 1, C64::new(y[(0, 0)], 0.0));
    }
    CMatrix::from_fn(n, n, |i, j| {
        C64::new(0.5 * (y[(i, j)] + y[(i + n, j + n)]), 0.5 * (y[(i + n, j)] - y[(i, j + n)]))
    })
}

fn real_dim(n: usize) -> usize {
    if n == 1 {
        1
    } else {
        2 * n
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub data: SdpData,
    /// Index of the epigraph block of each square-root term, with the scale
    /// `sqrt(Tr D)` mapping the normalised `s` back to original units.
    pub epigraph: Vec<Option<(usize, f64)>>,
    /// Multiply the real objective by this to undo the objective scaling.
    pub objective_scale: f64,
    /// Phase-1 relaxation block, if present.
    pub relaxation: Option<usize>,
}

/// Builds the real problem. With `phase_one` the objective is dropped and a
/// scalar `xi >= 0` relaxing every inequality is minimised instead.
pub(crate) fn compile(problem: &ConicProblem, phase_one: bool) -> Compiled {
    let mut dims: Vec<usize> = problem.block_dims.iter().map(|&n| real_dim(n)).collect();
    let nb_user = dims.len();
    let mut c: Vec<DMatrix<f64>> = Vec::new();
    for (b, &n) in problem.block_dims.iter().enumerate() {
        let m = real_dim(n);
        c.push(match (&problem.linear[b], phase_one) {
            (Some(q), false) => -embed_functional(q),
            _ => DMatrix::zeros(m, m),
        });
    }
    let mut rows: Vec<Row> = Vec::new();

    let mut epigraph = Vec::with_capacity(problem.sqrt_terms.len());
    for t in &problem.sqrt_terms {
        let tr = trace_re(&t.matrix);
        if phase_one || t.coeff == 0.0 || !(tr > 0.0) {
            epigraph.push(None);
            continue;
        }
        let eb = dims.len();
        dims.push(2);
        let a = t.coeff * tr.sqrt();
        c.push(DMatrix::from_row_slice(2, 2, &[0.0, -0.5 * a, -0.5 * a, 0.0]));
        rows.push((vec![(eb, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]))], 1.0));
        let d = embed_functional(&t.matrix.unscale(tr));
        rows.push((vec![(eb, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])), (t.block, -d)], 0.0));
        epigraph.push(Some((eb, tr.sqrt())));
    }

    let relaxation = phase_one.then(|| {
        dims.push(1);
        c.push(DMatrix::from_element(1, 1, 1.0));
        dims.len() - 1
    });

    for con in &problem.constraints {
        let mut terms = merged_terms(con);
        let scale = row_scale(&terms);
        for (_, m) in terms.iter_mut() {
            *m /= scale;
        }
        let rhs = con.rhs / scale;
        let slack_sign = match con.sense {
            Sense::Ge => -1.0,
            Sense::Le => 1.0,
            Sense::Eq => 0.0,
        };
        if slack_sign != 0.0 {
            let sb = dims.len();
            dims.push(1);
            c.push(DMatrix::zeros(1, 1));
            terms.push((sb, DMatrix::from_element(1, 1, slack_sign)));
            if let Some(rb) = relaxation {
                terms.push((rb, DMatrix::from_element(1, 1, -slack_sign)));
            }
        }
        rows.push((terms, rhs));
    }

    let c_max = c.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let objective_scale = if c_max > 0.0 { c_max } else { 1.0 };
    for m in c.iter_mut() {
        *m /= objective_scale;
    }

    let nb = dims.len();
    let mut a = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    for (terms, rhs) in rows {
        let mut row: Vec<Option<DMatrix<f64>>> = vec![None; nb];
        for (blk, m) in terms {
            row[blk] = Some(match row[blk].take() {
                Some(prev) => prev + m,
                None => m,
            });
        }
        a.push(row);
        b.push(rhs);
    }
    debug_assert!(nb >= nb_user);
    Compiled { data: SdpData { dims, c, a, b: DVector::from_vec(b) }, epigraph, objective_scale, relaxation }
}
