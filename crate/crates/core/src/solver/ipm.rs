//! Infeasible primal-dual interior-point method for real block SDPs
//!
//! ```text
//! minimize <C, X>  s.t.  <A_i, X> = b_i,  X >= 0
//! maximize b^T y   s.t.  sum_i y_i A_i + Z = C,  Z >= 0
//! ```
//!
//! with block-diagonal `X`, `Z`. Search directions are HKM with Mehrotra
//! predictor-corrector steps.

use nalgebra::{DMatrix, DVector};

use super::problem::Tolerances;

pub(crate) type Blocks = Vec<DMatrix<f64>>;

#[derive(Debug, Clone)]
pub(crate) struct SdpData {
    pub dims: Vec<usize>,
    pub c: Blocks,
    /// `a[i][b]`, `None` for an all-zero block.
    pub a: Vec<Vec<Option<DMatrix<f64>>>>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    MaxIters,
    /// Dual iterate diverged; the primal is very likely infeasible.
    DualRay,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub status: IpmStatus,
    pub x: Blocks,
    pub dobj: f64,
    pub pres: f64,
    pub dres: f64,
    pub gap: f64,
    pub iterations: usize,
}

const DUAL_RAY_LIMIT: f64 = 1e10;

impl SdpData {
    fn num_rows(&self) -> usize {
        self.b.len()
    }

    /// `A(M)_i = sum_b <A_i^b, M_b>`; `M` need not be symmetric.
    fn apply(&self, m: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.num_rows(),
            self.a.iter().map(|row| row.iter().zip(m).filter_map(|(a, m)| a.as_ref().map(|a| a.dot(m))).sum()),
        )
    }

    /// `sum_i y_i A_i`.
    fn adjoint(&self, y: &DVector<f64>) -> Blocks {
        let mut out: Blocks = self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (row, &yi) in self.a.iter().zip(y.iter()) {
            for (o, a) in out.iter_mut().zip(row) {
                if let Some(a) = a {
                    o.zip_apply(a, |o, a| *o += yi * a);
                }
            }
        }
        out
    }
}

fn dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a.dot(b)).sum()
}

fn norm(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Largest `alpha` with `X + alpha dX` PSD, or infinity.
fn max_step(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (x, dx) in x.iter().zip(dx) {
        let l = x.clone().cholesky()?.unpack();
        let li_dx = l.solve_lower_triangular(dx)?;
        let m = l.solve_lower_triangular(&li_dx.transpose())?;
        let mut m = m;
        symmetrize(&mut m);
        let lmin = m.symmetric_eigenvalues().min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    Some(alpha)
}

struct Direction {
    dx: Blocks,
    dy: DVector<f64>,
    dz: Blocks,
}

struct Workspace<'a> {
    data: &'a SdpData,
    x: &'a [DMatrix<f64>],
    z_inv: Blocks,
    schur: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    rp: DVector<f64>,
    rd: Blocks,
}

impl Workspace<'_> {
    /// Direction for complementarity target `X Z + dX Z + X dZ = X Z + rc`.
    fn solve(&self, rc: &[DMatrix<f64>]) -> Direction {
        let rc_zi: Blocks = rc.iter().zip(&self.z_inv).map(|(r, zi)| r * zi).collect();
        let x_rd_zi: Blocks = self.x.iter().zip(&self.rd).zip(&self.z_inv).map(|((x, r), zi)| x * r * zi).collect();
        let diff: Blocks = rc_zi.iter().zip(&x_rd_zi).map(|(a, b)| a - b).collect();
        let rhs = &self.rp - self.data.apply(&diff);
        let dy = self.schur.solve(&rhs);
        let aty = self.data.adjoint(&dy);
        let dz: Blocks = self.rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
        let dx = rc_zi
            .iter()
            .zip(self.x)
            .zip(&dz)
            .zip(&self.z_inv)
            .map(|(((rz, x), dz), zi)| {
                let mut d = rz - x * dz * zi;
                symmetrize(&mut d);
                d
            })
            .collect();
        Direction { dx, dy, dz }
    }
}

fn schur_matrix(data: &SdpData, x: &[DMatrix<f64>], z_inv: &[DMatrix<f64>]) -> DMatrix<f64> {
    let m = data.num_rows();
    let mut s = DMatrix::zeros(m, m);
    for j in 0..m {
        for (bk, aj) in data.a[j].iter().enumerate() {
            let Some(aj) = aj else { continue };
            let t = &x[bk] * aj * &z_inv[bk];
            for i in j..m {
                if let Some(ai) = &data.a[i][bk] {
                    s[(i, j)] += ai.dot(&t);
                }
            }
        }
    }
    for j in 0..m {
        for i in j + 1..m {
            s[(j, i)] = s[(i, j)];
        }
    }
    s
}

fn initial_point(data: &SdpData) -> (Blocks, Blocks) {
    let mut x = Vec::with_capacity(data.dims.len());
    let mut z = Vec::with_capacity(data.dims.len());
    for (bk, &n) in data.dims.iter().enumerate() {
        let nf = n as f64;
        let mut xi = 10f64.max(nf.sqrt());
        let mut a_max = 0f64;
        for (row, bi) in data.a.iter().zip(data.b.iter()) {
            if let Some(a) = &row[bk] {
                let an = a.norm();
                xi = xi.max(nf * (1.0 + bi.abs()) / (1.0 + an));
                a_max = a_max.max(an);
            }
        }
        let eta = 10f64.max(nf.sqrt()).max((1.0 + a_max.max(data.c[bk].norm())) / nf.sqrt());
        x.push(DMatrix::identity(n, n) * xi);
        z.push(DMatrix::identity(n, n) * eta);
    }
    (x, z)
}

pub(crate) fn solve(data: &SdpData, tol: &Tolerances) -> IpmResult {
    let n_total: f64 = data.dims.iter().sum::<usize>() as f64;
    let (mut x, mut z) = initial_point(data);
    let mut y = DVector::zeros(data.num_rows());
    let b_norm = data.b.norm();
    let c_norm = norm(&data.c);

    let mut iter = 0;
    loop {
        let rp = &data.b - data.apply(&x);
        let aty = data.adjoint(&y);
        let rd: Blocks = data.c.iter().zip(&aty).zip(&z).map(|((c, a), z)| c - a - z).collect();
        let pobj = dot(&data.c, &x);
        let dobj = data.b.dot(&y);
        let pres = rp.norm() / (1.0 + b_norm);
        let dres = norm(&rd) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let mu = dot(&x, &z) / n_total;
        let rel_mu = mu * n_total / (1.0 + pobj.abs() + dobj.abs());

        let stop =
            |status, x: &Blocks, iterations| IpmResult { status, x: x.clone(), dobj, pres, dres, gap, iterations };
        if pres <= tol.feas_tol && dres <= tol.feas_tol && gap <= tol.gap_tol && rel_mu <= tol.gap_tol {
            return stop(IpmStatus::Optimal, &x, iter);
        }
        if y.amax() > DUAL_RAY_LIMIT {
            return stop(IpmStatus::DualRay, &x, iter);
        }
        if iter >= tol.max_iters {
            return stop(IpmStatus::MaxIters, &x, iter);
        }
        iter += 1;
        let fail = |x: &Blocks, _: &DVector<f64>| stop(IpmStatus::NumericalFailure, x, iter);
        let Some(z_inv) = z.iter().map(|zb| zb.clone().cholesky().map(|c| c.inverse())).collect::<Option<Blocks>>()
        else {
            return fail(&x, &y);
        };
        let Some(schur) = schur_matrix(data, &x, &z_inv).cholesky() else {
            return fail(&x, &y);
        };
        let ws = Workspace { data, x: &x, z_inv, schur, rp, rd };

        let xz: Blocks = x.iter().zip(&z).map(|(x, z)| x * z).collect();
        let rc_aff: Blocks = xz.iter().map(|m| -m).collect();
        let aff = ws.solve(&rc_aff);
        let (Some(ap), Some(ad)) = (max_step(&x, &aff.dx), max_step(&z, &aff.dz)) else {
            return fail(&x, &y);
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = x
            .iter()
            .zip(&aff.dx)
            .zip(z.iter().zip(&aff.dz))
            .map(|((x, dx), (z, dz))| (x + dx * ap).dot(&(z + dz * ad)))
            .sum::<f64>()
            / n_total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let rc: Blocks = xz
            .iter()
            .zip(aff.dx.iter().zip(&aff.dz))
            .map(|(xz, (dx, dz))| DMatrix::identity(xz.nrows(), xz.ncols()) * (sigma * mu) - xz - dx * dz)
            .collect();
        let dir = ws.solve(&rc);
        let (Some(sp), Some(sd)) = (max_step(&x, &dir.dx), max_step(&z, &dir.dz)) else {
            return fail(&x, &y);
        };
        let damping = 0.9 + 0.09 * ap.min(ad);
        let (sp, sd) = ((damping * sp).min(1.0), (damping * sd).min(1.0));
        for (x, dx) in x.iter_mut().zip(&dir.dx) {
            x.zip_apply(dx, |x, d| *x += sp * d);
            symmetrize(x);
        }
        for (z, dz) in z.iter_mut().zip(&dir.dz) {
            z.zip_apply(dz, |z, d| *z += sd * d);
            symmetrize(z);
        }
        y.axpy(sd, &dir.dy, 1.0);
    }
}
