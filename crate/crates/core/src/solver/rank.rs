//! Rank-one recovery from lifted solutions.

use nalgebra::DMatrix;

use crate::error::{IsacError, Result};
use crate::linalg::{hermitian_eigen, inner, trace_re, CMatrix, CVector, C64};

/// Relative singular value below which a direction counts as null.
const NULL_TOL: f64 = 1e-11;

/// Dominant unit eigenvector of `w` and the rank-one gap
/// `1 - lambda_max / Tr(w)`.
pub fn principal_component(w: &CMatrix) -> Result<(CVector, f64)> {
    let tr = trace_re(w);
    if !(tr > 0.0) || w.norm() == 0.0 {
        return Err(IsacError::ZeroMatrix);
    }
    let (vals, vecs) = hermitian_eigen(w);
    let v = vecs.column(0).into_owned();
    // fix the global phase so the first non-negligible entry is real positive
    let pivot = v.iter().copied().find(|z| z.norm() > 1e-8).unwrap_or(C64::new(1.0, 0.0));
    let v = v * (pivot.conj() / pivot.norm());
    let gap = (1.0 - vals[0] / tr).clamp(0.0, 1.0);
    Ok((v.unscale(v.norm()), gap))
}

/// Lowers the rank of PSD `w` while keeping `<Q_i, w>` fixed for every
/// Hermitian `Q_i` in `functionals`.
///
/// Writes `w = U U^H` and repeatedly moves along a Hermitian direction `D`
/// with `<U^H Q_i U, D> = 0` until no such direction remains.
pub fn reduce_rank(w: &CMatrix, functionals: &[CMatrix]) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(w);
    let top = vals.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return w.clone();
    }
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-12 * top).collect();
    let mut u = CMatrix::from_fn(w.nrows(), keep.len(), |i, j| vecs[(i, keep[j])] * vals[keep[j]].sqrt());

    loop {
        let r = u.ncols();
        if r <= 1 {
            break;
        }
        let Some(d) = null_direction(&u, functionals) else { break };
        let (dv, evecs) = hermitian_eigen(&d);
        // I - D / lambda for whichever sign of D has the larger extreme eigenvalue
        let (dmax, dmin) = (dv[0], dv[dv.len() - 1]);
        let ev: Vec<f64> = if dmax >= -dmin {
            dv.iter().map(|v| 1.0 - v / dmax).collect()
        } else {
            dv.iter().map(|v| 1.0 - v / dmin).collect()
        };
        let cols: Vec<usize> = (0..r).filter(|&i| ev[i] > 1e-12).collect();
        if cols.len() == r {
            break;
        }
        u = CMatrix::from_fn(u.nrows(), cols.len(), |i, j| {
            let c = cols[j];
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..r {
                acc += u[(i, k)] * evecs[(k, c)];
            }
            acc * ev[c].sqrt()
        });
    }
    &u * u.adjoint()
}

/// A Hermitian `r x r` matrix orthogonal to every `U^H Q_i U`, if one exists.
fn null_direction(u: &CMatrix, functionals: &[CMatrix]) -> Option<CMatrix> {
    let r = u.ncols();
    let n_params = r * r;
    // real coordinates: diagonal, then (re, im) of the strict upper triangle
    let basis = |p: usize| -> CMatrix {
        let mut e = CMatrix::zeros(r, r);
        if p < r {
            e[(p, p)] = C64::new(1.0, 0.0);
            return e;
        }
        let q = (p - r) / 2;
        let imag = (p - r) % 2 == 1;
        let (mut i, mut rem) = (0, q);
        while rem >= r - 1 - i {
            rem -= r - 1 - i;
            i += 1;
        }
        let j = i + 1 + rem;
        let z = if imag { C64::new(0.0, 1.0) } else { C64::new(1.0, 0.0) };
        e[(i, j)] = z;
        e[(j, i)] = z.conj();
        e
    };
    let basis: Vec<CMatrix> = (0..n_params).map(basis).collect();
    let reduced: Vec<CMatrix> = functionals.iter().map(|q| u.adjoint() * q * u).collect();
    let a = DMatrix::from_fn(reduced.len(), n_params, |i, p| inner(&reduced[i], &basis[p]));
    let row_scale: Vec<f64> = (0..a.nrows()).map(|i| a.row(i).norm()).collect();
    let a =
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, p| if row_scale[i] > 0.0 { a[(i, p)] / row_scale[i] } else { 0.0 });
    // zero rows make the SVD return a full basis of the coefficient space
    let rows = a.nrows().max(n_params);
    let a = a.resize_vertically(rows, 0.0);
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let (idx, &smin) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    if smin > NULL_TOL * svd.singular_values.max().max(1.0) {
        return None;
    }
    let coeffs = v_t.row(idx).transpose();
    let mut d = CMatrix::zeros(r, r);
    for (p, c) in coeffs.iter().enumerate() {
        d += basis[p].scale(*c);
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{min_eigenvalue, outer};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(m: usize, rng: &mut ChaCha8Rng) -> CVector {
        CVector::from_fn(m, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn random_psd(m: usize, rank: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..rank).fold(CMatrix::zeros(m, m), |acc, _| {
            let v = random_vec(m, &mut rng);
            acc + outer(&v, &v)
        })
    }

    #[test]
    fn rank_one_input_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_vec(5, &mut rng);
        let w = w.unscale(w.norm());
        let (v, gap) = principal_component(&outer(&w, &w)).unwrap();
        assert!(gap < 1e-12);
        assert_relative_eq!(v.dotc(&w).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn isotropic_gap() {
        let m = 6;
        let w = CMatrix::identity(m, m).unscale(m as f64);
        let (_, gap) = principal_component(&w).unwrap();
        assert_relative_eq!(gap, 1.0 - 1.0 / m as f64, epsilon = 1e-12);
    }

    #[test]
    fn zero_matrix_has_no_direction() {
        assert!(matches!(principal_component(&CMatrix::zeros(3, 3)), Err(IsacError::ZeroMatrix)));
    }

    #[test]
    fn matches_power_iteration() {
        let w = random_psd(6, 4, 9);
        let (v, _) = principal_component(&w).unwrap();
        let mut x = CVector::from_element(6, C64::new(1.0, 0.3));
        for _ in 0..2000 {
            x = &w * &x;
            x = x.unscale(x.norm());
        }
        let rq = |u: &CVector| u.dotc(&(&w * u)).re;
        assert_relative_eq!(rq(&v), rq(&x), max_relative = 1e-9);
        assert_relative_eq!(v.dotc(&x).norm(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn reduction_without_functionals_gives_rank_one() {
        let w = random_psd(5, 4, 2);
        let reduced = reduce_rank(&w, &[]);
        let (_, gap) = principal_component(&reduced).unwrap();
        assert!(gap < 1e-10, "gap {gap}");
    }

    proptest! {
        #[test]
        fn reduction_preserves_functionals(seed in 0u64..200, m in 3usize..7, nq in 1usize..4) {
            let w = random_psd(m, m, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let mut qs = vec![CMatrix::identity(m, m)];
            for _ in 0..nq {
                let h = random_vec(m, &mut rng);
                qs.push(outer(&h, &h));
            }
            let reduced = reduce_rank(&w, &qs);
            for q in &qs {
                let a = inner(q, &w);
                prop_assert!((inner(q, &reduced) - a).abs() <= 1e-9 * a.abs().max(1.0));
            }
            prop_assert!(min_eigenvalue(&reduced) >= -1e-9 * reduced.norm());
            let (vals, _) = hermitian_eigen(&reduced);
            let rank = vals.iter().filter(|&&v| v > 1e-9 * vals[0]).count();
            prop_assert!(rank * rank <= qs.len(), "rank {} with {} functionals", rank, qs.len());
        }
    }
}
