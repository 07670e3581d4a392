//! Complex dense linear-algebra helpers shared by the channel, signal and
//! optimizer modules.

use nalgebra::{DMatrix, DVector};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// `a b^H`.
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// Real inner product `Re Tr(A^H B)`; equals `Tr(A B)` for Hermitian `A`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// `Re(w^H A w)`.
pub fn quad_form(a: &CMatrix, w: &CVector) -> f64 {
    w.dotc(&(a * w)).re
}

/// Real part of the trace.
pub fn trace_re(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Largest absolute deviation of `a` from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(a: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = hermitian_part(a).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = CMatrix::from_fn(a.nrows(), n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_part(a).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Lifts real vectors into a complex vector.
pub fn to_complex(re: &DVector<f64>, im: &DVector<f64>) -> CVector {
    CVector::from_iterator(re.len(), re.iter().zip(im.iter()).map(|(&r, &i)| C64::new(r, i)))
}

/// Returns `w / ||w||`, or `None` for a zero vector.
pub fn normalized(w: &CVector) -> Option<CVector> {
    let n = w.norm();
    (n > 0.0 && n.is_finite()).then(|| w.unscale(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMatrix {
        let v = CVector::from_vec(vec![C64::new(1.0, 0.5), C64::new(-0.3, 2.0), C64::new(0.7, -1.1)]);
        let u = CVector::from_vec(vec![C64::new(0.2, 0.1), C64::new(1.0, 0.0), C64::new(0.0, -0.4)]);
        outer(&v, &v).scale(2.0) + outer(&u, &u)
    }

    #[test]
    fn inner_matches_trace_of_product() {
        let a = sample();
        let b = outer(
            &CVector::from_vec(vec![C64::new(0.0, 1.0), C64::new(1.0, 1.0), C64::new(-1.0, 0.0)]),
            &CVector::from_vec(vec![C64::new(0.0, 1.0), C64::new(1.0, 1.0), C64::new(-1.0, 0.0)]),
        );
        let tr = (&a * &b).trace();
        assert!((inner(&a, &b) - tr.re).abs() < 1e-12);
        assert!(tr.im.abs() < 1e-12);
    }

    #[test]
    fn eigen_is_sorted_and_reconstructs() {
        let a = sample();
        let (vals, vecs) = hermitian_eigen(&a);
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        let rebuilt = &vecs * CMatrix::from_diagonal(&vals.map(|v| C64::new(v, 0.0))) * vecs.adjoint();
        assert!((rebuilt - &a).norm() < 1e-10);
        assert!(hermitian_defect(&a) < 1e-14);
        assert!(min_eigenvalue(&a) > -1e-12);
    }
}
