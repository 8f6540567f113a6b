use num_traits::One;

use super::{herm_eig, Matrix};
use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Unitary factor of the polar decomposition `M = U P`, the nearest unitary
/// matrix to `M` in Frobenius norm.
pub fn polar_unitary<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::DimMismatch("polar decomposition of a non-square matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let scale = m.max_abs();
    if !(scale > T::zero()) {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let mn = m.scale(T::one() / scale);
    let eig = herm_eig(&mn.adjoint_mul(&mn))?;
    let smax = eig.max().max(T::zero()).sqrt();
    let smin = eig.min().max(T::zero()).sqrt();
    if !(smin > T::tol(RANK_TOL) * smax) {
        return Err(Error::RankDeficient { ratio: (smin / smax).as_f64() });
    }
    let inv_root = eig.reconstruct_with(|l| T::one() / l.sqrt());
    let u = mn.matmul(&inv_root);
    // one Newton-Schulz step restores orthonormality to working precision
    let gram = u.adjoint_mul(&u);
    let three = Matrix::<T>::identity(u.rows()).scale(T::lit(3.0));
    Ok(u.matmul(&(&three - &gram)).scale(T::lit(0.5)))
}

/// Matrix exponential by scaling and squaring with a degree-16 Taylor core.
pub fn expm<T: Real>(a: &Matrix<T>) -> Matrix<T> {
    let n = a.rows();
    let norm = a.frobenius();
    let mut squarings = 0i32;
    let mut s = T::one();
    while norm * s > T::lit(0.25) {
        s = s * T::lit(0.5);
        squarings += 1;
    }
    let x = a.scale(s);
    let mut term = Matrix::<T>::identity(n);
    let mut sum = Matrix::<T>::identity(n);
    for k in 1..=16 {
        term = term.matmul(&x).scale(T::one() / T::lit(k as f64));
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

/// Deviation from unitarity `‖U*U − I‖_F`.
pub fn unitarity_defect<T: Real>(u: &Matrix<T>) -> T {
    let mut g = u.adjoint_mul(u);
    for i in 0..g.rows() {
        g[(i, i)] = g[(i, i)] - Cx::one();
    }
    g.frobenius()
}
