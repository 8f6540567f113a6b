//! Dense complex linear algebra for small Hermitian and positive definite
//! matrices: Jacobi eigensolver, Cholesky pencils, log-scaled positive
//! definite values, square roots and polar projection.

mod chol;
mod eig;
mod hermpd;
mod matrix;
mod polar;

pub use chol::{backward_solve_adjoint, cholesky, forward_solve, inverse, lu_solve, pd_solve, pencil_matrix_eigs};
pub use eig::{herm_eig, singular_values, spectral_norm, HermEig, HERMITIAN_TOL, OFF_DIAGONAL_TOL, SWEEP_CAP};
pub use hermpd::{inv_sqrt_pd, pencil_eigs, pencil_log_eigs, sqrt_pd, LogPd};
pub use matrix::Matrix;
pub use polar::{expm, polar_unitary, unitarity_defect, RANK_TOL};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ratio of smallest to largest singular value; fails on the zero matrix.
pub fn conditioning<T: Real>(m: &Matrix<T>) -> Result<(T, T)> {
    let sv = singular_values(m)?;
    let smax = *sv.last().ok_or_else(|| Error::DimMismatch("empty matrix".into()))?;
    Ok((sv[0], smax))
}

/// Whether `m` is invertible in the sense `σ_min > RANK_TOL · σ_max`.
pub fn is_invertible<T: Real>(m: &Matrix<T>) -> bool {
    match conditioning(m) {
        Ok((smin, smax)) => smax > T::zero() && smin > T::tol(RANK_TOL) * smax,
        Err(_) => false,
    }
}
