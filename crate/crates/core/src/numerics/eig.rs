//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot entry with a diagonal
//! unitary and then applies a real plane rotation, so the accumulated
//! transformation stays exactly unitary up to rounding.

use num_traits::{One, Zero};

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{cx, Cx, Real};

/// Maximum number of full Jacobi sweeps.
pub const SWEEP_CAP: usize = 64;

/// Off-diagonal stopping threshold relative to the Frobenius norm.
pub const OFF_DIAGONAL_TOL: f64 = 1e-14;

/// Relative asymmetry above which an input is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Eigen-decomposition `M = V diag(λ) V*` with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig<T: Real> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Real> HermEig<T> {
    /// Rebuilds `V f(Λ) V*`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let v = &self.vectors;
        let fl: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::from_fn(n, n, |i, j| {
            let mut acc = Cx::zero();
            for k in 0..n {
                acc = acc + v[(i, k)] * v[(j, k)].conj() * fl[k];
            }
            acc
        });
        for i in 0..n {
            out[(i, i)].im = T::zero();
        }
        out
    }

    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        *self.values.last().expect("non-empty spectrum")
    }
}

fn off_norm<T: Real>(a: &Matrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc = acc + a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Eigenvalues (ascending) and a unitary eigenvector matrix of a Hermitian matrix.
///
/// The input is symmetrized before iterating; inputs whose relative asymmetry
/// exceeds [`HERMITIAN_TOL`] are rejected.
pub fn herm_eig<T: Real>(m: &Matrix<T>) -> Result<HermEig<T>> {
    if !m.is_square() {
        return Err(Error::DimMismatch(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let defect = m.hermitian_defect();
    if defect > T::lit(HERMITIAN_TOL) {
        return Err(Error::NonHermitian { asymmetry: defect.as_f64() });
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    let mut v = Matrix::<T>::identity(n);
    let threshold = T::tol(OFF_DIAGONAL_TOL) * a.frobenius();

    let mut sweeps = 0;
    while off_norm(&a) > threshold {
        if sweeps == SWEEP_CAP {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = Matrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(HermEig { values, vectors })
}

fn rotate<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == T::zero() {
        return;
    }
    let n = a.rows();
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let two = T::lit(2.0);
    let theta = (aqq - app) / (two * r);
    let t = if theta.is_infinite() {
        T::zero()
    } else {
        let sign = if theta >= T::zero() { T::one() } else { -T::one() };
        sign / (theta.abs() + (T::one() + theta * theta).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    // U acts on columns p, q: U_pp = c, U_pq = s, U_qp = -s·conj(phase), U_qq = c·conj(phase).
    let up_p = Cx::<T>::one() * c;
    let up_q = Cx::<T>::one() * s;
    let uq_p = phase.conj() * (-s);
    let uq_q = phase.conj() * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * up_p + akq * uq_p;
        a[(k, q)] = akp * up_q + akq * uq_q;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = up_p.conj() * apk + uq_p.conj() * aqk;
        a[(q, k)] = up_q.conj() * apk + uq_q.conj() * aqk;
    }
    a[(p, q)] = Cx::zero();
    a[(q, p)] = Cx::zero();
    a[(p, p)] = cx(a[(p, p)].re, T::zero());
    a[(q, q)] = cx(a[(q, q)].re, T::zero());

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * up_p + vkq * uq_p;
        v[(k, q)] = vkp * up_q + vkq * uq_q;
    }
}

/// Singular values of `m` (ascending), computed from the spectrum of `m*m`.
pub fn singular_values<T: Real>(m: &Matrix<T>) -> Result<Vec<T>> {
    let gram = m.adjoint_mul(m);
    let eig = herm_eig(&gram)?;
    Ok(eig.values.into_iter().map(|l| l.max(T::zero()).sqrt()).collect())
}

/// Spectral norm (largest singular value).
pub fn spectral_norm<T: Real>(m: &Matrix<T>) -> Result<T> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(T::zero());
    }
    let sv = singular_values(m)?;
    Ok(*sv.last().expect("non-empty"))
}
