//! Log-scaled Hermitian positive definite matrices.
//!
//! A [`LogPd`] represents `exp(logscale) · matrix` where `matrix` is kept at
//! unit-order spectral norm. Scaling is done by exact powers of two, so
//! rebalancing an already balanced value is a bit-for-bit no-op.

use super::{herm_eig, pencil_matrix_eigs, HermEig, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative asymmetry tolerated when constructing a [`LogPd`].
pub const PD_HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LogPd<T: Real> {
    matrix: Matrix<T>,
    logscale: T,
}

impl<T: Real> LogPd<T> {
    /// Validates and balances `exp(logscale) · matrix`.
    pub fn new(matrix: Matrix<T>, logscale: T) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::DimMismatch("positive definite matrix must be square and non-empty".into()));
        }
        if !matrix.is_finite() || !logscale.is_finite() {
            return Err(Error::NonFinite);
        }
        let defect = matrix.hermitian_defect();
        if defect > T::tol(PD_HERMITIAN_TOL) {
            return Err(Error::NonHermitian { asymmetry: defect.as_f64() });
        }
        let matrix = matrix.hermitian_part();
        let eig = herm_eig(&matrix)?;
        if !(eig.min() > T::zero()) {
            return Err(Error::CholeskyFail);
        }
        Ok(Self::balanced(matrix, logscale, eig.max()))
    }

    pub fn from_matrix(matrix: Matrix<T>) -> Result<Self> {
        Self::new(matrix, T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::identity(n), logscale: T::zero() }
    }

    /// Positive diagonal matrix given by the natural logs of its entries.
    pub fn from_log_diag(logs: &[T]) -> Result<Self> {
        if logs.is_empty() {
            return Err(Error::DimMismatch("empty diagonal".into()));
        }
        if logs.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite);
        }
        let top = logs.iter().copied().fold(T::neg_infinity(), T::max);
        let diag: Vec<T> = logs.iter().map(|&l| (l - top).exp()).collect();
        if diag.iter().any(|&x| !(x > T::zero())) {
            return Err(Error::CholeskyFail);
        }
        Ok(Self::balanced(Matrix::from_real_diag(&diag), top, T::one()))
    }

    fn balanced(matrix: Matrix<T>, logscale: T, norm: T) -> Self {
        let k = norm.log2().round();
        if k == T::zero() {
            return Self { matrix, logscale };
        }
        let factor = T::lit(2.0).powi(-(k.as_f64() as i32));
        Self { matrix: matrix.scale(factor), logscale: logscale + k * T::LN_2() }
    }

    /// Re-applies power-of-two balancing.
    pub fn rebalance(&self) -> Result<Self> {
        let norm = herm_eig(&self.matrix)?.max();
        Ok(Self::balanced(self.matrix.clone(), self.logscale, norm))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    #[inline]
    pub fn logscale(&self) -> T {
        self.logscale
    }

    /// Dense value `exp(logscale) · matrix` (may overflow for extreme scales).
    pub fn value(&self) -> Matrix<T> {
        self.matrix.scale(self.logscale.exp())
    }

    pub fn eig(&self) -> Result<HermEig<T>> {
        herm_eig(&self.matrix)
    }

    /// Natural logs of the eigenvalues, ascending.
    pub fn log_eigenvalues(&self) -> Result<Vec<T>> {
        Ok(self.eig()?.values.into_iter().map(|l| l.ln() + self.logscale).collect())
    }

    /// Multiplies the represented value by `exp(delta)`.
    pub fn scale_log(&self, delta: T) -> Self {
        Self { matrix: self.matrix.clone(), logscale: self.logscale + delta }
    }

    /// Square root; the log scale is halved.
    pub fn sqrt(&self) -> Result<Self> {
        self.power(T::lit(0.5))
    }

    /// Inverse square root; the log scale is negated and halved.
    pub fn inv_sqrt(&self) -> Result<Self> {
        self.power(T::lit(-0.5))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.power(-T::one())
    }

    fn power(&self, p: T) -> Result<Self> {
        let eig = self.eig()?;
        let m = eig.reconstruct_with(|l| l.powf(p));
        let norm = eig.values.iter().map(|&l| l.powf(p)).fold(T::zero(), T::max);
        Ok(Self::balanced(m, self.logscale * p, norm))
    }

    /// Congruence `C* · self · C`; fails when the result is not positive definite.
    pub fn congruence(&self, c: &Matrix<T>) -> Result<Self> {
        if c.rows() != self.dim() {
            return Err(Error::DimMismatch(format!(
                "congruence by a {}x{} matrix on dimension {}",
                c.rows(),
                c.cols(),
                self.dim()
            )));
        }
        let scale = c.max_abs();
        if !(scale > T::zero()) {
            return Err(Error::CholeskyFail);
        }
        let cn = c.scale(T::one() / scale);
        Self::new(self.matrix.congruence(&cn), self.logscale + T::lit(2.0) * scale.ln())
    }

    /// Cast between precisions.
    pub fn cast<U: Real>(&self) -> LogPd<U> {
        LogPd { matrix: self.matrix.cast(), logscale: U::lit(self.logscale.as_f64()) }
    }
}

/// Eigenvalues of the pencil `A x = λ B x`, ascending.
pub fn pencil_eigs<T: Real>(a: &LogPd<T>, b: &LogPd<T>) -> Result<Vec<T>> {
    let shift = a.logscale() - b.logscale();
    Ok(pencil_matrix_eigs(a.matrix(), b.matrix())?.into_iter().map(|l| l * shift.exp()).collect())
}

/// Natural logs of the pencil eigenvalues, ascending; safe for any scale gap.
pub fn pencil_log_eigs<T: Real>(a: &LogPd<T>, b: &LogPd<T>) -> Result<Vec<T>> {
    let shift = a.logscale() - b.logscale();
    let eigs = pencil_matrix_eigs(a.matrix(), b.matrix())?;
    if eigs.iter().any(|&l| !(l > T::zero())) {
        return Err(Error::CholeskyFail);
    }
    Ok(eigs.into_iter().map(|l| l.ln() + shift).collect())
}

/// Square root of a positive definite value.
pub fn sqrt_pd<T: Real>(m: &LogPd<T>) -> Result<LogPd<T>> {
    m.sqrt()
}

/// Inverse square root of a positive definite value.
pub fn inv_sqrt_pd<T: Real>(m: &LogPd<T>) -> Result<LogPd<T>> {
    m.inv_sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::spectral_norm;

    fn pd(rows: &[&[f64]]) -> LogPd<f64> {
        LogPd::from_matrix(Matrix::from_real_rows(rows)).unwrap()
    }

    #[test]
    fn balancing_keeps_norm_unit_order() {
        let m = pd(&[&[1e6, 0.0], &[0.0, 3e5]]);
        let norm = spectral_norm(m.matrix()).unwrap();
        assert!((0.5..=2.0).contains(&norm));
        let value = m.value();
        assert!((value[(0, 0)].re - 1e6).abs() < 1e-6);
        let again = m.rebalance().unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn pencil_identity_and_scaling() {
        let b = pd(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let e = pencil_eigs(&b, &b).unwrap();
        assert!(e.iter().all(|l| (l - 1.0).abs() < 1e-14));
        let a = b.scale_log(2f64.ln());
        let e = pencil_eigs(&a, &b).unwrap();
        assert!(e.iter().all(|l| (l - 2.0).abs() < 1e-14));
    }

    #[test]
    fn pencil_diagonal_ratio() {
        let a = pd(&[&[1.0, 0.0], &[0.0, 4.0]]);
        let b = pd(&[&[4.0, 0.0], &[0.0, 1.0]]);
        let e = pencil_eigs(&a, &b).unwrap();
        assert!((e[0] - 0.25).abs() < 1e-15);
        assert!((e[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn sqrt_examples() {
        let i = LogPd::<f64>::identity(3);
        assert_eq!(sqrt_pd(&i).unwrap().value(), Matrix::identity(3));

        let d = pd(&[&[4.0, 0.0], &[0.0, 9.0]]);
        let s = sqrt_pd(&d).unwrap().value();
        assert!((&s - &Matrix::from_real_diag(&[2.0, 3.0])).max_abs() < 1e-14);

        // eigenvalues (1, 3) become (1, √3) on the same eigenvectors
        let m = pd(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let s = sqrt_pd(&m).unwrap();
        let e = s.eig().unwrap();
        let vals: Vec<f64> = e.values.iter().map(|l| l * s.logscale().exp()).collect();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3f64.sqrt()).abs() < 1e-14);
        let orig = m.eig().unwrap();
        for k in 0..2 {
            let overlap: f64 = (0..2).map(|i| (orig.vectors[(i, k)].conj() * e.vectors[(i, k)]).re).sum();
            assert!((overlap.abs() - 1.0).abs() < 1e-12);
        }
        let sq = s.value().matmul(&s.value());
        assert!((&sq - &m.value()).frobenius() <= 1e-11 * m.value().frobenius());
    }

    #[test]
    fn sqrt_halves_logscale() {
        let m = pd(&[&[2.0, 1.0], &[1.0, 2.0]]).scale_log(10.0);
        let s = m.sqrt().unwrap();
        let sq = s.value().matmul(&s.value());
        assert!((&sq - &m.value()).frobenius() <= 1e-11 * m.value().frobenius());
        assert!((s.logscale() - m.logscale() / 2.0).abs() < 1.0);
    }

    #[test]
    fn rejects_indefinite() {
        let m = Matrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(LogPd::from_matrix(m).is_err());
    }

    #[test]
    fn log_diag_handles_overflowing_entries() {
        let m = LogPd::<f64>::from_log_diag(&[800.0, 790.0]).unwrap();
        let logs = m.log_eigenvalues().unwrap();
        assert!((logs[0] - 790.0).abs() < 1e-12 && (logs[1] - 800.0).abs() < 1e-12);
    }
}
