use num_traits::Zero;

use super::{herm_eig, Matrix};
use crate::error::{Error, Result};
use crate::scalar::{re, Cx, Real};

/// Lower-triangular Cholesky factor `L` with `M = L L*`.
pub fn cholesky<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::DimMismatch("cholesky of a non-square matrix".into()));
    }
    let n = m.rows();
    let a = m.hermitian_part();
    let mut l = Matrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d = d - l[(j, k)].norm_sqr();
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::CholeskyFail);
        }
        let djj = d.sqrt();
        l[(j, j)] = re(djj);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L`.
pub fn forward_solve<T: Real>(l: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s = s - l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `L* X = B` for lower-triangular `L`.
pub fn backward_solve_adjoint<T: Real>(l: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s = s - l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)].conj();
        }
    }
    x
}

/// Solves `M X = B` for Hermitian positive definite `M`.
pub fn pd_solve<T: Real>(m: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let l = cholesky(m)?;
    Ok(backward_solve_adjoint(&l, &forward_solve(&l, b)))
}

/// Eigenvalues of the Hermitian pencil `A x = λ B x` for matrix parts, via
/// the congruence `L⁻¹ A L⁻*` with `B = L L*`.
pub fn pencil_matrix_eigs<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Vec<T>> {
    if a.rows() != b.rows() || !a.is_square() || !b.is_square() {
        return Err(Error::DimMismatch("pencil operands differ in shape".into()));
    }
    let l = cholesky(b)?;
    let y = forward_solve(&l, a);
    let w = forward_solve(&l, &y.adjoint());
    Ok(herm_eig(&w.hermitian_part())?.values)
}

/// General square solve by Gaussian elimination with partial pivoting.
pub fn lu_solve<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::DimMismatch("lu_solve shape mismatch".into()));
    }
    let n = a.rows();
    let m = b.cols();
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs();
    for col in 0..n {
        let (piv, best) =
            (col..n)
                .map(|r| (r, lu[(r, col)].norm()))
                .fold((col, T::zero()), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best <= T::epsilon() * scale * T::lit(n as f64) {
            return Err(Error::RankDeficient { ratio: (best / scale).as_f64() });
        }
        if piv != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            for j in 0..m {
                let tmp = x[(col, j)];
                x[(col, j)] = x[(piv, j)];
                x[(piv, j)] = tmp;
            }
        }
        let p = lu[(col, col)];
        for r in col + 1..n {
            let f = lu[(r, col)] / p;
            if f.is_zero() {
                continue;
            }
            for j in col..n {
                let v = lu[(col, j)];
                lu[(r, j)] = lu[(r, j)] - f * v;
            }
            for j in 0..m {
                let v = x[(col, j)];
                x[(r, j)] = x[(r, j)] - f * v;
            }
        }
    }
    for j in 0..m {
        for i in (0..n).rev() {
            let mut s: Cx<T> = x[(i, j)];
            for k in i + 1..n {
                s = s - lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

pub fn inverse<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    lu_solve(a, &Matrix::identity(a.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let m = Matrix::<f64>::from_real_rows(&[&[4.0, 2.0, 0.4], &[2.0, 3.0, 0.1], &[0.4, 0.1, 2.0]]);
        let l = cholesky(&m).unwrap();
        let back = l.matmul(&l.adjoint());
        assert!((&back - &m).max_abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Matrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert_eq!(cholesky(&m), Err(Error::CholeskyFail));
    }

    #[test]
    fn diagonal_pencil_ratio() {
        let a = Matrix::<f64>::from_real_diag(&[1.0, 4.0]);
        let b = Matrix::<f64>::from_real_diag(&[4.0, 1.0]);
        let e = pencil_matrix_eigs(&a, &b).unwrap();
        assert!((e[0] - 0.25).abs() < 1e-15 && (e[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_round_trip() {
        let a = Matrix::<f64>::from_real_rows(&[&[0.0, 2.0, 1.0], &[1.0, 0.0, 3.0], &[2.0, 1.0, 0.0]]);
        let inv = inverse(&a).unwrap();
        assert!((&a.matmul(&inv) - &Matrix::identity(3)).max_abs() < 1e-14);
    }
}
