//! Seeded random instances: unitaries, positive definite matrices and moment
//! systems. All draws go through `ChaCha8Rng`, so a seed fixes the output on
//! every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lattice::Truncation;
use crate::numerics::{polar_unitary, LogPd, Matrix};
use crate::scalar::{cx, Real};
use crate::shiftcore::Moments;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with independent standard complex Gaussian entries.
pub fn gaussian<T: Real>(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix<T> {
    let half = std::f64::consts::FRAC_1_SQRT_2;
    Matrix::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        cx(T::lit(a * half), T::lit(b * half))
    })
}

/// Haar-distributed unitary (polar factor of a Ginibre matrix).
pub fn unitary<T: Real>(rng: &mut impl Rng, n: usize) -> Matrix<T> {
    loop {
        let g = gaussian::<T>(rng, n, n);
        if let Ok(u) = polar_unitary(&g) {
            return u;
        }
    }
}

/// Random Hermitian positive definite matrix with eigenvalues drawn from
/// `[1, cond]` on a log-uniform scale, rotated by a Haar unitary.
pub fn pd_matrix<T: Real>(rng: &mut impl Rng, n: usize, cond: f64) -> Matrix<T> {
    let u = unitary::<T>(rng, n);
    let eig: Vec<T> = (0..n).map(|_| T::lit(cond.ln() * rng.gen::<f64>()).exp()).collect();
    Matrix::from_real_diag(&eig).congruence(&u.adjoint()).hermitian_part()
}

/// Random log-scaled positive definite value with log scale in `[-spread, spread]`.
pub fn log_pd<T: Real>(rng: &mut impl Rng, n: usize, cond: f64, spread: f64) -> LogPd<T> {
    let m = pd_matrix::<T>(rng, n, cond);
    let s = T::lit(spread * (2.0 * rng.gen::<f64>() - 1.0));
    LogPd::new(m, s).expect("random matrix is positive definite")
}

/// Invertible random matrix `P = U diag(σ) W` with singular values in `[1, cond]`.
pub fn invertible<T: Real>(rng: &mut impl Rng, n: usize, cond: f64) -> Matrix<T> {
    let u = unitary::<T>(rng, n);
    let w = unitary::<T>(rng, n);
    let sv: Vec<T> = (0..n).map(|_| T::lit(cond.ln() * rng.gen::<f64>()).exp()).collect();
    u.matmul(&Matrix::from_real_diag(&sv)).matmul(&w)
}

/// Independent random Grams on the simplex; condition numbers up to `cond`
/// and log scales growing linearly with degree plus noise.
pub fn moment_system<T: Real>(rng: &mut impl Rng, d: usize, max_degree: usize, n: usize, cond: f64) -> Moments<T> {
    let lattice = Truncation::new(d, max_degree).expect("d >= 1");
    let grams = lattice
        .indices()
        .iter()
        .map(|a| {
            let m = pd_matrix::<T>(rng, n, cond);
            let s = T::lit(0.3 * a.degree() as f64 + 0.5 * (2.0 * rng.gen::<f64>() - 1.0));
            LogPd::new(m, s).expect("random matrix is positive definite")
        })
        .collect();
    Moments::new(lattice, n, grams).expect("consistent random system")
}
