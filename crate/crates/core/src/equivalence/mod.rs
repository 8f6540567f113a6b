//! Similarity certificates, unitary equivalence and intertwiners.
//!
//! Two moment families `G_α`, `G̃_α` are similar on a truncation when some
//! invertible `C` and constants `m₁ ≤ m₂` satisfy
//! `m₁ C* G_α C ≤ G̃_α ≤ m₂ C* G_α C` for every `α`. Finite truncations
//! always admit some certificate, so similarity of the full operators is
//! only ever reported as evidence from the growth of `m₂ / m₁`.

mod certificate;
mod diagnostic;
mod intertwiner;
mod optimize;
mod unitary;

pub use certificate::{
    sandwich_ratio, verify_certificate, AlphaMargin, Certificate, SandwichRatio, VerificationReport,
};
pub use diagnostic::{growth_diagnostic, growth_from_moments, GrowthDiagnostic, GrowthRow, Thresholds, Verdict};
pub use intertwiner::{
    brute_force_intertwiner, diagonal_intertwiner, DiagonalIntertwiner, Intertwiner, IntertwinerSpace, OracleCheck,
    BRUTE_FORCE_CAP,
};
pub use optimize::{optimize_c, OptimizeOptions};
pub use unitary::{test_unitary_equivalence, test_unitary_equivalence_seeded, UnitaryTest, Witness};

use rand::Rng;

use crate::numerics::{herm_eig, Matrix};
use crate::scalar::{Cx, Real};

/// Default verification tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Default seed for the randomized tie-breaking combinations.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

/// Positive weights for the random combinations `Σ t_α X_α`.
pub(crate) fn combination_weights(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| 0.5 + rng.gen::<f64>()).collect()
}

/// `Σ t_k X_k / ‖X_k‖` over unit-order matrix parts.
pub(crate) fn combine<T: Real>(mats: &[&Matrix<T>], weights: &[f64]) -> Matrix<T> {
    let n = mats[0].rows();
    let mut acc = Matrix::zeros(n, n);
    for (m, &t) in mats.iter().zip(weights) {
        let norm = m.frobenius();
        if norm > T::zero() {
            acc = &acc + &m.scale(T::lit(t) / norm);
        }
    }
    acc.hermitian_part()
}

/// Relative gap `min_i (λ_{i+1} − λ_i) / max|λ|` of an ascending spectrum.
pub(crate) fn relative_gap<T: Real>(values: &[T]) -> T {
    let top = values.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    if top == T::zero() {
        return T::zero();
    }
    values.windows(2).map(|w| w[1] - w[0]).fold(T::infinity(), T::min) / top
}

/// Diagonal phases `d` with `conj(d_i) B_ij d_j ≈ B̃_ij`, propagated along a
/// maximum spanning tree of `|B_ij| |B̃_ij|`.
pub(crate) fn align_phases<T: Real>(b: &Matrix<T>, bt: &Matrix<T>) -> Vec<Cx<T>> {
    let n = b.rows();
    let mut phases = vec![Cx::new(T::one(), T::zero()); n];
    let mut in_tree = vec![false; n];
    let scale = b.max_abs().max(T::min_positive_value()) * bt.max_abs().max(T::min_positive_value());
    let floor = scale * T::tol(1e-12);
    for root in 0..n {
        if in_tree[root] {
            continue;
        }
        in_tree[root] = true;
        loop {
            let mut best: Option<(usize, usize, T)> = None;
            for i in (0..n).filter(|&i| in_tree[i]) {
                for j in (0..n).filter(|&j| !in_tree[j]) {
                    let w = b[(i, j)].norm() * bt[(i, j)].norm();
                    if w > floor && best.is_none_or(|(_, _, bw)| w > bw) {
                        best = Some((i, j, w));
                    }
                }
            }
            let Some((i, j, _)) = best else { break };
            // conj(d_i) B_ij d_j = B̃_ij  ⇒  d_j = d_i · B̃_ij / B_ij
            let ratio = bt[(i, j)] / b[(i, j)];
            phases[j] = phases[i] * (ratio / ratio.norm());
            in_tree[j] = true;
        }
    }
    phases
}

/// Eigenvectors of a Hermitian matrix, ascending.
pub(crate) fn eigenbasis<T: Real>(m: &Matrix<T>) -> crate::Result<(Vec<T>, Matrix<T>)> {
    let e = herm_eig(m)?;
    Ok((e.values, e.vectors))
}
