use rand::seq::SliceRandom;

use super::{align_phases, combination_weights, combine, eigenbasis, relative_gap, DEFAULT_SEED};
use crate::error::Result;
use crate::numerics::{herm_eig, polar_unitary, LogPd, Matrix};
use crate::random;
use crate::scalar::Real;
use crate::shiftcore::Moments;

const GAP_TOL: f64 = 1e-6;
const POLAR_ITERS: usize = 500;

/// Why two systems were declared not unitarily equivalent.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness<T: Real> {
    /// Spectra of `G_α` and `G̃_α` differ at this position.
    Spectral { position: usize, gap: T },
    /// No unitary found below this residual.
    Floor { residual: T },
}

#[derive(Debug, Clone)]
pub struct UnitaryTest<T: Real> {
    pub equivalent: bool,
    pub v: Option<Matrix<T>>,
    /// `max_α ‖G̃_α − V*G_αV‖ / ‖G_α‖` for the best `V` tried.
    pub residual: T,
    pub witness: Option<Witness<T>>,
    /// Whether the polar fallback ran.
    pub used_fallback: bool,
}

// max_i |e^{l_i − top} − e^{l̃_i − top}| relative to the larger spectrum
fn spectral_gap<T: Real>(g: &LogPd<T>, gt: &LogPd<T>) -> Result<T> {
    let (a, b) = (g.log_eigenvalues()?, gt.log_eigenvalues()?);
    let top = a.last().copied().unwrap_or(T::zero()).max(b.last().copied().unwrap_or(T::zero()));
    Ok(a.iter().zip(&b).map(|(&x, &y)| ((x - top).exp() - (y - top).exp()).abs()).fold(T::zero(), T::max))
}

fn residual<T: Real>(m: &Moments<T>, mt: &Moments<T>, v: &Matrix<T>) -> T {
    let mut worst = T::zero();
    for pos in 0..m.len() {
        let (g, gt) = (m.gram(pos), mt.gram(pos));
        let moved = g.matrix().congruence(v);
        let target = gt.matrix().scale((gt.logscale() - g.logscale()).exp());
        let r = (&target - &moved).frobenius() / g.matrix().frobenius();
        if !r.is_finite() {
            return T::infinity();
        }
        worst = worst.max(r);
    }
    worst
}

/// Decides whether `G̃_α = V* G_α V` for a single unitary `V` (all `α`).
pub fn test_unitary_equivalence<T: Real>(m: &Moments<T>, mt: &Moments<T>, tol: T) -> Result<UnitaryTest<T>> {
    test_unitary_equivalence_seeded(m, mt, tol, DEFAULT_SEED)
}

pub fn test_unitary_equivalence_seeded<T: Real>(
    m: &Moments<T>,
    mt: &Moments<T>,
    tol: T,
    seed: u64,
) -> Result<UnitaryTest<T>> {
    m.same_shape(mt)?;
    for pos in 0..m.len() {
        let gap = spectral_gap(m.gram(pos), mt.gram(pos))?;
        if gap > tol {
            return Ok(UnitaryTest {
                equivalent: false,
                v: None,
                residual: T::infinity(),
                witness: Some(Witness::Spectral { position: pos, gap }),
                used_fallback: false,
            });
        }
    }

    let mats: Vec<Matrix<T>> = m.grams().iter().map(|g| g.matrix().clone()).collect();
    let mats_t: Vec<Matrix<T>> = mt.grams().iter().map(|g| g.matrix().clone()).collect();
    let refs: Vec<&Matrix<T>> = mats.iter().collect();
    let refs_t: Vec<&Matrix<T>> = mats_t.iter().collect();

    let mut rng = random::rng(seed);
    let t1 = combination_weights(&mut rng, refs.len());
    let mut t2 = combination_weights(&mut rng, refs.len());
    t2.shuffle(&mut rng);
    let (values, e) = eigenbasis(&combine(&refs, &t1))?;
    let (_, et) = eigenbasis(&combine(&refs_t, &t1))?;

    let mut v = Matrix::identity(m.fiber_dim());
    let mut best = residual(m, mt, &v);
    if relative_gap(&values) >= T::lit(GAP_TOL) {
        let b = combine(&refs, &t2).congruence(&e);
        let bt = combine(&refs_t, &t2).congruence(&et);
        let d = Matrix::from_diag(&align_phases(&b, &bt));
        let cand = e.matmul(&d).matmul(&et.adjoint());
        let r = residual(m, mt, &cand);
        if r < best {
            v = cand;
            best = r;
        }
    }

    let mut used_fallback = false;
    if best > tol {
        used_fallback = true;
        let (cand, r) = polar_iterations(&refs, &refs_t, m, mt, v.clone());
        if r < best {
            v = cand;
            best = r;
        }
    }

    let equivalent = best <= tol;
    Ok(UnitaryTest {
        equivalent,
        v: equivalent.then_some(v),
        residual: best,
        witness: (!equivalent).then_some(Witness::Floor { residual: best }),
        used_fallback,
    })
}

// V ← polar(Σ_α Ĝ_α V Ĝ̃_α), the fixed point of max Re tr Σ V*Ĝ_αV Ĝ̃_α
fn polar_iterations<T: Real>(
    refs: &[&Matrix<T>],
    refs_t: &[&Matrix<T>],
    m: &Moments<T>,
    mt: &Moments<T>,
    start: Matrix<T>,
) -> (Matrix<T>, T) {
    let n = start.rows();
    let weights: Vec<T> = refs
        .iter()
        .map(|g| {
            let top = herm_eig(g).map(|e| e.max()).unwrap_or(T::one());
            T::one() / (top * top)
        })
        .collect();
    let mut v = start;
    let mut best = (v.clone(), residual(m, mt, &v));
    for _ in 0..POLAR_ITERS {
        let mut acc = Matrix::zeros(n, n);
        for ((g, gt), &w) in refs.iter().zip(refs_t).zip(&weights) {
            acc = &acc + &g.matmul(&v).matmul(gt).scale(w);
        }
        let Ok(next) = polar_unitary(&acc) else { break };
        v = next;
        let r = residual(m, mt, &v);
        if r < best.1 {
            best = (v.clone(), r);
        }
    }
    best
}
