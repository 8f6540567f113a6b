//! Search for `C` minimizing `log(m₂/m₁)`.
//!
//! The search runs in the frame normalized at `α = 0`:
//! `N_α = G₀^{-1/2} G_α G₀^{-1/2}`, `Ñ_α = G̃₀^{-1/2} G̃_α G̃₀^{-1/2}` and
//! `C = G₀^{-1/2} K G̃₀^{1/2}`. Unitary `K` satisfies the `α = 0` constraint
//! exactly. With `N_α = L L*` and `Ñ_α = L̃ L̃*` the pencil eigenvalues are
//! `e^{Δs_α} / σ²(L* K L̃^{-*})`, so each objective evaluation costs one small
//! singular value problem per distinct pair of matrix parts.

use std::collections::HashMap;

use rand::seq::SliceRandom;

use super::certificate::{sandwich_ratio, Certificate};
use super::{align_phases, combination_weights, combine, eigenbasis, DEFAULT_SEED};
use crate::error::Result;
use crate::numerics::{cholesky, expm, forward_solve, polar_unitary, singular_values, Matrix};
use crate::random;
use crate::scalar::{cx, Real};
use crate::shiftcore::Moments;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub seed: u64,
    /// Iterations of the descent over unitary `K`.
    pub unitary_iters: usize,
    /// Iterations of the refinement over all invertible `K`.
    pub general_iters: usize,
    /// Number of starting points carried into the unitary descent.
    pub starts: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, unitary_iters: 200, general_iters: 200, starts: 3 }
    }
}

const FD_STEP: f64 = 1e-6;
const MIN_STEP: f64 = 1e-10;
const TARGET: f64 = 1e-14;

struct Group<T: Real> {
    f: Matrix<T>,
    t: Matrix<T>,
    ds_min: T,
    ds_max: T,
}

struct Problem<T: Real> {
    groups: Vec<Group<T>>,
    n: usize,
}

impl<T: Real> Problem<T> {
    fn objective(&self, k: &Matrix<T>) -> T {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for g in &self.groups {
            let p = g.f.matmul(k).matmul(&g.t);
            let Ok(sv) = singular_values(&p) else { return T::infinity() };
            let (smin, smax) = (sv[0], *sv.last().expect("non-empty"));
            if !(smin > T::zero()) || !smax.is_finite() {
                return T::infinity();
            }
            lo = lo.min(g.ds_min - T::lit(2.0) * smax.ln());
            hi = hi.max(g.ds_max - T::lit(2.0) * smin.ln());
        }
        hi - lo
    }
}

fn bits<T: Real>(m: &Matrix<T>) -> impl Iterator<Item = u64> + '_ {
    m.as_slice().iter().flat_map(|z| [z.re.as_f64().to_bits(), z.im.as_f64().to_bits()])
}

fn skew_basis<T: Real>(n: usize) -> Vec<Matrix<T>> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut h = Matrix::zeros(n, n);
        h[(i, i)] = cx(T::zero(), T::one());
        out.push(h);
        for j in i + 1..n {
            let mut a = Matrix::zeros(n, n);
            a[(i, j)] = cx(T::one(), T::zero());
            a[(j, i)] = cx(-T::one(), T::zero());
            out.push(a);
            let mut b = Matrix::zeros(n, n);
            b[(i, j)] = cx(T::zero(), T::one());
            b[(j, i)] = cx(T::zero(), T::one());
            out.push(b);
        }
    }
    out
}

fn full_basis<T: Real>(n: usize) -> Vec<Matrix<T>> {
    let mut out = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            for unit in [cx(T::one(), T::zero()), cx(T::zero(), T::one())] {
                let mut e = Matrix::zeros(n, n);
                e[(i, j)] = unit;
                out.push(e);
            }
        }
    }
    out
}

/// Descent by central-difference gradients along `basis`, moving with
/// `step(K, H, t)` and halving `t` until the objective improves.
fn descend<T: Real>(
    prob: &Problem<T>,
    start: Matrix<T>,
    f0: T,
    basis: &[Matrix<T>],
    iters: usize,
    step: impl Fn(&Matrix<T>, &Matrix<T>, T) -> Option<Matrix<T>>,
) -> (Matrix<T>, T) {
    let h = T::lit(FD_STEP);
    let (mut k, mut f) = (start, f0);
    let mut t = T::lit(0.5);
    for _ in 0..iters {
        if f <= T::lit(TARGET) {
            break;
        }
        let mut dir = Matrix::zeros(prob.n, prob.n);
        for e in basis {
            let plus = prob.objective(&k.matmul(&expm(&e.scale(h))));
            let minus = prob.objective(&k.matmul(&expm(&e.scale(-h))));
            let g = (plus - minus) / (T::lit(2.0) * h);
            if g.is_finite() {
                dir = &dir - &e.scale(g);
            }
        }
        let norm = dir.frobenius();
        if !(norm > T::zero()) {
            break;
        }
        let dir = dir.scale(T::one() / norm);
        let mut improved = false;
        while t >= T::lit(MIN_STEP) {
            if let Some(cand) = step(&k, &dir, t) {
                let fc = prob.objective(&cand);
                if fc < f {
                    k = cand;
                    f = fc;
                    improved = true;
                    break;
                }
            }
            t = t * T::lit(0.5);
        }
        if !improved {
            break;
        }
        t = (t * T::lit(2.0)).min(T::one());
    }
    (k, f)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n > 5 {
        return vec![(0..n).collect(), (0..n).rev().collect()];
    }
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    permute(&mut current, 0, &mut out);
    out.sort();
    out
}

fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, out);
        v.swap(k, i);
    }
}

fn permute_columns<T: Real>(m: &Matrix<T>, perm: &[usize]) -> Matrix<T> {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, perm[j])])
}

/// Starting points `E Π D Ẽ*` aligning eigenbases of random combinations.
fn alignment_candidates<T: Real>(norm: &[&Matrix<T>], norm_t: &[&Matrix<T>], seed: u64) -> Result<Vec<Matrix<T>>> {
    let mut rng = random::rng(seed);
    let t1 = combination_weights(&mut rng, norm.len());
    let mut t2 = combination_weights(&mut rng, norm.len());
    t2.shuffle(&mut rng);
    let (_, e) = eigenbasis(&combine(norm, &t1))?;
    let (_, et) = eigenbasis(&combine(norm_t, &t1))?;
    let s2 = combine(norm, &t2);
    let s2t = combine(norm_t, &t2);
    let bt = s2t.congruence(&et);
    let mut out = Vec::new();
    for perm in permutations(e.rows()) {
        let ep = permute_columns(&e, &perm);
        let b = s2.congruence(&ep);
        let phases = align_phases(&b, &bt);
        let d = Matrix::from_diag(&phases);
        out.push(ep.matmul(&d).matmul(&et.adjoint()));
    }
    Ok(out)
}

/// Best certificate found by multistart descent; never worse than the
/// `α = 0` normalized start `C₀ = G₀^{-1/2} G̃₀^{1/2}`.
pub fn optimize_c<T: Real>(m: &Moments<T>, mt: &Moments<T>, opts: &OptimizeOptions) -> Result<Certificate<T>> {
    m.same_shape(mt)?;
    let n = m.fiber_dim();
    let g0_inv_sqrt = m.gram(0).inv_sqrt()?.matrix().clone();
    let gt0_inv_sqrt = mt.gram(0).inv_sqrt()?.matrix().clone();
    let gt0_sqrt = mt.gram(0).sqrt()?.matrix().clone();

    // normalized frames, grouped by bit-identical matrix parts
    let mut groups: Vec<Group<T>> = Vec::new();
    let mut reps: Vec<(Matrix<T>, Matrix<T>)> = Vec::new();
    let mut lookup: HashMap<Vec<u64>, usize> = HashMap::new();
    for pos in 0..m.len() {
        let na = m.gram(pos).congruence(&g0_inv_sqrt)?;
        let nt = mt.gram(pos).congruence(&gt0_inv_sqrt)?;
        let ds = nt.logscale() - na.logscale();
        let key: Vec<u64> = bits(na.matrix()).chain(bits(nt.matrix())).collect();
        match lookup.get(&key) {
            Some(&g) => {
                groups[g].ds_min = groups[g].ds_min.min(ds);
                groups[g].ds_max = groups[g].ds_max.max(ds);
            }
            None => {
                let l = cholesky(na.matrix())?;
                let lt = cholesky(nt.matrix())?;
                let lt_inv = forward_solve(&lt, &Matrix::identity(n));
                lookup.insert(key, groups.len());
                groups.push(Group { f: l.adjoint(), t: lt_inv.adjoint(), ds_min: ds, ds_max: ds });
                reps.push((na.matrix().clone(), nt.matrix().clone()));
            }
        }
    }
    let prob = Problem { groups, n };

    let identity = Matrix::<T>::identity(n);
    let mut starts = vec![(prob.objective(&identity), identity.clone())];
    if prob.groups.len() > 1 {
        let norm: Vec<&Matrix<T>> = reps.iter().map(|r| &r.0).collect();
        let norm_t: Vec<&Matrix<T>> = reps.iter().map(|r| &r.1).collect();
        for k in alignment_candidates(&norm, &norm_t, opts.seed)? {
            starts.push((prob.objective(&k), k));
        }
    }
    // stable sort keeps the identity first among ties
    starts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    let skew = skew_basis::<T>(n);
    let retract = |k: &Matrix<T>, h: &Matrix<T>, t: T| polar_unitary(&(k + &k.matmul(&h.scale(t)))).ok();
    let mut best: Option<(Matrix<T>, T)> = None;
    for (f0, k0) in starts.into_iter().take(opts.starts.max(1)) {
        let (k, f) = descend(&prob, k0, f0, &skew, opts.unitary_iters, retract);
        if best.as_ref().is_none_or(|b| f < b.1) {
            best = Some((k, f));
        }
    }
    let (k, f) = best.expect("at least one start");

    let general = full_basis::<T>(n);
    let exp_step = |k: &Matrix<T>, h: &Matrix<T>, t: T| {
        let next = k.matmul(&expm(&h.scale(t)));
        next.is_finite().then_some(next)
    };
    let (k, _) = descend(&prob, k, f, &general, opts.general_iters, exp_step);

    let c_found = g0_inv_sqrt.matmul(&k).matmul(&gt0_sqrt);
    let c0 = g0_inv_sqrt.matmul(&gt0_sqrt);
    let found = sandwich_ratio(m, mt, &c_found);
    let start = sandwich_ratio(m, mt, &c0)?;
    Ok(match found {
        Ok(r) if r.log_ratio <= start.log_ratio => r.into_certificate(c_found),
        _ => start.into_certificate(c0),
    })
}
