//! Truncated operator-valued multishifts.
//!
//! A [`Weights`] system holds the raw operator weights `A⁽ʲ⁾_α`; a
//! [`Moments`] system holds the Grams `G_α = B_α* B_α` that every
//! equivalence criterion depends on. Matrix realizations of the shifts use
//! orthonormal coordinates at each level (`y = G_α^{1/2} x`), in which the
//! shift `z_j` acts from level `α` to `α + ε_j` by `G_{α+ε_j}^{1/2} G_α^{-1/2}`.

use crate::error::{Error, Result};
use crate::lattice::{monotone_path, reverse_path, MultiIndex, Step, Truncation};
use crate::numerics::{pd_solve, singular_values, LogPd, Matrix, RANK_TOL};
use crate::scalar::Real;

/// Relative tolerance of the commutation condition.
pub const COMMUTATION_TOL: f64 = 1e-10;

/// A matrix carried together with a natural-log scale factor.
#[derive(Debug, Clone)]
pub struct Scaled<T: Real> {
    pub log: T,
    pub matrix: Matrix<T>,
}

impl<T: Real> Scaled<T> {
    pub fn identity(n: usize) -> Self {
        Self { log: T::zero(), matrix: Matrix::identity(n) }
    }

    fn normalized(log: T, matrix: Matrix<T>) -> Self {
        let s = matrix.max_abs();
        if s > T::zero() {
            Self { log: log + s.ln(), matrix: matrix.scale(T::one() / s) }
        } else {
            Self { log, matrix }
        }
    }

    /// `left · self`.
    pub fn premul(&self, left: &Matrix<T>) -> Self {
        Self::normalized(self.log, left.matmul(&self.matrix))
    }

    pub fn value(&self) -> Matrix<T> {
        self.matrix.scale(self.log.exp())
    }

    /// Relative Frobenius distance `‖a − b‖ / max(‖a‖, ‖b‖)`.
    pub fn relative_distance(&self, other: &Scaled<T>) -> T {
        let top = self.log.max(other.log);
        let a = self.matrix.scale((self.log - top).exp());
        let b = other.matrix.scale((other.log - top).exp());
        let denom = a.frobenius().max(b.frobenius());
        if denom == T::zero() {
            return T::zero();
        }
        (&a - &b).frobenius() / denom
    }
}

/// Raw weights `A⁽ʲ⁾_α` for `|α| ≤ N − 1` and every direction `j`.
#[derive(Debug, Clone)]
pub struct Weights<T: Real> {
    lattice: Truncation,
    fiber_dim: usize,
    // weights[pos][j], pos over the degree ≤ N−1 prefix of the lattice
    weights: Vec<Vec<Matrix<T>>>,
}

impl<T: Real> Weights<T> {
    pub fn new(lattice: Truncation, fiber_dim: usize, weights: Vec<Vec<Matrix<T>>>) -> Result<Self> {
        let expected = if lattice.max_degree() == 0 { 0 } else { lattice.prefix_len(lattice.max_degree() - 1) };
        if weights.len() != expected {
            return Err(Error::DimMismatch(format!("expected weights at {expected} indices, got {}", weights.len())));
        }
        for (pos, row) in weights.iter().enumerate() {
            if row.len() != lattice.d() {
                return Err(Error::DimMismatch(format!(
                    "index {} has {} directions, expected {}",
                    lattice.index(pos),
                    row.len(),
                    lattice.d()
                )));
            }
            if row.iter().any(|m| m.rows() != fiber_dim || m.cols() != fiber_dim) {
                return Err(Error::DimMismatch(format!(
                    "weight at {} is not {fiber_dim}x{fiber_dim}",
                    lattice.index(pos)
                )));
            }
            if row.iter().any(|m| !m.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { lattice, fiber_dim, weights })
    }

    /// Builds the weights from a function of `(α, j)`.
    pub fn from_fn(
        lattice: Truncation,
        fiber_dim: usize,
        mut f: impl FnMut(&MultiIndex, usize) -> Matrix<T>,
    ) -> Result<Self> {
        let count = if lattice.max_degree() == 0 { 0 } else { lattice.prefix_len(lattice.max_degree() - 1) };
        let weights = (0..count).map(|pos| (0..lattice.d()).map(|j| f(lattice.index(pos), j)).collect()).collect();
        Self::new(lattice, fiber_dim, weights)
    }

    pub fn lattice(&self) -> &Truncation {
        &self.lattice
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    /// Number of indices that carry weights.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, pos: usize, j: usize) -> &Matrix<T> {
        &self.weights[pos][j]
    }

    pub fn weight_at(&self, alpha: &MultiIndex, j: usize) -> Option<&Matrix<T>> {
        let pos = self.lattice.position(alpha)?;
        self.weights.get(pos).map(|row| &row[j])
    }

    /// Ordered product of weights along `path` (later steps multiply on the left).
    pub fn path_product(&self, path: &[Step]) -> Result<Scaled<T>> {
        let mut acc = Scaled::identity(self.fiber_dim);
        for step in path {
            let w = self.weight_at(&step.from, step.direction).ok_or_else(|| {
                Error::IndexOutOfRange(format!("no weight at {} direction {}", step.from, step.direction))
            })?;
            acc = acc.premul(w);
        }
        Ok(acc)
    }
}

/// Outcome of [`validate_weights`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub passed: bool,
    pub max_commutation_residual: f64,
    pub worst_commutation: Option<(MultiIndex, usize, usize)>,
    /// Smallest singular value over all weights.
    pub min_singular_value: f64,
    /// Smallest `σ_min / σ_max` over all weights.
    pub min_singular_ratio: f64,
    /// Largest spectral norm over all stored weights.
    pub max_norm: f64,
    pub failures: Vec<String>,
}

/// Checks invertibility, boundedness and the commutation condition
/// `A⁽ⁱ⁾_{α+ε_j} A⁽ʲ⁾_α = A⁽ʲ⁾_{α+ε_i} A⁽ⁱ⁾_α`.
pub fn validate_weights<T: Real>(w: &Weights<T>) -> ValidationReport {
    let mut failures = Vec::new();
    let mut min_sv = f64::INFINITY;
    let mut min_ratio = f64::INFINITY;
    let mut max_norm = 0.0f64;
    let lattice = w.lattice();
    for pos in 0..w.len() {
        for j in 0..lattice.d() {
            match singular_values(w.weight(pos, j)) {
                Ok(sv) => {
                    let (lo, hi) = (sv[0].as_f64(), sv.last().copied().unwrap_or(T::zero()).as_f64());
                    min_sv = min_sv.min(lo);
                    max_norm = max_norm.max(hi);
                    let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
                    min_ratio = min_ratio.min(ratio);
                    if !(ratio > RANK_TOL.max(T::epsilon().as_f64() * 16.0)) {
                        failures.push(format!(
                            "weight at {} direction {} is not invertible",
                            lattice.index(pos),
                            j + 1
                        ));
                    }
                }
                Err(e) => failures.push(format!("weight at {} direction {}: {e}", lattice.index(pos), j + 1)),
            }
        }
    }

    let mut max_res = 0.0f64;
    let mut worst = None;
    let tol = T::tol(COMMUTATION_TOL).as_f64();
    let limit = if lattice.max_degree() >= 2 { lattice.prefix_len(lattice.max_degree() - 2) } else { 0 };
    for pos in 0..limit {
        for i in 0..lattice.d() {
            for j in i + 1..lattice.d() {
                let pi = lattice.up(pos, i).expect("interior index");
                let pj = lattice.up(pos, j).expect("interior index");
                let lhs = w.weight(pj, i).matmul(w.weight(pos, j));
                let rhs = w.weight(pi, j).matmul(w.weight(pos, i));
                let denom = lhs.frobenius().max(rhs.frobenius());
                let res = if denom > T::zero() { ((&lhs - &rhs).frobenius() / denom).as_f64() } else { 0.0 };
                if res > max_res || worst.is_none() {
                    max_res = max_res.max(res);
                    worst = Some((lattice.index(pos).clone(), i, j));
                }
                if res > tol {
                    failures.push(format!(
                        "commutation fails at {} for directions ({}, {}): residual {res:.3e}",
                        lattice.index(pos),
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
    }
    if !max_norm.is_finite() {
        failures.push("weights are unbounded".into());
    }
    ValidationReport {
        passed: failures.is_empty(),
        max_commutation_residual: max_res,
        worst_commutation: worst,
        min_singular_value: if min_sv.is_finite() { min_sv } else { 0.0 },
        min_singular_ratio: if min_ratio.is_finite() { min_ratio } else { 1.0 },
        max_norm,
        failures,
    }
}

/// Moment family `α ↦ G_α` on the full simplex `|α| ≤ N`.
#[derive(Debug, Clone)]
pub struct Moments<T: Real> {
    lattice: Truncation,
    fiber_dim: usize,
    grams: Vec<LogPd<T>>,
}

impl<T: Real> Moments<T> {
    pub fn new(lattice: Truncation, fiber_dim: usize, grams: Vec<LogPd<T>>) -> Result<Self> {
        if grams.len() != lattice.len() {
            return Err(Error::DimMismatch(format!(
                "{} grams for a simplex of {} indices",
                grams.len(),
                lattice.len()
            )));
        }
        if let Some(g) = grams.iter().find(|g| g.dim() != fiber_dim) {
            return Err(Error::DimMismatch(format!(
                "gram of dimension {} in a fiber of dimension {fiber_dim}",
                g.dim()
            )));
        }
        Ok(Self { lattice, fiber_dim, grams })
    }

    pub fn from_fn(
        lattice: Truncation,
        fiber_dim: usize,
        mut f: impl FnMut(&MultiIndex) -> Result<LogPd<T>>,
    ) -> Result<Self> {
        let grams = lattice.indices().iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        Self::new(lattice, fiber_dim, grams)
    }

    pub fn lattice(&self) -> &Truncation {
        &self.lattice
    }

    pub fn d(&self) -> usize {
        self.lattice.d()
    }

    pub fn max_degree(&self) -> usize {
        self.lattice.max_degree()
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn gram(&self, pos: usize) -> &LogPd<T> {
        &self.grams[pos]
    }

    pub fn grams(&self) -> &[LogPd<T>] {
        &self.grams
    }

    /// Total dimension `n · |simplex|` of the truncated space.
    pub fn total_dim(&self) -> usize {
        self.fiber_dim * self.grams.len()
    }

    /// The same system restricted to `|α| ≤ k`.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        let lattice = Truncation::new(self.d(), k.min(self.max_degree()))?;
        let grams = self.grams[..lattice.len()].to_vec();
        Self::new(lattice, self.fiber_dim, grams)
    }

    /// Applies `G_α ↦ P* G_α P` to every gram.
    pub fn congruence(&self, p: &Matrix<T>) -> Result<Self> {
        let grams = self.grams.iter().map(|g| g.congruence(p)).collect::<Result<Vec<_>>>()?;
        Self::new(self.lattice.clone(), self.fiber_dim, grams)
    }

    /// Multiplies every gram by `exp(delta)`.
    pub fn scale_log(&self, delta: T) -> Self {
        Self {
            lattice: self.lattice.clone(),
            fiber_dim: self.fiber_dim,
            grams: self.grams.iter().map(|g| g.scale_log(delta)).collect(),
        }
    }

    pub fn same_shape(&self, other: &Moments<T>) -> Result<()> {
        if self.d() != other.d() || self.max_degree() != other.max_degree() || self.fiber_dim != other.fiber_dim {
            return Err(Error::DimMismatch(format!(
                "systems differ in shape: (d={}, N={}, n={}) vs (d={}, N={}, n={})",
                self.d(),
                self.max_degree(),
                self.fiber_dim,
                other.d(),
                other.max_degree(),
                other.fiber_dim
            )));
        }
        Ok(())
    }

    /// Square roots and inverse square roots of every gram.
    pub fn frames(&self) -> Result<Vec<(LogPd<T>, LogPd<T>)>> {
        self.grams.iter().map(|g| Ok((g.sqrt()?, g.inv_sqrt()?))).collect()
    }

    pub fn cast<U: Real>(&self) -> Moments<U> {
        Moments {
            lattice: self.lattice.clone(),
            fiber_dim: self.fiber_dim,
            grams: self.grams.iter().map(LogPd::cast).collect(),
        }
    }
}

/// `G_α = P_α* G₀ P_α` with `P_α` the weight product along the canonical path.
pub fn moments_from_weights<T: Real>(w: &Weights<T>, g0: &LogPd<T>) -> Result<Moments<T>> {
    let report = validate_weights(w);
    if !report.passed {
        return Err(Error::ValidationFailed(report.failures.join("; ")));
    }
    if g0.dim() != w.fiber_dim() {
        return Err(Error::DimMismatch(format!("G0 has dimension {}, fiber is {}", g0.dim(), w.fiber_dim())));
    }
    let lattice = w.lattice().clone();
    let mut products: Vec<Scaled<T>> = Vec::with_capacity(lattice.len());
    let mut grams = Vec::with_capacity(lattice.len());
    for pos in 0..lattice.len() {
        let alpha = lattice.index(pos);
        let product = match (0..lattice.d()).rev().find(|&j| alpha.components()[j] > 0) {
            None => Scaled::identity(w.fiber_dim()),
            Some(j) => {
                let prev = lattice.down(pos, j).expect("downward closed");
                products[prev].premul(w.weight(prev, j))
            }
        };
        let gram = g0.congruence(&product.matrix)?.scale_log(T::lit(2.0) * product.log);
        grams.push(gram);
        products.push(product);
    }
    Moments::new(lattice, w.fiber_dim(), grams)
}

/// Orthonormal-frame weights `A⁽ʲ⁾_α = G_{α+ε_j}^{1/2} G_α^{-1/2}`.
pub fn canonical_weights<T: Real>(m: &Moments<T>) -> Result<Weights<T>> {
    let frames = m.frames()?;
    let lattice = m.lattice().clone();
    Weights::from_fn(lattice.clone(), m.fiber_dim(), |alpha, j| {
        let pos = lattice.position(alpha).expect("index in lattice");
        let up = lattice.up(pos, j).expect("weights stop one degree below N");
        frame_weight(&frames[up].0, &frames[pos].1)
    })
}

fn frame_weight<T: Real>(sqrt_up: &LogPd<T>, inv_sqrt: &LogPd<T>) -> Matrix<T> {
    sqrt_up.matrix().matmul(inv_sqrt.matrix()).scale((sqrt_up.logscale() + inv_sqrt.logscale()).exp())
}

/// Block matrix of the truncated shift `z_j` in orthonormal coordinates.
#[derive(Debug, Clone)]
pub struct MzBlocks<T: Real> {
    pub direction: usize,
    pub lattice: Truncation,
    pub fiber_dim: usize,
    /// Block from level `α` to `α + ε_j`; `None` where `α + ε_j` leaves the truncation.
    pub blocks: Vec<Option<Matrix<T>>>,
    /// `max_α ‖block(α)‖`.
    pub norm_estimate: T,
    /// Smallest singular value over all blocks (positive for invertible blocks).
    pub min_singular_value: T,
}

impl<T: Real> MzBlocks<T> {
    /// Dense `D × D` realization with `D = n · |simplex|`.
    pub fn to_dense(&self) -> Matrix<T> {
        let n = self.fiber_dim;
        let dim = n * self.lattice.len();
        let mut out = Matrix::zeros(dim, dim);
        for (pos, block) in self.blocks.iter().enumerate() {
            if let Some(b) = block {
                let up = self.lattice.up(pos, self.direction).expect("block only where raised index exists");
                out.set_block(up * n, pos * n, b);
            }
        }
        out
    }
}

/// Truncated `𝓜_{z_j}` for direction `j` (0-based).
pub fn build_mz<T: Real>(m: &Moments<T>, j: usize) -> Result<MzBlocks<T>> {
    if j >= m.d() {
        return Err(Error::InvalidArgument(format!("direction {j} out of range for d = {}", m.d())));
    }
    let frames = m.frames()?;
    let lattice = m.lattice().clone();
    let mut norm = T::zero();
    let mut min_sv = T::infinity();
    let mut blocks = Vec::with_capacity(lattice.len());
    for pos in 0..lattice.len() {
        match lattice.up(pos, j) {
            Some(up) => {
                let b = frame_weight(&frames[up].0, &frames[pos].1);
                let sv = singular_values(&b)?;
                norm = norm.max(*sv.last().expect("non-empty"));
                min_sv = min_sv.min(sv[0]);
                blocks.push(Some(b));
            }
            None => blocks.push(None),
        }
    }
    if !min_sv.is_finite() {
        min_sv = T::zero();
    }
    Ok(MzBlocks {
        direction: j,
        lattice,
        fiber_dim: m.fiber_dim(),
        blocks,
        norm_estimate: norm,
        min_singular_value: min_sv,
    })
}

/// Result of [`check_adjoint_formula`].
#[derive(Debug, Clone, Copy)]
pub struct AdjointCheck<T: Real> {
    pub max_residual: T,
    pub blocks_checked: usize,
}

/// Compares the conjugate transpose of the truncated shift against the
/// backward map `x z^β ↦ G_{β−ε_j}^{-1} G_β x z^{β−ε_j}` expressed in the same
/// orthonormal coordinates. Residuals are relative Frobenius per block.
pub fn check_adjoint_formula<T: Real>(m: &Moments<T>, j: usize) -> Result<AdjointCheck<T>> {
    let mz = build_mz(m, j)?;
    let frames = m.frames()?;
    let lattice = m.lattice();
    let mut max_res = T::zero();
    let mut count = 0;
    for beta in 0..lattice.len() {
        let Some(alpha) = lattice.down(beta, j) else { continue };
        let forward = mz.blocks[alpha].as_ref().expect("interior block");
        let adjoint = Scaled::normalized(T::zero(), forward.adjoint());

        let (ga, gb) = (m.gram(alpha), m.gram(beta));
        let ratio = pd_solve(ga.matrix(), gb.matrix())?;
        let (sqrt_a, _) = &frames[alpha];
        let (_, inv_sqrt_b) = &frames[beta];
        let backward = sqrt_a.matrix().matmul(&ratio).matmul(inv_sqrt_b.matrix());
        let log = sqrt_a.logscale() + (gb.logscale() - ga.logscale()) + inv_sqrt_b.logscale();
        let backward = Scaled::normalized(log, backward);

        max_res = max_res.max(adjoint.relative_distance(&backward));
        count += 1;
    }
    Ok(AdjointCheck { max_residual: max_res, blocks_checked: count })
}

/// Largest relative gap between the canonical and reverse-path weight products.
pub fn path_independence_residual<T: Real>(w: &Weights<T>) -> Result<T> {
    let mut worst = T::zero();
    for alpha in w.lattice().indices() {
        let a = w.path_product(&monotone_path(alpha))?;
        let b = w.path_product(&reverse_path(alpha))?;
        worst = worst.max(a.relative_distance(&b));
    }
    Ok(worst)
}
