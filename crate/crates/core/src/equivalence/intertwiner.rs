//! Intertwiners `X` with `X 𝓜_{z_j} = 𝓜̃_{z_j} X` on the truncated spaces,
//! in orthonormal level coordinates. Block `(γ, β)` of `X` maps level `β`
//! to level `γ`.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_distr::StandardNormal;

use super::certificate::{sandwich_ratio, verify_certificate, Certificate};
use crate::error::{Error, Result};
use crate::lattice::Truncation;
use crate::numerics::{inverse, is_invertible, singular_values, LogPd, Matrix};
use crate::scalar::{cx, Cx, Real};
use crate::shiftcore::{build_mz, Moments, MzBlocks};

/// Largest total dimension `n · |simplex|` the brute-force oracle accepts.
pub const BRUTE_FORCE_CAP: usize = 512;

const PIVOT_TOL: f64 = 1e-10;

/// Dense operator on the truncated space with level-block access.
#[derive(Debug, Clone, PartialEq)]
pub struct Intertwiner<T: Real> {
    lattice: Truncation,
    fiber_dim: usize,
    matrix: Matrix<T>,
}

impl<T: Real> Intertwiner<T> {
    pub fn new(lattice: Truncation, fiber_dim: usize, matrix: Matrix<T>) -> Result<Self> {
        let dim = fiber_dim * lattice.len();
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::DimMismatch(format!("intertwiner must be {dim}x{dim}")));
        }
        Ok(Self { lattice, fiber_dim, matrix })
    }

    pub fn lattice(&self) -> &Truncation {
        &self.lattice
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    /// Block from level `β` (column) to level `γ` (row), by lattice position.
    pub fn block(&self, gamma: usize, beta: usize) -> Matrix<T> {
        let n = self.fiber_dim;
        self.matrix.sub_block(gamma * n, beta * n, n, n)
    }
}

#[derive(Debug, Clone)]
pub struct DiagonalIntertwiner<T: Real> {
    pub x: Intertwiner<T>,
    /// `max ‖X_{α+ε_j} M_j(α) − M̃_j(α) X_α‖ / (‖X‖ · max(‖𝓜_{z_j}‖, ‖𝓜̃_{z_j}‖))`.
    pub intertwining_residual: T,
    pub min_block_singular: T,
    pub max_block_singular: T,
    /// `(√m₁, √m₂)` from [`sandwich_ratio`] for the same `C`.
    pub sandwich_bounds: (T, T),
}

fn scaled_product<T: Real>(a: &LogPd<T>, mid: &Matrix<T>, b: &LogPd<T>) -> Matrix<T> {
    a.matrix().matmul(mid).matmul(b.matrix()).scale((a.logscale() + b.logscale()).exp())
}

/// Block-diagonal `X_α = G̃_α^{1/2} C⁻¹ G_α^{-1/2}`, the coefficient map `f ↦ C⁻¹ f`.
pub fn diagonal_intertwiner<T: Real>(m: &Moments<T>, mt: &Moments<T>, c: &Matrix<T>) -> Result<DiagonalIntertwiner<T>> {
    let ratio = sandwich_ratio(m, mt, c)?;
    let c_inv = inverse(c)?;
    let n = m.fiber_dim();
    let frames = m.frames()?;
    let frames_t = mt.frames()?;
    let mut dense = Matrix::zeros(m.total_dim(), m.total_dim());
    let mut blocks = Vec::with_capacity(m.len());
    let (mut smin, mut smax) = (T::infinity(), T::zero());
    for pos in 0..m.len() {
        let b = scaled_product(&frames_t[pos].0, &c_inv, &frames[pos].1);
        if !b.is_finite() {
            return Err(Error::NonFinite);
        }
        let sv = singular_values(&b)?;
        smin = smin.min(sv[0]);
        smax = smax.max(*sv.last().expect("non-empty"));
        dense.set_block(pos * n, pos * n, &b);
        blocks.push(b);
    }
    let mut residual = T::zero();
    for j in 0..m.d() {
        let (mz, mzt) = (build_mz(m, j)?, build_mz(mt, j)?);
        let denom = smax * mz.norm_estimate.max(mzt.norm_estimate);
        for pos in 0..m.len() {
            let (Some(a), Some(at)) = (&mz.blocks[pos], &mzt.blocks[pos]) else { continue };
            let up = m.lattice().up(pos, j).expect("interior block");
            let r = &blocks[up].matmul(a) - &at.matmul(&blocks[pos]);
            if denom > T::zero() {
                residual = residual.max(r.frobenius() / denom);
            }
        }
    }
    Ok(DiagonalIntertwiner {
        x: Intertwiner::new(m.lattice().clone(), n, dense)?,
        intertwining_residual: residual,
        min_block_singular: smin,
        max_block_singular: smax,
        sandwich_bounds: ((ratio.log_m1 * T::lit(0.5)).exp(), (ratio.log_m2 * T::lit(0.5)).exp()),
    })
}

/// Orthonormal basis of the solutions supported on one offset class `γ − β = δ`.
#[derive(Debug, Clone)]
struct ClassBasis<T: Real> {
    pairs: Vec<(usize, usize)>,
    basis: Vec<Vec<Cx<T>>>,
}

/// Solution space of the truncated intertwining equations.
#[derive(Debug, Clone)]
pub struct IntertwinerSpace<T: Real> {
    m: Moments<T>,
    mt: Moments<T>,
    classes: Vec<ClassBasis<T>>,
    equations: usize,
}

/// Structural checks on one element of the solution space.
#[derive(Debug, Clone)]
pub struct OracleCheck<T: Real> {
    /// `max_{β≠0} ‖X_{0β}‖ / ‖X‖`.
    pub level0_residual: T,
    /// `max_α ‖X_{αα} − G̃_α^{1/2} G̃₀^{-1/2} X₀₀ G₀^{1/2} G_α^{-1/2}‖`, relative per block.
    pub recursion_residual: T,
    /// `C = G₀^{-1/2} (X⁻¹)₀₀ G̃₀^{1/2}`, `m₁ = 1/‖X⁻¹‖²`, `m₂ = ‖X‖²`.
    pub certificate: Certificate<T>,
    pub certificate_passed: bool,
}

impl<T: Real> IntertwinerSpace<T> {
    pub fn dimension(&self) -> usize {
        self.classes.iter().map(|c| c.basis.len()).sum()
    }

    /// Number of scalar equations assembled (boundary equations excluded).
    pub fn equation_count(&self) -> usize {
        self.equations
    }

    fn assemble(&self, mut coeff: impl FnMut(usize, usize) -> Cx<T>) -> Intertwiner<T> {
        let n = self.m.fiber_dim();
        let dim = self.m.total_dim();
        let mut x = Matrix::zeros(dim, dim);
        let mut global = 0;
        for class in &self.classes {
            for (b, vec) in class.basis.iter().enumerate() {
                let w = coeff(global, b);
                global += 1;
                if w == Cx::new(T::zero(), T::zero()) {
                    continue;
                }
                for (p, &(g, bt)) in class.pairs.iter().enumerate() {
                    for r in 0..n {
                        for k in 0..n {
                            x[(g * n + r, bt * n + k)] = x[(g * n + r, bt * n + k)] + w * vec[p * n * n + r * n + k];
                        }
                    }
                }
            }
        }
        Intertwiner { lattice: self.m.lattice().clone(), fiber_dim: n, matrix: x }
    }

    /// The `i`-th orthonormal basis element.
    pub fn basis_element(&self, i: usize) -> Intertwiner<T> {
        let one = Cx::new(T::one(), T::zero());
        self.assemble(|g, _| if g == i { one } else { Cx::new(T::zero(), T::zero()) })
    }

    /// `Σ_i w_i X_i`.
    pub fn combination(&self, weights: &[Cx<T>]) -> Result<Intertwiner<T>> {
        if weights.len() != self.dimension() {
            return Err(Error::DimMismatch(format!(
                "{} weights for a space of dimension {}",
                weights.len(),
                self.dimension()
            )));
        }
        Ok(self.assemble(|g, _| weights[g]))
    }

    /// Element with independent standard complex Gaussian coordinates.
    pub fn sample(&self, rng: &mut impl Rng) -> Intertwiner<T> {
        let weights: Vec<Cx<T>> = (0..self.dimension())
            .map(|_| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                cx(T::lit(a), T::lit(b))
            })
            .collect();
        self.assemble(|g, _| weights[g])
    }

    /// Relative Frobenius distance from `x` to the solution space.
    pub fn membership_residual(&self, x: &Intertwiner<T>) -> T {
        let n = self.m.fiber_dim();
        let total = x.matrix.frobenius();
        if total == T::zero() {
            return T::zero();
        }
        let mut acc = T::zero();
        for class in &self.classes {
            let mut v: Vec<Cx<T>> = Vec::with_capacity(class.pairs.len() * n * n);
            for &(g, b) in &class.pairs {
                for r in 0..n {
                    for k in 0..n {
                        v.push(x.matrix[(g * n + r, b * n + k)]);
                    }
                }
            }
            for q in &class.basis {
                let proj = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi = *vi - *qi * proj;
                }
            }
            acc = acc + v.iter().map(|z| z.norm_sqr()).sum::<T>();
        }
        acc.sqrt() / total
    }

    /// Level-0 annihilation, diagonal recursion and the induced certificate.
    pub fn check(&self, x: &Intertwiner<T>, tol: T) -> Result<OracleCheck<T>> {
        let (m, mt) = (&self.m, &self.mt);
        let total = x.matrix.frobenius();
        let mut level0 = T::zero();
        for beta in 1..m.len() {
            level0 = level0.max(x.block(0, beta).frobenius() / total);
        }

        let frames = m.frames()?;
        let frames_t = mt.frames()?;
        let x00 = x.block(0, 0);
        let mut recursion = T::zero();
        for pos in 0..m.len() {
            let left = scaled_product(&frames_t[pos].0, &Matrix::identity(m.fiber_dim()), &frames_t[0].1);
            let right = scaled_product(&frames[0].0, &Matrix::identity(m.fiber_dim()), &frames[pos].1);
            let predicted = left.matmul(&x00).matmul(&right);
            let actual = x.block(pos, pos);
            let denom = predicted.frobenius().max(actual.frobenius());
            if denom > T::zero() {
                recursion = recursion.max((&actual - &predicted).frobenius() / denom);
            }
        }

        if !is_invertible(&x.matrix) {
            return Err(Error::SingularC);
        }
        let x_inv = inverse(&x.matrix)?;
        let norm_x = *singular_values(&x.matrix)?.last().expect("non-empty");
        let norm_inv = *singular_values(&x_inv)?.last().expect("non-empty");
        let n = m.fiber_dim();
        let inv00 = x_inv.sub_block(0, 0, n, n);
        let c = scaled_product(&frames[0].1, &inv00, &frames_t[0].0);
        let certificate = Certificate { c, log_m1: T::lit(-2.0) * norm_inv.ln(), log_m2: T::lit(2.0) * norm_x.ln() };
        let passed = verify_certificate(m, mt, &certificate, tol)?.passed;
        Ok(OracleCheck {
            level0_residual: level0,
            recursion_residual: recursion,
            certificate,
            certificate_passed: passed,
        })
    }
}

fn dot<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    a.iter().zip(b).fold(Cx::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// Null space of a dense row-major `rows × cols` system by Gauss-Jordan
/// elimination with complete pivoting, orthonormalized.
fn nullspace<T: Real>(mut a: Vec<Cx<T>>, rows: usize, cols: usize) -> Vec<Vec<Cx<T>>> {
    let scale = a.iter().fold(T::zero(), |m, z| m.max(z.norm()));
    let tol = T::tol(PIVOT_TOL) * scale;
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut rank = 0;
    while rank < rows.min(cols) {
        let (mut pr, mut pc, mut best) = (rank, rank, T::zero());
        for i in rank..rows {
            for j in rank..cols {
                let v = a[i * cols + j].norm();
                if v > best {
                    (pr, pc, best) = (i, j, v);
                }
            }
        }
        if !(best > tol) {
            break;
        }
        if pr != rank {
            for j in 0..cols {
                a.swap(pr * cols + j, rank * cols + j);
            }
        }
        if pc != rank {
            for i in 0..rows {
                a.swap(i * cols + pc, i * cols + rank);
            }
            perm.swap(pc, rank);
        }
        let inv = Cx::new(T::one(), T::zero()) / a[rank * cols + rank];
        for j in rank..cols {
            a[rank * cols + j] = a[rank * cols + j] * inv;
        }
        for i in 0..rows {
            if i == rank {
                continue;
            }
            let f = a[i * cols + rank];
            if f == Cx::new(T::zero(), T::zero()) {
                continue;
            }
            for j in rank..cols {
                a[i * cols + j] = a[i * cols + j] - f * a[rank * cols + j];
            }
        }
        rank += 1;
    }
    let mut basis: Vec<Vec<Cx<T>>> = Vec::with_capacity(cols - rank);
    for free in rank..cols {
        let mut y = vec![Cx::new(T::zero(), T::zero()); cols];
        y[perm[free]] = Cx::new(T::one(), T::zero());
        for i in 0..rank {
            y[perm[i]] = -a[i * cols + free];
        }
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let p = dot(q, &y);
                for (yi, qi) in y.iter_mut().zip(q) {
                    *yi = *yi - *qi * p;
                }
            }
        }
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for yi in y.iter_mut() {
            *yi = *yi / norm;
        }
        basis.push(y);
    }
    basis
}

/// Solves `X 𝓜_{z_j} = 𝓜̃_{z_j} X` for all `j` on the truncation, keeping
/// only block equations whose both sides are defined inside it.
pub fn brute_force_intertwiner<T: Real>(m: &Moments<T>, mt: &Moments<T>) -> Result<IntertwinerSpace<T>> {
    m.same_shape(mt)?;
    if m.total_dim() > BRUTE_FORCE_CAP {
        return Err(Error::DimensionCap { dim: m.total_dim(), cap: BRUTE_FORCE_CAP });
    }
    let lattice = m.lattice();
    let n = m.fiber_dim();
    let nn = n * n;
    let size = lattice.len();

    let offset = |g: usize, b: usize| -> Vec<i64> {
        lattice
            .index(g)
            .components()
            .iter()
            .zip(lattice.index(b).components())
            .map(|(&x, &y)| x as i64 - y as i64)
            .collect()
    };
    let mut class_pairs: BTreeMap<Vec<i64>, Vec<(usize, usize)>> = BTreeMap::new();
    for g in 0..size {
        for b in 0..size {
            class_pairs.entry(offset(g, b)).or_default().push((g, b));
        }
    }
    let keys: Vec<Vec<i64>> = class_pairs.keys().cloned().collect();
    let mut locate: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for (ci, key) in keys.iter().enumerate() {
        for (li, &pair) in class_pairs[key].iter().enumerate() {
            locate.insert(pair, (ci, li));
        }
    }

    let mzs: Vec<MzBlocks<T>> = (0..m.d()).map(|j| build_mz(m, j)).collect::<Result<_>>()?;
    let mzts: Vec<MzBlocks<T>> = (0..m.d()).map(|j| build_mz(mt, j)).collect::<Result<_>>()?;
    let mut rows: Vec<Vec<Cx<T>>> = vec![Vec::new(); keys.len()];
    let mut row_counts = vec![0usize; keys.len()];
    for j in 0..m.d() {
        for beta in 0..size {
            let Some(beta_up) = lattice.up(beta, j) else { continue };
            let weight = mzs[j].blocks[beta].as_ref().expect("interior block");
            for gamma in 0..size {
                let (ci, l1) = locate[&(gamma, beta_up)];
                let width = class_pairs[&keys[ci]].len() * nn;
                let second = lattice.down(gamma, j).map(|gd| {
                    let (cj, l2) = locate[&(gd, beta)];
                    debug_assert_eq!(ci, cj);
                    (gd, l2)
                });
                for r in 0..n {
                    for c in 0..n {
                        let mut row = vec![Cx::new(T::zero(), T::zero()); width];
                        // (X_{γ,β+ε_j} M_j(β))_{rc}
                        for k in 0..n {
                            row[l1 * nn + r * n + k] = row[l1 * nn + r * n + k] + weight[(k, c)];
                        }
                        // −(M̃_j(γ−ε_j) X_{γ−ε_j,β})_{rc}
                        if let Some((gd, l2)) = second {
                            let wt = mzts[j].blocks[gd].as_ref().expect("interior block");
                            for k in 0..n {
                                row[l2 * nn + k * n + c] = row[l2 * nn + k * n + c] - wt[(r, k)];
                            }
                        }
                        rows[ci].extend(row);
                        row_counts[ci] += 1;
                    }
                }
            }
        }
    }

    let mut classes = Vec::with_capacity(keys.len());
    for (ci, key) in keys.iter().enumerate() {
        let pairs = class_pairs[key].clone();
        let cols = pairs.len() * nn;
        let basis = nullspace(std::mem::take(&mut rows[ci]), row_counts[ci], cols);
        if !basis.is_empty() {
            classes.push(ClassBasis { pairs, basis });
        }
    }
    Ok(IntertwinerSpace { m: m.clone(), mt: mt.clone(), classes, equations: row_counts.iter().sum() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::test_unitary_equivalence;
    use crate::random;

    fn scalar_system(values: &[f64]) -> Moments<f64> {
        let lattice = Truncation::new(1, values.len() - 1).unwrap();
        Moments::from_fn(lattice, 1, |a| LogPd::from_log_diag(&[values[a.degree()].ln()])).unwrap()
    }

    #[test]
    fn identity_systems_give_identity() {
        let m = scalar_system(&[1.0, 1.0, 1.0]);
        let d = diagonal_intertwiner(&m, &m, &Matrix::identity(1)).unwrap();
        assert!((d.x.matrix() - &Matrix::identity(3)).max_abs() < 1e-14);
        assert!(d.intertwining_residual < 1e-14);
    }

    #[test]
    fn growing_scalar_blocks() {
        let m = scalar_system(&[1.0; 6]);
        let mt = scalar_system(&(0..6).map(|k| 4f64.powi(k)).collect::<Vec<_>>());
        let d = diagonal_intertwiner(&m, &mt, &Matrix::identity(1)).unwrap();
        for k in 0..6 {
            assert!((d.x.block(k, k)[(0, 0)].re - 2f64.powi(k as i32)).abs() < 1e-12);
        }
        assert!(d.intertwining_residual < 1e-12);
        assert!((d.max_block_singular - 32.0).abs() < 1e-11);
    }

    #[test]
    fn hand_solved_shift() {
        let m = scalar_system(&[1.0, 1.0]);
        let space = brute_force_intertwiner(&m, &m).unwrap();
        assert_eq!(space.dimension(), 2);
        // [[a, 0], [b, a]]
        let x = Matrix::<f64>::from_real_rows(&[&[1.5, 0.0], &[-0.7, 1.5]]);
        let x = Intertwiner::new(m.lattice().clone(), 1, x).unwrap();
        assert!(space.membership_residual(&x) < 1e-14);
        let bad = Matrix::<f64>::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let bad = Intertwiner::new(m.lattice().clone(), 1, bad).unwrap();
        assert!(space.membership_residual(&bad) > 0.1);
    }

    #[test]
    fn hand_solved_weighted() {
        // weights w₀ = 1 vs w̃₀ = 2: G = (1, 1), G̃ = (1, 4)
        let m = scalar_system(&[1.0, 1.0]);
        let mt = scalar_system(&[1.0, 4.0]);
        let space = brute_force_intertwiner(&m, &mt).unwrap();
        assert_eq!(space.dimension(), 2);
        let x = Matrix::<f64>::from_real_rows(&[&[0.8, 0.0], &[0.3, 1.6]]);
        let x = Intertwiner::new(m.lattice().clone(), 1, x).unwrap();
        assert!(space.membership_residual(&x) < 1e-14);
        let check = space.check(&x, 1e-9).unwrap();
        assert!(check.level0_residual < 1e-15);
        assert!(check.recursion_residual < 1e-14);
        assert!(check.certificate_passed);
    }

    #[test]
    fn random_pairs_satisfy_structure() {
        let mut rng = random::rng(41);
        for _ in 0..3 {
            let m = random::moment_system::<f64>(&mut rng, 2, 2, 2, 5.0);
            let mt = random::moment_system::<f64>(&mut rng, 2, 2, 2, 5.0);
            let space = brute_force_intertwiner(&m, &mt).unwrap();
            assert_eq!(space.dimension(), m.len() * 4);
            let x = space.sample(&mut rng);
            let check = space.check(&x, 1e-9).unwrap();
            assert!(check.level0_residual <= 1e-9);
            assert!(check.recursion_residual <= 1e-9, "{}", check.recursion_residual);
            assert!(check.certificate_passed);
        }
    }

    #[test]
    fn recovered_unitary_intertwiner_in_span() {
        let mut rng = random::rng(43);
        let m = random::moment_system::<f64>(&mut rng, 2, 2, 2, 5.0);
        let v0 = random::unitary::<f64>(&mut rng, 2);
        let mt = m.congruence(&v0).unwrap();
        let v = test_unitary_equivalence(&m, &mt, 1e-8).unwrap().v.unwrap();
        let d = diagonal_intertwiner(&m, &mt, &v).unwrap();
        let space = brute_force_intertwiner(&m, &mt).unwrap();
        assert!(space.membership_residual(&d.x) < 1e-9);
    }

    #[test]
    fn cap_enforced() {
        let m = random::moment_system::<f64>(&mut random::rng(1), 1, 300, 2, 2.0);
        assert!(matches!(brute_force_intertwiner(&m, &m), Err(Error::DimensionCap { dim: 602, cap: 512 })));
    }
}
