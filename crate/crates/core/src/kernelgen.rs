//! Moment systems generated from diagonal reproducing kernels
//! `κ(z, w) = Σ C_α z^α w̄^α` with positive matrix coefficients.
//!
//! The multiplication tuple on `H(κ)` corresponds to the moment family
//! `G_α = C_α⁻¹`. All Pochhammer quantities are handled in log space so that
//! degrees well beyond the `f64` overflow of `(λ)_n` stay representable.

use crate::equivalence::Certificate;
use crate::error::{Error, Result};
use crate::lattice::{MultiIndex, Truncation};
use crate::numerics::{spectral_norm, LogPd, Matrix};
use crate::scalar::Real;
use crate::shiftcore::Moments;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, nine terms).
pub fn ln_gamma<T: Real>(x: T) -> T {
    assert!(x > T::zero(), "ln_gamma requires a positive argument");
    if x < T::lit(0.5) {
        return ln_gamma(x + T::one()) - x.ln();
    }
    let x = x - T::one();
    let mut a = T::lit(LANCZOS_COEFFS[0]);
    let t = x + T::lit(LANCZOS_G + 0.5);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a = a + T::lit(c) / (x + T::lit(i as f64));
    }
    T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + (x + T::lit(0.5)) * t.ln() - t + a.ln()
}

/// `ln (x)_n = ln Γ(x + n) − ln Γ(x)`; exactly zero for `n = 0`.
pub fn log_pochhammer<T: Real>(x: T, n: usize) -> T {
    assert!(x > T::zero(), "Pochhammer base must be positive");
    if n == 0 {
        return T::zero();
    }
    ln_gamma(x + T::lit(n as f64)) - ln_gamma(x)
}

/// Where a kernel's coefficients came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Pochhammer { params: Vec<f64> },
    Homogeneous,
    Perturbed { max_replaced_degree: usize },
    Explicit,
}

/// Coefficients `C_α` of a diagonal kernel on a truncation.
#[derive(Debug, Clone)]
pub struct Kernel<T: Real> {
    lattice: Truncation,
    fiber_dim: usize,
    coeffs: Vec<LogPd<T>>,
    provenance: Provenance,
}

impl<T: Real> Kernel<T> {
    pub fn new(lattice: Truncation, fiber_dim: usize, coeffs: Vec<LogPd<T>>, provenance: Provenance) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::DimMismatch(format!("{} coefficients for {} indices", coeffs.len(), lattice.len())));
        }
        if coeffs.iter().any(|c| c.dim() != fiber_dim) {
            return Err(Error::DimMismatch(format!("coefficient dimension differs from fiber dimension {fiber_dim}")));
        }
        Ok(Self { lattice, fiber_dim, coeffs, provenance })
    }

    pub fn lattice(&self) -> &Truncation {
        &self.lattice
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn coeff(&self, pos: usize) -> &LogPd<T> {
        &self.coeffs[pos]
    }

    pub fn coeffs(&self) -> &[LogPd<T>] {
        &self.coeffs
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Moment family `G_α = C_α⁻¹`, inverted per index in log space.
    pub fn moments(&self) -> Result<Moments<T>> {
        let grams = self.coeffs.iter().map(LogPd::inverse).collect::<Result<Vec<_>>>()?;
        Moments::new(self.lattice.clone(), self.fiber_dim, grams)
    }
}

/// A pair of strictly positive Pochhammer parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PochhammerPair {
    pub lambda: f64,
    pub mu: f64,
}

impl PochhammerPair {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Pochhammer parameters must be positive, got ({lambda}, {mu})"
            )));
        }
        Ok(Self { lambda, mu })
    }

    pub fn swapped(self) -> Self {
        Self { lambda: self.mu, mu: self.lambda }
    }
}

/// `C_α = (1/α!) diag((p₁)_{|α|}, …, (p_n)_{|α|})` and `G_α = C_α⁻¹`, built
/// directly from log values. The matrix parts depend on `|α|` alone and the
/// `α!` factor lives in the log scale.
pub fn pochhammer_diag_kernel<T: Real>(params: &[f64], d: usize, max_degree: usize) -> Result<(Kernel<T>, Moments<T>)> {
    if params.is_empty() || params.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument("Pochhammer parameters must be positive".into()));
    }
    let lattice = Truncation::new(d, max_degree)?;
    let n = params.len();
    let mut coeffs = Vec::with_capacity(lattice.len());
    let mut grams = Vec::with_capacity(lattice.len());
    for alpha in lattice.indices() {
        let k = alpha.degree();
        let logs: Vec<T> = params.iter().map(|&p| log_pochhammer(T::lit(p), k)).collect();
        let shift = T::lit(alpha.ln_factorial());
        let c = LogPd::from_log_diag(&logs)?.scale_log(-shift);
        let neg: Vec<T> = logs.iter().map(|&l| -l).collect();
        let g = LogPd::from_log_diag(&neg)?.scale_log(shift);
        coeffs.push(c);
        grams.push(g);
    }
    let kernel = Kernel::new(lattice.clone(), n, coeffs, Provenance::Pochhammer { params: params.to_vec() })?;
    Ok((kernel, Moments::new(lattice, n, grams)?))
}

/// The 2×2 kernel `diag((1 − ⟨z,w⟩)^{-λ}, (1 − ⟨z,w⟩)^{-μ})` and its moments.
pub fn pochhammer_kernel<T: Real>(p: PochhammerPair, d: usize, max_degree: usize) -> Result<(Kernel<T>, Moments<T>)> {
    pochhammer_diag_kernel(&[p.lambda, p.mu], d, max_degree)
}

/// Similar exactly when the parameter sets coincide.
pub fn pochhammer_ground_truth(p: PochhammerPair, q: PochhammerPair) -> bool {
    (p.lambda == q.lambda && p.mu == q.mu) || (p.lambda == q.mu && p.mu == q.lambda)
}

/// `C_α = (|α|!/α!) A_{|α|}` for a sequence `A_0, …, A_N`.
pub fn homogeneous_kernel<T: Real>(a: &[LogPd<T>], d: usize) -> Result<Kernel<T>> {
    let Some(first) = a.first() else {
        return Err(Error::InvalidArgument("homogeneous kernel needs at least A_0".into()));
    };
    let n = first.dim();
    if let Some((m, bad)) = a.iter().enumerate().find(|(_, am)| am.dim() != n) {
        return Err(Error::DimMismatch(format!("A_{m} has dimension {}, expected {n}", bad.dim())));
    }
    let lattice = Truncation::new(d, a.len() - 1)?;
    let coeffs = lattice
        .indices()
        .iter()
        .map(|alpha| {
            let k = alpha.degree();
            let multinomial = log_pochhammer(T::one(), k) - T::lit(alpha.ln_factorial());
            a[k].scale_log(multinomial)
        })
        .collect();
    Kernel::new(lattice, n, coeffs, Provenance::Homogeneous)
}

/// Replaces `C_α` by `D_α` at the given low-degree indices and returns the
/// closed-form certificate `(I, min{1, c₁}, max{1, c₂})` with
/// `c₁ = min 1/‖C^{-1/2} D C^{-1/2}‖` and `c₂ = max ‖C^{1/2} D⁻¹ C^{1/2}‖`.
pub fn perturb_kernel<T: Real>(
    k: &Kernel<T>,
    replacements: &[(MultiIndex, LogPd<T>)],
) -> Result<(Kernel<T>, Certificate<T>)> {
    let mut coeffs = k.coeffs.clone();
    let mut log_c1 = T::infinity();
    let mut log_c2 = T::neg_infinity();
    let mut max_degree = 0;
    for (alpha, d_alpha) in replacements {
        let pos = k
            .lattice
            .position(alpha)
            .ok_or_else(|| Error::IndexOutOfRange(format!("{alpha} is outside the truncation")))?;
        if d_alpha.dim() != k.fiber_dim {
            return Err(Error::DimMismatch(format!("replacement at {alpha} has dimension {}", d_alpha.dim())));
        }
        max_degree = max_degree.max(alpha.degree());
        let c = &k.coeffs[pos];
        let (c_sqrt, c_inv_sqrt) = (c.sqrt()?, c.inv_sqrt()?);
        let d_inv = d_alpha.inverse()?;

        let lower = d_alpha.matrix().congruence(c_inv_sqrt.matrix());
        let log_lower = spectral_norm(&lower)?.ln() + d_alpha.logscale() + T::lit(2.0) * c_inv_sqrt.logscale();
        let upper = d_inv.matrix().congruence(c_sqrt.matrix());
        let log_upper = spectral_norm(&upper)?.ln() + d_inv.logscale() + T::lit(2.0) * c_sqrt.logscale();

        log_c1 = log_c1.min(-log_lower);
        log_c2 = log_c2.max(log_upper);
        coeffs[pos] = d_alpha.clone();
    }
    let cert =
        Certificate { c: Matrix::identity(k.fiber_dim), log_m1: log_c1.min(T::zero()), log_m2: log_c2.max(T::zero()) };
    let kernel =
        Kernel::new(k.lattice.clone(), k.fiber_dim, coeffs, Provenance::Perturbed { max_replaced_degree: max_degree })?;
    Ok((kernel, cert))
}

/// `max_α ‖C_α^{-1/2} C_{α−ε_j} C_α^{-1/2}‖^{1/2}` over indices with `α_j > 0`
/// (the term is zero when `α_j = 0`), the norm of the truncated `𝓜_{z_j}`.
pub fn boundedness_estimate<T: Real>(k: &Kernel<T>, j: usize) -> Result<T> {
    if j >= k.lattice.d() {
        return Err(Error::InvalidArgument(format!("direction {j} out of range")));
    }
    let mut best = T::zero();
    for pos in 0..k.lattice.len() {
        let Some(prev) = k.lattice.down(pos, j) else { continue };
        let inv_sqrt = k.coeffs[pos].inv_sqrt()?;
        let lower = &k.coeffs[prev];
        let m = lower.matrix().congruence(inv_sqrt.matrix());
        let log_norm = spectral_norm(&m)?.ln() + lower.logscale() + T::lit(2.0) * inv_sqrt.logscale();
        best = best.max((T::lit(0.5) * log_norm).exp());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::shiftcore::build_mz;

    #[test]
    fn log_pochhammer_examples() {
        assert_eq!(log_pochhammer(3.7f64, 0), 0.0);
        assert!((log_pochhammer(1.0f64, 3) - 6f64.ln()).abs() < 1e-13);
        assert!((log_pochhammer(2.0f64, 3) - 24f64.ln()).abs() < 1e-13);
        // recurrence branch below 1/2
        let direct: f64 = (0..5).map(|i| (0.25 + i as f64).ln()).sum();
        assert!((log_pochhammer(0.25f64, 5) - direct).abs() < 1e-12);
    }

    #[test]
    fn factorial_oracle() {
        let mut acc = 0.0f64;
        for n in 1..=170usize {
            acc += (n as f64).ln();
            let got = log_pochhammer(1.0f64, n);
            assert!((got - acc).abs() <= 1e-11 * acc.max(1.0), "n = {n}: {got} vs {acc}");
        }
    }

    #[test]
    fn pochhammer_examples() {
        let p = PochhammerPair::new(1.0, 1.0).unwrap();
        let (k, m) = pochhammer_kernel::<f64>(p, 1, 5).unwrap();
        for pos in 0..6 {
            assert!((&k.coeff(pos).value() - &Matrix::identity(2)).max_abs() < 1e-12);
            assert!((&m.gram(pos).value() - &Matrix::identity(2)).max_abs() < 1e-12);
        }

        let (k, _) = pochhammer_diag_kernel::<f64>(&[2.0], 1, 6).unwrap();
        for pos in 0..7 {
            assert!((k.coeff(pos).value()[(0, 0)].re - (pos as f64 + 1.0)).abs() < 1e-12);
        }

        let (k, _) = pochhammer_kernel::<f64>(PochhammerPair::new(1.0, 3.0).unwrap(), 2, 2).unwrap();
        let pos = k.lattice().position(&MultiIndex::new(vec![1, 1]).unwrap()).unwrap();
        assert!((k.coeff(pos).value()[(0, 0)].re - 2.0).abs() < 1e-13);
    }

    #[test]
    fn high_degree_stays_finite() {
        let (_, m) = pochhammer_kernel::<f64>(PochhammerPair::new(1.0, 3.0).unwrap(), 1, 220).unwrap();
        let logs = m.gram(220).log_eigenvalues().unwrap();
        assert!(logs.iter().all(|l| l.is_finite()));
        // (3)_k overflows f64 here, yet k!/(3)_k = 2/((k+1)(k+2))
        assert!(log_pochhammer(3.0f64, 220) > 710.0);
        assert!((logs[0] - (2.0f64 / (221.0 * 222.0)).ln()).abs() < 1e-10);
        assert!(logs[1].abs() < 1e-10);
    }

    #[test]
    fn swap_symmetry_is_bit_exact() {
        let p = PochhammerPair::new(1.0, 2.5).unwrap();
        let (_, m) = pochhammer_kernel::<f64>(p, 2, 12).unwrap();
        let (_, ms) = pochhammer_kernel::<f64>(p.swapped(), 2, 12).unwrap();
        let swap = Matrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        for pos in 0..m.len() {
            let a = m.gram(pos);
            let b = ms.gram(pos);
            assert_eq!(a.logscale().to_bits(), b.logscale().to_bits());
            assert_eq!(a.matrix().congruence(&swap), *b.matrix());
        }
    }

    #[test]
    fn ground_truth() {
        let pp = |a, b| PochhammerPair::new(a, b).unwrap();
        assert!(pochhammer_ground_truth(pp(1.0, 2.0), pp(2.0, 1.0)));
        assert!(pochhammer_ground_truth(pp(1.0, 2.0), pp(1.0, 2.0)));
        assert!(!pochhammer_ground_truth(pp(1.0, 2.0), pp(1.0, 3.0)));
        assert!(PochhammerPair::new(0.0, 1.0).is_err());
    }

    #[test]
    fn homogeneous_examples() {
        let a: Vec<LogPd<f64>> = (0..5).map(|_| LogPd::identity(1)).collect();
        let k = homogeneous_kernel(&a, 1).unwrap();
        assert!(k.coeffs().iter().all(|c| (c.value()[(0, 0)].re - 1.0).abs() < 1e-14));

        let a: Vec<LogPd<f64>> = (0..3).map(|_| LogPd::identity(2)).collect();
        let k = homogeneous_kernel(&a, 2).unwrap();
        let pos = k.lattice().position(&MultiIndex::new(vec![1, 1]).unwrap()).unwrap();
        assert!((&k.coeff(pos).value() - &Matrix::identity(2).scale(2.0)).max_abs() < 1e-13);

        let bad = vec![LogPd::identity(2), LogPd::identity(3)];
        assert!(matches!(homogeneous_kernel::<f64>(&bad, 2), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn homogeneous_reproduces_pochhammer() {
        let (lambda, mu) = (1.5, 2.25);
        let a: Vec<LogPd<f64>> = (0..=10)
            .map(|m| {
                let lf = log_pochhammer(1.0, m);
                LogPd::from_log_diag(&[log_pochhammer(lambda, m) - lf, log_pochhammer(mu, m) - lf]).unwrap()
            })
            .collect();
        let hk = homogeneous_kernel(&a, 2).unwrap();
        let (pk, _) = pochhammer_kernel::<f64>(PochhammerPair::new(lambda, mu).unwrap(), 2, 10).unwrap();
        for pos in 0..hk.lattice().len() {
            let x = hk.coeff(pos).log_eigenvalues().unwrap();
            let y = pk.coeff(pos).log_eigenvalues().unwrap();
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn homogeneous_matrix_parts_depend_on_degree_only() {
        let mut rng = random::rng(5);
        let a: Vec<LogPd<f64>> = (0..=4).map(|_| random::log_pd(&mut rng, 2, 5.0, 1.0)).collect();
        let k = homogeneous_kernel(&a, 3).unwrap();
        let lat = k.lattice();
        for p in 0..lat.len() {
            for q in 0..lat.len() {
                if lat.index(p).degree() == lat.index(q).degree() {
                    assert_eq!(k.coeff(p).matrix(), k.coeff(q).matrix());
                }
            }
        }
    }

    #[test]
    fn perturbation_constants() {
        let (base, _) = pochhammer_diag_kernel::<f64>(&[1.0], 1, 6).unwrap();
        let (_, cert) = perturb_kernel(&base, &[]).unwrap();
        assert_eq!((cert.log_m1, cert.log_m2), (0.0, 0.0));

        let d0 = LogPd::identity(1).scale_log(4f64.ln());
        let (pk, cert) = perturb_kernel(&base, &[(MultiIndex::zero(1), d0)]).unwrap();
        assert!((cert.log_m1 - 0.25f64.ln()).abs() < 1e-14);
        assert_eq!(cert.log_m2, 0.0);
        assert!((pk.coeff(0).value()[(0, 0)].re - 4.0).abs() < 1e-14);
        assert_eq!(pk.provenance(), &Provenance::Perturbed { max_replaced_degree: 0 });

        let outside = MultiIndex::new(vec![9]).unwrap();
        assert!(matches!(perturb_kernel(&base, &[(outside, LogPd::identity(1))]), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn boundedness_examples() {
        let (k, _) = pochhammer_diag_kernel::<f64>(&[1.0], 1, 8).unwrap();
        assert!((boundedness_estimate(&k, 0).unwrap() - 1.0).abs() < 1e-13);

        let (k, _) = pochhammer_diag_kernel::<f64>(&[2.0], 1, 8).unwrap();
        let expected = (8.0f64 / 9.0).sqrt();
        assert!((boundedness_estimate(&k, 0).unwrap() - expected).abs() < 1e-13);

        let (k, _) = pochhammer_kernel::<f64>(PochhammerPair::new(1.0, 2.0).unwrap(), 2, 0).unwrap();
        assert_eq!(boundedness_estimate(&k, 1).unwrap(), 0.0);
    }

    #[test]
    fn boundedness_matches_shift_norm() {
        let mut rng = random::rng(21);
        let a: Vec<LogPd<f64>> = (0..=5).map(|_| random::log_pd(&mut rng, 2, 4.0, 0.5)).collect();
        let kernels = vec![
            pochhammer_kernel::<f64>(PochhammerPair::new(1.0, 2.0).unwrap(), 2, 6).unwrap().0,
            pochhammer_kernel::<f64>(PochhammerPair::new(0.5, 3.5).unwrap(), 3, 4).unwrap().0,
            homogeneous_kernel(&a, 2).unwrap(),
        ];
        for k in &kernels {
            let m = k.moments().unwrap();
            for j in 0..k.lattice().d() {
                let est = boundedness_estimate(k, j).unwrap();
                let norm = build_mz(&m, j).unwrap().norm_estimate;
                assert!((est - norm).abs() <= 1e-10, "{est} vs {norm}");
            }
        }
    }
}
