use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{inverse, is_invertible, pencil_log_eigs, Matrix};
use crate::scalar::Real;
use crate::shiftcore::Moments;

/// `(C, m₁, m₂)` with the constants stored as natural logs.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T: Real> {
    pub c: Matrix<T>,
    pub log_m1: T,
    pub log_m2: T,
}

impl<T: Real> Certificate<T> {
    pub fn new(c: Matrix<T>, m1: T, m2: T) -> Self {
        Self { c, log_m1: m1.ln(), log_m2: m2.ln() }
    }

    pub fn m1(&self) -> T {
        self.log_m1.exp()
    }

    pub fn m2(&self) -> T {
        self.log_m2.exp()
    }

    /// `log(m₂ / m₁)`.
    pub fn log_ratio(&self) -> T {
        self.log_m2 - self.log_m1
    }

    /// Certificate for the swapped pair: `(C⁻¹, 1/m₂, 1/m₁)`.
    pub fn reversed(&self) -> Result<Self> {
        if !is_invertible(&self.c) {
            return Err(Error::SingularC);
        }
        Ok(Self { c: inverse(&self.c)?, log_m1: -self.log_m2, log_m2: -self.log_m1 })
    }
}

/// Optimal constants for a fixed `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichRatio<T: Real> {
    pub log_m1: T,
    pub log_m2: T,
    pub log_ratio: T,
    /// Position attaining `m₁`.
    pub lower_position: usize,
    /// Position attaining `m₂`.
    pub upper_position: usize,
}

impl<T: Real> SandwichRatio<T> {
    pub fn m1(&self) -> T {
        self.log_m1.exp()
    }

    pub fn m2(&self) -> T {
        self.log_m2.exp()
    }

    pub fn into_certificate(self, c: Matrix<T>) -> Certificate<T> {
        Certificate { c, log_m1: self.log_m1, log_m2: self.log_m2 }
    }
}

fn check_c<T: Real>(m: &Moments<T>, mt: &Moments<T>, c: &Matrix<T>) -> Result<()> {
    m.same_shape(mt)?;
    if c.rows() != m.fiber_dim() || !c.is_square() {
        return Err(Error::DimMismatch(format!(
            "C is {}x{}, fiber dimension is {}",
            c.rows(),
            c.cols(),
            m.fiber_dim()
        )));
    }
    if !c.is_finite() {
        return Err(Error::NonFinite);
    }
    if !is_invertible(c) {
        return Err(Error::SingularC);
    }
    Ok(())
}

/// `m₁ = min_α λ_min(G̃_α, C* G_α C)` and `m₂ = max_α λ_max(…)`, in logs.
pub fn sandwich_ratio<T: Real>(m: &Moments<T>, mt: &Moments<T>, c: &Matrix<T>) -> Result<SandwichRatio<T>> {
    check_c(m, mt, c)?;
    let per_alpha = pencil_extremes(m, mt, c)?;
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    let (mut lo_pos, mut hi_pos) = (0, 0);
    for (pos, &(a, b)) in per_alpha.iter().enumerate() {
        if a < lo {
            lo = a;
            lo_pos = pos;
        }
        if b > hi {
            hi = b;
            hi_pos = pos;
        }
    }
    Ok(SandwichRatio { log_m1: lo, log_m2: hi, log_ratio: hi - lo, lower_position: lo_pos, upper_position: hi_pos })
}

/// Log slacks at one index: `log λ_min(G̃, C*GC) − log m₁` and
/// `log m₂ − log λ_max(G̃, C*GC)`. Both are non-negative for a valid certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaMargin<T: Real> {
    pub lower: T,
    pub upper: T,
}

#[derive(Debug, Clone)]
pub struct VerificationReport<T: Real> {
    pub passed: bool,
    pub tol: T,
    pub margins: Vec<AlphaMargin<T>>,
    pub worst_lower: T,
    pub worst_lower_position: usize,
    pub worst_upper: T,
    pub worst_upper_position: usize,
}

fn pencil_extremes<T: Real>(m: &Moments<T>, mt: &Moments<T>, c: &Matrix<T>) -> Result<Vec<(T, T)>> {
    (0..m.len())
        .into_par_iter()
        .map(|pos| {
            let cgc = m.gram(pos).congruence(c)?;
            let logs = pencil_log_eigs(mt.gram(pos), &cgc)?;
            Ok((logs[0], *logs.last().expect("non-empty spectrum")))
        })
        .collect()
}

/// Checks `m₁ C*G_αC ≤ (1+τ) G̃_α` and `G̃_α ≤ (1+τ) m₂ C*G_αC` at every index.
pub fn verify_certificate<T: Real>(
    m: &Moments<T>,
    mt: &Moments<T>,
    cert: &Certificate<T>,
    tol: T,
) -> Result<VerificationReport<T>> {
    check_c(m, mt, &cert.c)?;
    let margins: Vec<AlphaMargin<T>> = pencil_extremes(m, mt, &cert.c)?
        .into_iter()
        .map(|(lo, hi)| AlphaMargin { lower: lo - cert.log_m1, upper: cert.log_m2 - hi })
        .collect();
    let (mut wl, mut wu) = (T::infinity(), T::infinity());
    let (mut wl_pos, mut wu_pos) = (0, 0);
    for (pos, mg) in margins.iter().enumerate() {
        if mg.lower < wl {
            wl = mg.lower;
            wl_pos = pos;
        }
        if mg.upper < wu {
            wu = mg.upper;
            wu_pos = pos;
        }
    }
    let slack = -tol.ln_1p();
    let passed = cert.log_m1 <= cert.log_m2 && wl >= slack && wu >= slack;
    Ok(VerificationReport {
        passed,
        tol,
        margins,
        worst_lower: wl,
        worst_lower_position: wl_pos,
        worst_upper: wu,
        worst_upper_position: wu_pos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelgen::{pochhammer_kernel, PochhammerPair};
    use crate::random;

    fn swap() -> Matrix<f64> {
        Matrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn pair(a: f64, b: f64, c: f64, d: f64, n: usize) -> (Moments<f64>, Moments<f64>) {
        let (_, m) = pochhammer_kernel(PochhammerPair::new(a, b).unwrap(), 2, n).unwrap();
        let (_, mt) = pochhammer_kernel(PochhammerPair::new(c, d).unwrap(), 2, n).unwrap();
        (m, mt)
    }

    #[test]
    fn identical_systems() {
        let m = random::moment_system::<f64>(&mut random::rng(1), 2, 3, 2, 10.0);
        let r = sandwich_ratio(&m, &m, &Matrix::identity(2)).unwrap();
        assert!(r.log_m1.abs() < 1e-13 && r.log_m2.abs() < 1e-13);
        assert!(r.log_ratio.abs() < 1e-13);
        let rep = verify_certificate(&m, &m, &Certificate::new(Matrix::identity(2), 1.0, 1.0), 1e-12).unwrap();
        assert!(rep.passed);
        assert!(rep.worst_lower.abs() < 1e-13 && rep.worst_upper.abs() < 1e-13);
    }

    #[test]
    fn global_scaling() {
        let m = random::moment_system::<f64>(&mut random::rng(2), 2, 3, 2, 10.0);
        let mt = m.scale_log(2f64.ln());
        let r = sandwich_ratio(&m, &mt, &Matrix::identity(2)).unwrap();
        assert!((r.m1() - 2.0).abs() < 1e-12 && (r.m2() - 2.0).abs() < 1e-12);
        assert!(r.log_ratio.abs() < 1e-13);
    }

    #[test]
    fn swapped_pochhammer() {
        let (m, mt) = pair(1.0, 2.0, 2.0, 1.0, 12);
        let r = sandwich_ratio(&m, &mt, &swap()).unwrap();
        assert!(r.log_m1.abs() < 1e-12 && r.log_m2.abs() < 1e-12);
        let rep = verify_certificate(&m, &mt, &Certificate::new(swap(), 1.0, 1.0), 1e-10).unwrap();
        assert!(rep.passed);
    }

    #[test]
    fn unit_certificate_fails_on_distinct_parameters() {
        let (m, mt) = pair(1.0, 2.0, 1.0, 3.0, 16);
        let rep = verify_certificate(&m, &mt, &Certificate::new(Matrix::identity(2), 1.0, 1.0), 1e-8).unwrap();
        assert!(!rep.passed);
        let worst = m.lattice().index(rep.worst_lower_position).degree();
        assert_eq!(worst, 16);
    }

    #[test]
    fn singular_c_rejected() {
        let m = random::moment_system::<f64>(&mut random::rng(3), 1, 2, 2, 3.0);
        let c = Matrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(sandwich_ratio(&m, &m, &c).unwrap_err(), Error::SingularC);
    }

    #[test]
    fn reversed_certificate_verifies() {
        let mut rng = random::rng(4);
        let m = random::moment_system::<f64>(&mut rng, 2, 3, 2, 5.0);
        let mt = random::moment_system::<f64>(&mut rng, 2, 3, 2, 5.0);
        let c = random::invertible::<f64>(&mut rng, 2, 3.0);
        let cert = sandwich_ratio(&m, &mt, &c).unwrap().into_certificate(c);
        assert!(verify_certificate(&m, &mt, &cert, 1e-9).unwrap().passed);
        let back = cert.reversed().unwrap();
        assert!(verify_certificate(&mt, &m, &back, 1e-9).unwrap().passed);
    }
}
