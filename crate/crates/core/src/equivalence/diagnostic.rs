use std::fmt;

use rayon::prelude::*;

use super::certificate::Certificate;
use super::optimize::{optimize_c, OptimizeOptions};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::shiftcore::Moments;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    SimilarEvidence,
    NotSimilarEvidence,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::SimilarEvidence => "SIMILAR_EVIDENCE",
            Verdict::NotSimilarEvidence => "NOT_SIMILAR_EVIDENCE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Largest `m₂/m₁` (not its log) still counted as bounded.
    pub ratio_cap: f64,
    pub slope_eps: f64,
    pub slope_floor: f64,
    pub min_r_squared: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { ratio_cap: 1e3, slope_eps: 0.1, slope_floor: 0.3, min_r_squared: 0.9 }
    }
}

#[derive(Debug, Clone)]
pub struct GrowthRow<T: Real> {
    pub degree: usize,
    pub log_ratio: T,
    pub certificate: Certificate<T>,
}

#[derive(Debug, Clone)]
pub struct GrowthDiagnostic<T: Real> {
    pub rows: Vec<GrowthRow<T>>,
    /// Least-squares slope of `log_ratio` against `ln(degree)`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_log_ratio: f64,
    pub verdict: Verdict,
}

/// Least-squares line `y ≈ a + b x`, returning `(b, a, R²)`. A constant
/// response is fitted exactly and reports `R² = 1`.
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

fn classify(max_log_ratio: f64, slope: f64, r2: f64, th: &Thresholds) -> Verdict {
    if max_log_ratio <= th.ratio_cap.ln() && slope <= th.slope_eps {
        Verdict::SimilarEvidence
    } else if slope >= th.slope_floor && r2 >= th.min_r_squared {
        Verdict::NotSimilarEvidence
    } else {
        Verdict::Inconclusive
    }
}

/// Runs [`optimize_c`] on the pair produced for each degree and fits the
/// growth of the optimal `log(m₂/m₁)` against `ln(degree)`.
pub fn growth_diagnostic<T, F>(
    generate: F,
    degrees: &[usize],
    opts: &OptimizeOptions,
    thresholds: &Thresholds,
) -> Result<GrowthDiagnostic<T>>
where
    T: Real,
    F: Fn(usize) -> Result<(Moments<T>, Moments<T>)> + Sync,
{
    if degrees.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "growth diagnostic needs at least 4 degrees, got {}",
            degrees.len()
        )));
    }
    if degrees[0] == 0 || degrees.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("degrees must be positive and strictly ascending".into()));
    }
    let rows = degrees
        .par_iter()
        .map(|&degree| {
            let (m, mt) = generate(degree)?;
            let certificate = optimize_c(&m, &mt, opts)?;
            Ok(GrowthRow { degree, log_ratio: certificate.log_ratio(), certificate })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| (r.degree as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.log_ratio.as_f64()).collect();
    let (slope, intercept, r_squared) = fit_line(&x, &y);
    let max_log_ratio = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let verdict = classify(max_log_ratio, slope, r_squared, thresholds);
    Ok(GrowthDiagnostic { rows, slope, intercept, r_squared, max_log_ratio, verdict })
}

/// [`growth_diagnostic`] over truncations of two fixed systems.
pub fn growth_from_moments<T: Real>(
    m: &Moments<T>,
    mt: &Moments<T>,
    degrees: &[usize],
    opts: &OptimizeOptions,
    thresholds: &Thresholds,
) -> Result<GrowthDiagnostic<T>> {
    m.same_shape(mt)?;
    if let Some(&top) = degrees.last() {
        if top > m.max_degree() {
            return Err(Error::InvalidArgument(format!("degree {top} exceeds the truncation N = {}", m.max_degree())));
        }
    }
    growth_diagnostic(|k| Ok((m.truncated(k)?, mt.truncated(k)?)), degrees, opts, thresholds)
}
