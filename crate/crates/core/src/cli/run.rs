use std::time::Instant;

use serde_json::{json, Map, Value};

use super::schema::{matrix_json, Kind, ProblemFile, RawCertificate};
use super::{default_report_path, write_file, Failure, ProblemArgs, EXIT_OK, EXIT_VALIDATION};
use crate::equivalence::{
    brute_force_intertwiner, diagonal_intertwiner, growth_from_moments, optimize_c, test_unitary_equivalence_seeded,
    verify_certificate, Certificate, GrowthDiagnostic, OptimizeOptions, Thresholds, VerificationReport, Witness,
    DEFAULT_SEED, DEFAULT_TOL,
};
use crate::lattice::Truncation;
use crate::random;
use crate::shiftcore::{
    build_mz, canonical_weights, check_adjoint_formula, moments_from_weights, path_independence_residual,
    validate_weights, Moments,
};

const ORACLE_SAMPLES: usize = 5;
const STRUCTURE_TOL: f64 = 1e-9;

/// Command-line overrides of the problem options.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFlags {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub degrees: Option<Vec<usize>>,
    pub no_timing: bool,
}

/// Options after applying flags and defaults.
#[derive(Debug, Clone, PartialEq)]
struct Resolved {
    n_max: Option<usize>,
    degrees: Option<Vec<usize>>,
    tol: f64,
    seed: u64,
}

impl Resolved {
    fn to_json(&self) -> Value {
        let mut o = Map::new();
        if let Some(n) = self.n_max {
            o.insert("N".into(), json!(n));
        }
        if let Some(d) = &self.degrees {
            o.insert("degrees".into(), json!(d));
        }
        o.insert("tol".into(), json!(self.tol));
        o.insert("seed".into(), json!(self.seed));
        Value::Object(o)
    }

    fn optimize(&self) -> OptimizeOptions {
        OptimizeOptions { seed: self.seed, ..Default::default() }
    }
}

fn index_json(lattice: &Truncation, pos: usize) -> Value {
    json!(lattice.index(pos).components())
}

fn certificate_json(c: &Certificate<f64>) -> Value {
    json!({
        "C": matrix_json(&c.c),
        "log_m1": c.log_m1,
        "log_m2": c.log_m2,
        "m1": c.m1(),
        "m2": c.m2(),
        "log_ratio": c.log_ratio(),
    })
}

fn verification_json(lattice: &Truncation, r: &VerificationReport<f64>) -> Value {
    let margins: Vec<Value> = r
        .margins
        .iter()
        .enumerate()
        .map(|(pos, m)| json!({"index": index_json(lattice, pos), "lower": m.lower, "upper": m.upper}))
        .collect();
    json!({
        "passed": r.passed,
        "tol": r.tol,
        "worst_lower": r.worst_lower,
        "worst_lower_index": index_json(lattice, r.worst_lower_position),
        "worst_upper": r.worst_upper,
        "worst_upper_index": index_json(lattice, r.worst_upper_position),
        "margins": margins,
    })
}

fn growth_json(g: &GrowthDiagnostic<f64>) -> Value {
    let rows: Vec<Value> = g.rows.iter().map(|r| json!({"degree": r.degree, "log_ratio": r.log_ratio})).collect();
    json!({
        "rows": rows,
        "slope": g.slope,
        "intercept": g.intercept,
        "r_squared": g.r_squared,
        "max_log_ratio": g.max_log_ratio,
    })
}

fn build_systems(p: &ProblemFile, n: Option<usize>) -> Result<Vec<Moments<f64>>, Failure> {
    p.systems.iter().enumerate().map(|(i, s)| Ok(s.build(&format!("systems[{i}]"), n)?)).collect()
}

fn default_degrees(n: usize) -> Result<Vec<usize>, Failure> {
    if n < 4 {
        return Err(Failure::validation(format!(
            "truncation N = {n} is too small for default degrees; pass --degrees"
        )));
    }
    Ok(vec![n / 4, n / 2, 3 * n / 4, n])
}

/// Certificate supplied in the file, or the closed form of a perturbed system
/// whose base is the other system.
fn supplied_certificate(p: &ProblemFile, n: Option<usize>) -> Result<Option<Certificate<f64>>, Failure> {
    if let Some(RawCertificate { c, log_m1, log_m2 }) = &p.certificate {
        return Ok(Some(Certificate { c: c.to_matrix(), log_m1: *log_m1, log_m2: *log_m2 }));
    }
    use super::schema::SystemSpec::Perturbed;
    match (&p.systems[0], &p.systems[1]) {
        (base, Perturbed { base: inner, .. }) if **inner == *base => {
            Ok(p.systems[1].perturbation_certificate("systems[1]", n)?)
        }
        (Perturbed { base: inner, .. }, other) if **inner == *other => {
            let c = p.systems[0].perturbation_certificate("systems[0]", n)?;
            Ok(c.map(|c| c.reversed()).transpose()?)
        }
        _ => Ok(None),
    }
}

struct Outcome {
    verdict: String,
    code: i32,
    body: Map<String, Value>,
}

fn similarity(p: &ProblemFile, r: &Resolved, diagnostic_only: bool) -> Result<Outcome, Failure> {
    let sys = build_systems(p, r.n_max)?;
    let (m, mt) = (&sys[0], &sys[1]);
    let degrees = match &r.degrees {
        Some(d) => d.clone(),
        None => default_degrees(m.max_degree())?,
    };
    let growth = growth_from_moments(m, mt, &degrees, &r.optimize(), &Thresholds::default())?;
    let mut body = Map::new();
    body.insert("degrees".into(), json!(degrees));
    body.insert("growth".into(), growth_json(&growth));
    if !diagnostic_only {
        let cert = if degrees.last() == Some(&m.max_degree()) {
            growth.rows.last().expect("at least four rows").certificate.clone()
        } else {
            optimize_c(m, mt, &r.optimize())?
        };
        let check = verify_certificate(m, mt, &cert, r.tol)?;
        body.insert("certificate".into(), certificate_json(&cert));
        body.insert("verification".into(), verification_json(m.lattice(), &check));
        if let Some(sup) = supplied_certificate(p, r.n_max)? {
            let check = verify_certificate(m, mt, &sup, r.tol)?;
            body.insert(
                "supplied_certificate".into(),
                json!({"certificate": certificate_json(&sup), "verification": verification_json(m.lattice(), &check)}),
            );
        }
    }
    Ok(Outcome { verdict: growth.verdict.as_str().into(), code: EXIT_OK, body })
}

fn unitary(p: &ProblemFile, r: &Resolved) -> Result<Outcome, Failure> {
    let sys = build_systems(p, r.n_max)?;
    let (m, mt) = (&sys[0], &sys[1]);
    let t = test_unitary_equivalence_seeded(m, mt, r.tol, r.seed)?;
    let mut body = Map::new();
    body.insert("residual".into(), json!(t.residual));
    body.insert("used_fallback".into(), json!(t.used_fallback));
    if let Some(v) = &t.v {
        body.insert("V".into(), matrix_json(v));
    }
    if let Some(w) = &t.witness {
        let w = match w {
            Witness::Spectral { position, gap } => {
                json!({"type": "spectral", "index": index_json(m.lattice(), *position), "gap": gap})
            }
            Witness::Floor { residual } => json!({"type": "floor", "residual": residual}),
        };
        body.insert("witness".into(), w);
    }
    let verdict = if t.equivalent { "YES" } else { "NO" };
    Ok(Outcome { verdict: verdict.into(), code: EXIT_OK, body })
}

fn oracle(p: &ProblemFile, r: &Resolved) -> Result<Outcome, Failure> {
    let sys = build_systems(p, r.n_max)?;
    let (m, mt) = (&sys[0], &sys[1]);
    let space = brute_force_intertwiner(m, mt)?;
    let mut rng = random::rng(r.seed);
    let mut samples = Vec::with_capacity(ORACLE_SAMPLES);
    let mut all_passed = true;
    for _ in 0..ORACLE_SAMPLES {
        let x = space.sample(&mut rng);
        let check = space.check(&x, r.tol)?;
        let passed = check.certificate_passed
            && check.level0_residual <= STRUCTURE_TOL
            && check.recursion_residual <= STRUCTURE_TOL;
        all_passed &= passed;
        samples.push(json!({
            "level0_residual": check.level0_residual,
            "recursion_residual": check.recursion_residual,
            "membership_residual": space.membership_residual(&x),
            "certificate": certificate_json(&check.certificate),
            "certificate_passed": check.certificate_passed,
            "passed": passed,
        }));
    }
    let cert = optimize_c(m, mt, &r.optimize())?;
    let diag = diagonal_intertwiner(m, mt, &cert.c)?;
    let mut body = Map::new();
    body.insert("dimension".into(), json!(space.dimension()));
    body.insert("equation_count".into(), json!(space.equation_count()));
    body.insert("samples".into(), Value::Array(samples));
    body.insert(
        "diagonal_intertwiner".into(),
        json!({
            "certificate": certificate_json(&cert),
            "intertwining_residual": diag.intertwining_residual,
            "membership_residual": space.membership_residual(&diag.x),
        }),
    );
    let verdict = if all_passed { "CONSISTENT" } else { "INCONSISTENT" };
    Ok(Outcome { verdict: verdict.into(), code: EXIT_OK, body })
}

fn validate(p: &ProblemFile, r: &Resolved) -> Result<Outcome, Failure> {
    let mut reports = Vec::with_capacity(p.systems.len());
    let mut all_passed = true;
    for (i, spec) in p.systems.iter().enumerate() {
        let path = format!("systems[{i}]");
        let mut o = Map::new();
        o.insert("type".into(), json!(spec.type_name()));
        let mut passed = true;
        let m = if let super::schema::SystemSpec::Weights { .. } = spec {
            let (w, g0) = spec.weights(&path)?;
            let vr = validate_weights(&w);
            passed &= vr.passed;
            let path_res = path_independence_residual(&w)?;
            o.insert(
                "weights".into(),
                json!({
                    "passed": vr.passed,
                    "max_commutation_residual": vr.max_commutation_residual,
                    "min_singular_value": vr.min_singular_value,
                    "min_singular_ratio": vr.min_singular_ratio,
                    "max_norm": vr.max_norm,
                    "path_residual": path_res,
                    "failures": vr.failures,
                }),
            );
            if !vr.passed {
                reports.push(Value::Object(o));
                all_passed = false;
                continue;
            }
            moments_from_weights(&w, &g0)?
        } else {
            spec.build(&path, r.n_max)?
        };
        let canonical = canonical_weights(&m)?;
        let path_res = path_independence_residual(&canonical)?;
        passed &= path_res <= STRUCTURE_TOL;
        o.insert("canonical_path_residual".into(), json!(path_res));
        let mut shifts = Vec::with_capacity(m.d());
        for j in 0..m.d() {
            let adj = check_adjoint_formula(&m, j)?;
            let mz = build_mz(&m, j)?;
            let ok = adj.max_residual <= STRUCTURE_TOL && (mz.min_singular_value > 0.0 || adj.blocks_checked == 0);
            passed &= ok;
            shifts.push(json!({
                "direction": j,
                "adjoint_residual": adj.max_residual,
                "blocks_checked": adj.blocks_checked,
                "norm_estimate": mz.norm_estimate,
                "min_singular_value": mz.min_singular_value,
            }));
        }
        o.insert("shifts".into(), Value::Array(shifts));
        o.insert("passed".into(), json!(passed));
        all_passed &= passed;
        reports.push(Value::Object(o));
    }
    let mut body = Map::new();
    body.insert("systems".into(), Value::Array(reports));
    let (verdict, code) = if all_passed { ("VALID", EXIT_OK) } else { ("INVALID", EXIT_VALIDATION) };
    Ok(Outcome { verdict: verdict.into(), code, body })
}

/// Solves a parsed problem. `validate_only` runs the structural checks
/// whatever the problem kind. Returns the report and the exit code.
pub fn run_problem(p: &ProblemFile, flags: &RunFlags, validate_only: bool) -> Result<(Value, i32), Failure> {
    let r = Resolved {
        n_max: p.options.n_max,
        degrees: flags.degrees.clone().or_else(|| p.options.degrees.clone()),
        tol: flags.tol.or(p.options.tol).unwrap_or(DEFAULT_TOL),
        seed: flags.seed.or(p.options.seed).unwrap_or(DEFAULT_SEED),
    };
    if !(r.tol > 0.0 && r.tol.is_finite()) {
        return Err(Failure::validation(format!("tolerance must be positive, got {}", r.tol)));
    }
    let start = Instant::now();
    let kind = if validate_only { Kind::Validate } else { p.kind };
    let outcome = match kind {
        Kind::Similarity => similarity(p, &r, false)?,
        Kind::Diagnostic => similarity(p, &r, true)?,
        Kind::Unitary => unitary(p, &r)?,
        Kind::Oracle => oracle(p, &r)?,
        Kind::Validate => validate(p, &r)?,
    };
    let mut report = outcome.body;
    report.insert("version".into(), json!(1));
    report.insert("kind".into(), json!(kind.as_str()));
    report.insert("verdict".into(), json!(outcome.verdict));
    report.insert("options".into(), r.to_json());
    if !flags.no_timing {
        report.insert("timing".into(), json!({"seconds": start.elapsed().as_secs_f64()}));
    }
    Ok((Value::Object(report), outcome.code))
}

pub fn report_text(report: &Value) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("JSON values serialize");
    s.push('\n');
    s
}

pub(super) fn command(a: &ProblemArgs, validate_only: bool, quiet: bool) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(&a.problem).map_err(|e| Failure::io(&a.problem, e))?;
    let problem = ProblemFile::parse_str(&text)?;
    let flags = RunFlags { seed: a.seed, tol: a.tol, degrees: a.degrees.clone(), no_timing: a.no_timing };
    let (report, code) = run_problem(&problem, &flags, validate_only)?;
    let out = a.out.clone().unwrap_or_else(|| default_report_path(&a.problem));
    write_file(&out, &report_text(&report))?;
    if !quiet {
        println!("{}: {}", report["kind"].as_str().unwrap_or_default(), report["verdict"].as_str().unwrap_or_default());
        println!("report written to {}", out.display());
    }
    Ok(code)
}
