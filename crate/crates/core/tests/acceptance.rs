//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! (visible with `--nocapture`) before asserting.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use multishift::equivalence::{
    brute_force_intertwiner, growth_diagnostic, optimize_c, test_unitary_equivalence, verify_certificate, Certificate,
    OptimizeOptions, Thresholds, Verdict, Witness,
};
use multishift::kernelgen::{log_pochhammer, perturb_kernel, pochhammer_kernel, PochhammerPair};
use multishift::lattice::Truncation;
use multishift::numerics::Matrix;
use multishift::random;
use multishift::shiftcore::{build_mz, canonical_weights, check_adjoint_formula, path_independence_residual, Moments};
use multishift::Result;

fn report(criterion: &str, passed: bool, detail: String) {
    println!("criterion {criterion}: {} ({detail})", if passed { "PASS" } else { "FAIL" });
}

fn pochhammer_pair(p: (f64, f64), q: (f64, f64), n: usize) -> Result<(Moments<f64>, Moments<f64>)> {
    let (_, m) = pochhammer_kernel(PochhammerPair::new(p.0, p.1)?, 2, n)?;
    let (_, mt) = pochhammer_kernel(PochhammerPair::new(q.0, q.1)?, 2, n)?;
    Ok((m, mt))
}

fn swap() -> Matrix<f64> {
    Matrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

#[test]
fn criterion_1_swapped_parameters() {
    let start = Instant::now();
    let (m, mt) = pochhammer_pair((1.0, 2.0), (2.0, 1.0), 30).unwrap();
    let explicit = verify_certificate(&m, &mt, &Certificate::new(swap(), 1.0, 1.0), 1e-10).unwrap();
    let found = optimize_c(&m, &mt, &OptimizeOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let passed = explicit.passed && found.log_ratio() <= 1e-6 && elapsed <= Duration::from_secs(10);
    report(
        "1",
        passed,
        format!(
            "explicit swap certificate passed={}, optimized log_ratio={:.3e}, {:.2}s",
            explicit.passed,
            found.log_ratio(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_2_growth_of_distinct_parameters() {
    let start = Instant::now();
    let degrees = [8, 16, 24, 32, 48, 64];
    let opts = OptimizeOptions::default();
    let th = Thresholds::default();
    let neg = growth_diagnostic(|n| pochhammer_pair((1.0, 2.0), (1.0, 3.0), n), &degrees, &opts, &th).unwrap();
    let pos = growth_diagnostic(|n| pochhammer_pair((1.0, 3.0), (3.0, 1.0), n), &degrees, &opts, &th).unwrap();
    let elapsed = start.elapsed();
    let passed = (0.8..=1.2).contains(&neg.slope)
        && neg.verdict == Verdict::NotSimilarEvidence
        && pos.slope <= 0.1
        && pos.verdict == Verdict::SimilarEvidence
        && elapsed <= Duration::from_secs(60);
    report(
        "2",
        passed,
        format!(
            "(1,2)/(1,3) slope={:.4} {}, (1,3)/(3,1) slope={:.3e} {}, {:.2}s",
            neg.slope,
            neg.verdict,
            pos.slope,
            pos.verdict,
            elapsed.as_secs_f64()
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_3_low_degree_perturbation() {
    let (kernel, base) = pochhammer_kernel::<f64>(PochhammerPair::new(1.0, 2.0).unwrap(), 2, 20).unwrap();
    let lattice = Truncation::new(2, 20).unwrap();
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        let mut rng = random::rng(seed);
        let replacements: Vec<_> = lattice.indices()[..lattice.prefix_len(2)]
            .iter()
            .map(|a| (a.clone(), random::log_pd::<f64>(&mut rng, 2, 10.0, 1.0)))
            .collect();
        let (perturbed, cert) = perturb_kernel(&kernel, &replacements).unwrap();
        let rep = verify_certificate(&base, &perturbed.moments().unwrap(), &cert, 1e-9).unwrap();
        if !rep.passed {
            failures.push(seed);
        }
    }
    report("3", failures.is_empty(), format!("10 seeds at N=20, failing seeds {failures:?}"));
    assert!(failures.is_empty());
}

#[test]
fn criterion_4_hidden_unitary_recovery() {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        let mut rng = random::rng(seed);
        let m = random::moment_system::<f64>(&mut rng, 2, 4, 3, 10.0);
        let v0 = random::unitary::<f64>(&mut rng, 3);
        let found = test_unitary_equivalence(&m, &m.congruence(&v0).unwrap(), 1e-8).unwrap();
        worst = worst.max(found.residual);
        if !found.equivalent || found.residual > 1e-8 {
            failures.push(format!("seed {seed}: recovery"));
        }
        let doubled = test_unitary_equivalence(&m, &m.scale_log(2f64.ln()), 1e-8).unwrap();
        if doubled.equivalent || !matches!(doubled.witness, Some(Witness::Spectral { .. })) {
            failures.push(format!("seed {seed}: doubled control"));
        }
        let other = random::moment_system::<f64>(&mut rng, 2, 4, 3, 10.0);
        let indep = test_unitary_equivalence(&m, &other, 1e-8).unwrap();
        if indep.equivalent || !matches!(indep.witness, Some(Witness::Spectral { .. })) {
            failures.push(format!("seed {seed}: independent control"));
        }
    }
    report("4", failures.is_empty(), format!("20 instances, max residual {worst:.3e}, failures {failures:?}"));
    assert!(failures.is_empty());
}

#[test]
fn criterion_5_brute_force_intertwiners() {
    let mut worst_level0 = 0.0f64;
    let mut worst_recursion = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        let mut rng = random::rng(100 + seed);
        let m = random::moment_system::<f64>(&mut rng, 2, 3, 2, 10.0);
        let mt = random::moment_system::<f64>(&mut rng, 2, 3, 2, 10.0);
        assert!(m.total_dim() <= 40);
        let space = brute_force_intertwiner(&m, &mt).unwrap();
        for _ in 0..3 {
            let x = space.sample(&mut rng);
            let check = space.check(&x, 1e-9).unwrap();
            worst_level0 = worst_level0.max(check.level0_residual);
            worst_recursion = worst_recursion.max(check.recursion_residual);
            if check.level0_residual > 1e-9 || check.recursion_residual > 1e-9 || !check.certificate_passed {
                failures.push(seed);
            }
        }
    }
    let passed = failures.is_empty();
    report(
        "5",
        passed,
        format!(
            "level-0 residual {worst_level0:.3e}, recursion residual {worst_recursion:.3e}, failing seeds {failures:?}"
        ),
    );
    assert!(passed);
}

fn structure_instances() -> Vec<Moments<f64>> {
    (0..20u64)
        .map(|seed| {
            let mut rng = random::rng(200 + seed);
            let d = 1 + (seed % 3) as usize;
            let n_max = 1 + (seed % 5) as usize;
            let n = 1 + (seed % 3) as usize;
            random::moment_system::<f64>(&mut rng, d, n_max, n, 10.0)
        })
        .collect()
}

#[test]
fn criterion_6_adjoint_formula() {
    let mut worst = 0.0f64;
    let mut min_sv = f64::INFINITY;
    for m in structure_instances() {
        for j in 0..m.d() {
            worst = worst.max(check_adjoint_formula(&m, j).unwrap().max_residual);
            min_sv = min_sv.min(build_mz(&m, j).unwrap().min_singular_value);
        }
    }
    let passed = worst <= 1e-9 && min_sv > 0.0;
    report("6", passed, format!("max adjoint residual {worst:.3e}, min block singular value {min_sv:.3e}"));
    assert!(passed);
}

#[test]
fn criterion_7_path_independence() {
    let mut worst = 0.0f64;
    for m in structure_instances() {
        worst = worst.max(path_independence_residual(&canonical_weights(&m).unwrap()).unwrap());
    }
    let passed = worst <= 1e-9;
    report("7", passed, format!("max relative path residual {worst:.3e}"));
    assert!(passed);
}

fn ratio_slope(lambda: f64, lambda_t: f64) -> f64 {
    let ns: Vec<usize> = (64..=256).collect();
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> =
        ns.iter().map(|&n| log_pochhammer::<f64>(lambda_t, n) - log_pochhammer::<f64>(lambda, n)).collect();
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn criterion_8_factorials_and_ratio_slopes() {
    let mut worst = 0.0f64;
    let mut ln_fact = 0.0f64;
    for n in 0..=170usize {
        if n > 1 {
            ln_fact += (n as f64).ln();
        }
        let got: f64 = log_pochhammer(1.0, n);
        let err = if ln_fact == 0.0 { got.abs() } else { (got - ln_fact).abs() / ln_fact };
        worst = worst.max(err);
    }
    let (s12, s33) = (ratio_slope(1.0, 2.0), ratio_slope(3.0, 3.0));
    let passed = worst <= 1e-11 && (s12 - 1.0).abs() <= 0.02 && s33.abs() <= 0.02;
    report("8", passed, format!("log n! relative error {worst:.3e}, slope (1,2)={s12:.4}, slope (3,3)={s33:.3e}"));
    assert!(passed);
}

#[test]
fn criterion_8_ratio_slope_two_five() {
    let s = ratio_slope(2.0, 5.0);
    let passed = (s - 3.0).abs() <= 0.02;
    report("8 (2,5)", passed, format!("slope over n in [64, 256] = {s:.4}, expected 3 +/- 0.02"));
    assert!(passed, "slope {s}");
}

fn cli(dir: &Path, threads: usize, args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_multishift"))
        .current_dir(dir)
        .args(["--quiet", "--threads", &threads.to_string()])
        .args(args)
        .status()
        .expect("binary runs");
    assert!(status.success(), "{args:?} exited with {status}");
}

#[test]
fn criterion_9_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let problems: &[(&str, &[&str])] = &[
        ("c1", &["gen", "pochhammer", "--lambda", "1", "--mu", "2", "--lambda2", "2", "--mu2", "1", "--N", "30"]),
        (
            "c2n",
            &[
                "gen",
                "pochhammer",
                "--lambda",
                "1",
                "--mu",
                "2",
                "--lambda2",
                "1",
                "--mu2",
                "3",
                "--N",
                "64",
                "--kind",
                "diagnostic",
                "--degrees",
                "8,16,24,32,48,64",
            ],
        ),
        (
            "c2p",
            &[
                "gen",
                "pochhammer",
                "--lambda",
                "1",
                "--mu",
                "3",
                "--lambda2",
                "3",
                "--mu2",
                "1",
                "--N",
                "64",
                "--kind",
                "diagnostic",
                "--degrees",
                "8,16,24,32,48,64",
            ],
        ),
        ("c3", &["gen", "perturb", "--base", "pochhammer:1,2", "--random-upto", "2", "--seed", "3", "--N", "20"]),
        ("c4", &["gen", "unitary-congruence", "--d", "2", "--N", "4", "--n", "3", "--seed", "7"]),
        (
            "c5",
            &[
                "gen",
                "pochhammer",
                "--lambda",
                "1",
                "--mu",
                "2",
                "--lambda2",
                "1.5",
                "--mu2",
                "2.5",
                "--N",
                "3",
                "--kind",
                "oracle",
            ],
        ),
        (
            "c6",
            &[
                "gen",
                "pochhammer",
                "--lambda",
                "1",
                "--mu",
                "2",
                "--lambda2",
                "1",
                "--mu2",
                "3",
                "--N",
                "5",
                "--d",
                "3",
                "--kind",
                "validate",
            ],
        ),
    ];
    let mut mismatched = Vec::new();
    for (name, gen) in problems {
        let file = format!("{name}.json");
        let mut args = gen.to_vec();
        args.extend(["--out", &file]);
        cli(p, 1, &args);
        let mut outputs = Vec::new();
        for (tag, threads) in [("a", 1), ("b", 1), ("c", 8)] {
            let out = format!("{name}.{tag}.report.json");
            cli(p, threads, &["run", &file, "--no-timing", "--out", &out]);
            outputs.push(std::fs::read(p.join(&out)).unwrap());
        }
        if outputs[0] != outputs[1] || outputs[0] != outputs[2] {
            mismatched.push(*name);
        }
    }
    let passed = mismatched.is_empty();
    report("9", passed, format!("{} problems, 1 vs 1 vs 8 threads, mismatched {mismatched:?}", problems.len()));
    assert!(passed);
}
