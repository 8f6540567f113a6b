use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde_json::json;

use super::schema::{
    matrix_json, moments_spec, Kind, Options, ProblemFile, RawCertificate, RawMatrix, RawPd, SystemSpec,
};
use super::{with_suffix, write_file, Failure, EXIT_OK};
use crate::kernelgen::{pochhammer_ground_truth, PochhammerPair};
use crate::lattice::Truncation;
use crate::numerics::{LogPd, Matrix};
use crate::random;

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Two diagonal Pochhammer kernels.
    Pochhammer(PochhammerArgs),
    /// A random moment system and a hidden unitary congruence of it.
    UnitaryCongruence(CongruenceArgs),
    /// A Pochhammer kernel against a copy with low-degree coefficients replaced.
    Perturb(PerturbArgs),
}

#[derive(Debug, Args)]
pub struct PochhammerArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda2: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub mu2: f64,
    #[arg(long = "N")]
    pub n_max: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Problem kind: similarity, diagnostic, unitary, oracle or validate.
    #[arg(long, default_value = "similarity")]
    pub kind: String,
    #[arg(long, value_delimiter = ',')]
    pub degrees: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CongruenceArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "N")]
    pub n_max: usize,
    /// Fiber dimension.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Largest condition number of the random Grams.
    #[arg(long, default_value_t = 10.0)]
    pub cond: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// Base kernel, `pochhammer:LAMBDA,MU`.
    #[arg(long)]
    pub base: String,
    /// Replace the constant coefficient by this multiple of the identity.
    #[arg(long)]
    pub replace0: Option<f64>,
    /// Replace every coefficient of degree at most this by a random positive matrix.
    #[arg(long)]
    pub random_upto: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "N", default_value_t = 20)]
    pub n_max: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_base(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::validation(format!("--base must look like pochhammer:LAMBDA,MU, got {s:?}"));
    let rest = s.strip_prefix("pochhammer:").ok_or_else(bad)?;
    let (a, b) = rest.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn check_shape(d: usize, n_max: usize) -> Result<(), Failure> {
    if d == 0 {
        return Err(Failure::validation("--d must be at least 1"));
    }
    Truncation::new(d, n_max)?;
    Ok(())
}

pub fn pochhammer_problem(a: &PochhammerArgs) -> Result<ProblemFile, Failure> {
    check_shape(a.d, a.n_max)?;
    let p = PochhammerPair::new(a.lambda, a.mu)?;
    let q = PochhammerPair::new(a.lambda2, a.mu2)?;
    let kind = Kind::parse(&a.kind).ok_or_else(|| Failure::validation(format!("unknown kind {:?}", a.kind)))?;
    let truth = if pochhammer_ground_truth(p, q) { "similar" } else { "not_similar" };
    Ok(ProblemFile {
        kind,
        systems: vec![
            SystemSpec::Pochhammer { lambda: a.lambda, mu: a.mu, d: a.d, n_max: None },
            SystemSpec::Pochhammer { lambda: a.lambda2, mu: a.mu2, d: a.d, n_max: None },
        ],
        options: Options { n_max: Some(a.n_max), degrees: a.degrees.clone(), tol: None, seed: a.seed },
        ground_truth: Some(truth.into()),
        certificate: None,
    })
}

/// Problem file plus the hidden unitary `V₀` with `G̃_α = V₀* G_α V₀`.
pub fn congruence_problem(a: &CongruenceArgs) -> Result<(ProblemFile, Matrix<f64>), Failure> {
    check_shape(a.d, a.n_max)?;
    if a.n == 0 {
        return Err(Failure::validation("--n must be at least 1"));
    }
    if !(a.cond >= 1.0 && a.cond.is_finite()) {
        return Err(Failure::validation("--cond must be a finite number of at least 1"));
    }
    let mut rng = random::rng(a.seed);
    let m = random::moment_system::<f64>(&mut rng, a.d, a.n_max, a.n, a.cond);
    let v0 = random::unitary::<f64>(&mut rng, a.n);
    let mt = m.congruence(&v0)?;
    let problem = ProblemFile {
        kind: Kind::Unitary,
        systems: vec![moments_spec(&m), moments_spec(&mt)],
        options: Options { n_max: Some(a.n_max), degrees: None, tol: None, seed: Some(a.seed) },
        ground_truth: Some("unitarily_equivalent".into()),
        certificate: None,
    };
    Ok((problem, v0))
}

pub fn perturb_problem(a: &PerturbArgs) -> Result<ProblemFile, Failure> {
    check_shape(a.d, a.n_max)?;
    let (lambda, mu) = parse_base(&a.base)?;
    PochhammerPair::new(lambda, mu)?;
    if a.replace0.is_none() && a.random_upto.is_none() {
        return Err(Failure::validation("give --replace0 or --random-upto"));
    }
    let lattice = Truncation::new(a.d, a.n_max)?;
    let mut replacements: Vec<(Vec<u32>, RawPd)> = Vec::new();
    if let Some(k) = a.random_upto {
        if k > a.n_max {
            return Err(Failure::validation(format!("--random-upto {k} exceeds N = {}", a.n_max)));
        }
        let mut rng = random::rng(a.seed);
        for alpha in &lattice.indices()[..lattice.prefix_len(k)] {
            let pd = random::log_pd::<f64>(&mut rng, 2, 10.0, 1.0);
            replacements.push((alpha.components().to_vec(), RawPd::from_logpd(&pd)));
        }
    }
    if let Some(x) = a.replace0 {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Failure::validation(format!("--replace0 must be positive, got {x}")));
        }
        let pd = RawPd::from_logpd(&LogPd::identity(2).scale_log(x.ln()));
        let zero = vec![0; a.d];
        replacements.retain(|(idx, _)| *idx != zero);
        replacements.insert(0, (zero, pd));
    }
    let base = SystemSpec::Pochhammer { lambda, mu, d: a.d, n_max: None };
    let perturbed = SystemSpec::Perturbed { base: Box::new(base.clone()), replacements };
    let cert = perturbed
        .perturbation_certificate("systems[1]", Some(a.n_max))?
        .expect("perturbed systems carry a certificate");
    Ok(ProblemFile {
        kind: Kind::Similarity,
        systems: vec![base, perturbed],
        options: Options { n_max: Some(a.n_max), degrees: None, tol: None, seed: Some(a.seed) },
        ground_truth: Some("similar".into()),
        certificate: Some(RawCertificate {
            c: RawMatrix::from_matrix(&cert.c),
            log_m1: cert.log_m1,
            log_m2: cert.log_m2,
        }),
    })
}

pub(super) fn command(g: &GenCommand, quiet: bool) -> Result<i32, Failure> {
    let out = match g {
        GenCommand::Pochhammer(a) => {
            write_file(&a.out, &pochhammer_problem(a)?.to_string_pretty())?;
            a.out.clone()
        }
        GenCommand::UnitaryCongruence(a) => {
            let (problem, v0) = congruence_problem(a)?;
            write_file(&a.out, &problem.to_string_pretty())?;
            let answer = with_suffix(&a.out, ".answer.json");
            let mut text = serde_json::to_string_pretty(&json!({"V0": matrix_json(&v0), "seed": a.seed}))
                .expect("JSON values serialize");
            text.push('\n');
            write_file(&answer, &text)?;
            if !quiet {
                println!("answer written to {}", answer.display());
            }
            a.out.clone()
        }
        GenCommand::Perturb(a) => {
            write_file(&a.out, &perturb_problem(a)?.to_string_pretty())?;
            a.out.clone()
        }
    };
    if !quiet {
        println!("problem written to {}", out.display());
    }
    Ok(EXIT_OK)
}
