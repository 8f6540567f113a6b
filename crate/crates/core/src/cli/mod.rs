//! Command-line front end.
//!
//! `run` and `validate` read a problem file and write a JSON report; `gen`
//! writes problem files. Exit codes: 0 when a verdict was produced, 1 on I/O
//! failure, 2 when the inputs fail validation, 3 on schema errors.

pub mod gen;
mod run;
pub mod schema;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use run::{report_text, run_problem, RunFlags};
pub use schema::{Kind, LoadError, Options, ProblemFile, SystemSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "multishift",
    version,
    about = "Similarity and unitary equivalence of truncated operator-valued multishifts"
)]
pub struct Cli {
    /// Worker threads for per-degree and per-index fan-out.
    #[arg(long, global = true, env = "MULTISHIFT_THREADS")]
    pub threads: Option<usize>,
    /// Suppress the human-readable summary.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file and write its report.
    Run(ProblemArgs),
    /// Check the systems of a problem file without solving it.
    Validate(ProblemArgs),
    /// Write a problem file.
    #[command(subcommand)]
    Gen(gen::GenCommand),
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    pub problem: PathBuf,
    /// Report path (default: the problem path with a `.report.json` suffix).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Comma-separated truncation degrees for the growth diagnostic.
    #[arg(long, value_delimiter = ',')]
    pub degrees: Option<Vec<usize>>,
    /// Leave wall-clock timing out of the report.
    #[arg(long)]
    pub no_timing: bool,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Failure { code: EXIT_VALIDATION, message: message.into() }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let code = match e {
            LoadError::Schema { .. } => EXIT_SCHEMA,
            LoadError::Validation(_) => EXIT_VALIDATION,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::validation(e.to_string())
    }
}

/// `problem.json` → `problem.report.json`.
pub fn default_report_path(problem: &Path) -> PathBuf {
    with_suffix(problem, ".report.json")
}

pub(crate) fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let s = path.to_string_lossy();
    let stem = s.strip_suffix(".json").unwrap_or(&s);
    PathBuf::from(format!("{stem}{suffix}"))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::io(path, e))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_VALIDATION;
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let outcome = match &cli.command {
        Command::Run(a) => run::command(a, false, cli.quiet),
        Command::Validate(a) => run::command(a, true, cli.quiet),
        Command::Gen(g) => gen::command(g, cli.quiet),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> ExitCode {
    let code = run_cli(std::env::args_os());
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
