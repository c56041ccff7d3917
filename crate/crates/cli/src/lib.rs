//! The `lcks` command line.
//!
//! Every subcommand reads a JSON problem file, runs one family of checks
//! and writes a JSON report (or CSV). Exit status: 0 when every check
//! passes, 1 when a check fails, 2 on malformed input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lcks::dynamics::parse_grid;
use lcks::problem::{Problem, ProblemFile};
use lcks::region::GENERATOR;
use lcks::{Gauge, GridAxis};
use serde::Serialize;

mod commands;
mod demo;

#[derive(Debug, Parser)]
#[command(name = "lcks", version, about = "Checks for locally conformal k-symplectic structures and HDW dynamics")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify the structure axioms at sample points.
    CheckStructure(CommonArgs),
    /// Solve the HDW equations pointwise.
    Hdw(SolveArgs),
    /// Integrate a multi-time integral section and write it as CSV.
    Integrate(IntegrateArgs),
    /// Check the Hamilton-Jacobi conditions for the sections of a problem.
    HjVerify(HjArgs),
    /// Check the cocycle, localization and glueing of a problem's atlas.
    AtlasCheck(SolveArgs),
    /// Run a built-in problem end to end.
    Demo {
        #[command(subcommand)]
        problem: DemoProblem,
    },
}

#[derive(Debug, Subcommand)]
enum DemoProblem {
    /// The punctured plane with Lee form 2dφ and the quadratic Hamiltonian.
    PuncturedPlane(DemoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Problem file (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Evaluation point as a comma-separated list; repeatable.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: Vec<Vec<f64>>,
    /// Number of seeded sample points when no --point is given.
    #[arg(long)]
    points: Option<usize>,
    /// Seed of the sample-point generator.
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance of the checks.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Rule picking one solution of the underdetermined system.
    #[arg(long, value_parser = parse_gauge)]
    gauge: Option<Gauge>,
}

#[derive(Debug, Args)]
struct IntegrateArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Grid axes as `steps@h`, comma-separated; one axis is repeated.
    #[arg(long, value_parser = parse_grid_arg)]
    grid: Option<Axes>,
    /// Order in which the time axes are swept, 1-based (e.g. `2,1`).
    #[arg(long, value_parser = parse_order)]
    order: Option<Order>,
}

#[derive(Debug, Args)]
struct HjArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Section to check; all sections of the problem when absent.
    #[arg(long)]
    section: Option<String>,
    /// Grid of the integral section, as for `integrate`.
    #[arg(long, value_parser = parse_grid_arg)]
    grid: Option<Axes>,
}

#[derive(Debug, Args)]
struct DemoArgs {
    /// Number of momentum blocks.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=8))]
    k: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeded sample points per check.
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Also write the built-in problem file here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the summary as JSON or CSV instead of a table.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

/// Grid axes given on the command line.
#[derive(Clone, Debug)]
struct Axes(Vec<GridAxis>);

/// A 0-based axis permutation given 1-based on the command line.
#[derive(Clone, Debug)]
struct Order(Vec<usize>);

fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("`{c}`: {e}")))
        .collect()
}

fn parse_gauge(s: &str) -> Result<Gauge, String> {
    s.parse().map_err(|e: lcks::Error| e.to_string())
}

fn parse_grid_arg(s: &str) -> Result<Axes, String> {
    parse_grid(s).map(Axes).map_err(|e| e.to_string())
}

fn parse_order(s: &str) -> Result<Order, String> {
    s.split(',')
        .map(|c| match c.trim().parse::<usize>() {
            Ok(i) if i >= 1 => Ok(i - 1),
            _ => Err(format!("`{c}` is not a 1-based axis number")),
        })
        .collect::<Result<_, _>>()
        .map(Order)
}

/// Failure of a subcommand.
#[derive(Debug, thiserror::Error)]
pub(crate) enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Problem { path: String, source: lcks::Error },
    #[error(transparent)]
    Check(#[from] lcks::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Usage(_) => 2,
            CliError::Problem { source, .. } | CliError::Check(source) => {
                if source.is_input() {
                    2
                } else {
                    1
                }
            }
        }
    }
}

/// Report wrapper shared by all subcommands.
#[derive(Serialize)]
pub(crate) struct Envelope<'a, T: Serialize> {
    pub command: &'a str,
    pub problem: Option<&'a str>,
    pub generator: &'a str,
    pub seed: u64,
    pub passed: bool,
    pub report: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(command: &'a str, problem: &'a Problem, seed: u64, passed: bool, report: T) -> Self {
        Envelope {
            command,
            problem: problem.file.name.as_deref(),
            generator: GENERATOR,
            seed,
            passed,
            report,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }
}

/// What a subcommand produced.
pub(crate) struct Output {
    pub text: String,
    /// Extra text for standard output when `text` went to `--out`.
    pub summary: Option<String>,
    /// Printed to standard error.
    pub diagnostic: Option<String>,
    pub passed: bool,
}

impl Output {
    pub fn report(text: String, passed: bool) -> Output {
        Output {
            text,
            summary: None,
            diagnostic: None,
            passed,
        }
    }
}

pub(crate) fn load_problem(path: &Path) -> Result<Problem, CliError> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: shown.clone(),
        source,
    })?;
    ProblemFile::from_json(&text)
        .and_then(|f| f.build())
        .map_err(|source| CliError::Problem { path: shown, source })
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit status. Reports go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (result, out) = match &cli.command {
        Command::CheckStructure(a) => (commands::check_structure(a), a.out.as_deref()),
        Command::Hdw(a) => (commands::hdw(a), a.common.out.as_deref()),
        Command::Integrate(a) => (commands::integrate(a), a.solve.common.out.as_deref()),
        Command::HjVerify(a) => (commands::hj_verify(a), a.solve.common.out.as_deref()),
        Command::AtlasCheck(a) => (commands::atlas_check(a), a.common.out.as_deref()),
        Command::Demo {
            problem: DemoProblem::PuncturedPlane(a),
        } => (demo::punctured_plane(a), None),
    };
    let code = match result {
        Ok(output) => {
            if let Some(d) = &output.diagnostic {
                let _ = writeln!(stderr, "{d}");
            }
            let written = match out {
                Some(path) => write_file(path, &output.text).map(|_| output.summary.clone()),
                None => Ok(Some(output.text.clone())),
            };
            match written {
                Ok(text) => {
                    if let Some(text) = text {
                        let _ = stdout.write_all(text.as_bytes());
                    }
                    if output.passed {
                        0
                    } else {
                        1
                    }
                }
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    };
    let _ = stdout.flush();
    code
}
