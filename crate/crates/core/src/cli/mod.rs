//! The `micz` command-line driver.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 configuration or usage
//! error, 3 numerical failure (collision, gauge singularity, step failure),
//! 4 a comparison or verification tolerance was exceeded.

pub mod plot;
pub mod scenario;
pub mod trajectory_csv;

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::dynamics::{cone_solve, integrate_reduced, Scenario};
use crate::exec::Execution;
use crate::verify::{compare_trajectories, run_suite, Suite};

pub use scenario::ScenarioFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

/// Seed used by `verify` when neither `--seed` nor `MICZ_SEED` is given.
pub const DEFAULT_SEED: u64 = 20240901;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(crate::Error),
    #[error("tolerance exceeded: {0}")]
    Tolerance(String),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "micz", version, about = "Cone and reduced solvers for the n-dimensional MICZ-Kepler system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Cone,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    All,
    Connection,
    Submersion,
    SpecialCases,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::All => Suite::All,
            SuiteArg::Connection => Suite::Connection,
            SuiteArg::Submersion => Suite::Submersion,
            SuiteArg::SpecialCases => Suite::SpecialCases,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one scenario and write the trajectory as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        method: SolverArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a scenario both ways and write a JSON comparison report.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Run the verification suite; the JSON report goes to --report or stdout.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        /// Random seed; falls back to MICZ_SEED, then to a fixed default.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Run on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Draw a coordinate-plane projection of a trajectory CSV as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        /// Plane as `i,j` with 1 <= i < j <= n.
        #[arg(long)]
        plane: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Writes through a temporary file in the target directory, then renames it
/// into place.
pub(crate) fn write_atomic<F>(path: &Path, fill: F) -> Result<(), String>
where
    F: FnOnce(&mut File) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| format!("{}: {e}", path.display()))?;
    fill(tmp.as_file_mut()).map_err(|e| format!("{}: {e}", path.display()))?;
    tmp.as_file_mut().sync_all().map_err(|e| format!("{}: {e}", path.display()))?;
    tmp.persist(path).map_err(|e| format!("{}: {}", path.display(), e.error))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, |f| f.write_all(text.as_bytes())).map_err(CliError::Io)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ScenarioFile::parse(&text).and_then(|f| f.to_scenario()).map_err(CliError::Config)
}

/// `--seed`, else `MICZ_SEED`, else [`DEFAULT_SEED`].
pub fn resolve_seed(flag: Option<u64>, env: Option<OsString>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        None => Ok(DEFAULT_SEED),
        Some(v) => {
            let text = v.to_string_lossy();
            text.trim().parse().map_err(|_| CliError::Config(format!("MICZ_SEED: must be an unsigned integer (got {text:?})")))
        }
    }
}

fn parse_plane(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("plane: expected two indices `i,j` (got {text:?})"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, method, out } => {
            let s = load_scenario(&config)?;
            let times = s.time_grid()?;
            let start = Instant::now();
            let traj = match method {
                SolverArg::Cone => cone_solve(&s, &times)?,
                SolverArg::Reduced => integrate_reduced(&s, &times)?,
            };
            eprintln!("{} samples in {:.3} s", traj.samples.len(), start.elapsed().as_secs_f64());
            trajectory_csv::export_csv(traj.n, &traj.samples, &out).map_err(CliError::Io)
        }
        Command::Compare { config, report } => {
            let s = load_scenario(&config)?;
            let times = s.time_grid()?;
            let start = Instant::now();
            let cone = cone_solve(&s, &times)?;
            let cone_time = start.elapsed().as_secs_f64();
            let reduced = integrate_reduced(&s, &times)?;
            let reduced_time = start.elapsed().as_secs_f64() - cone_time;
            eprintln!("runtime: cone {cone_time:.3} s, reduced {reduced_time:.3} s");
            let rep = compare_trajectories(&cone, &reduced)?;
            write_text(&report, &to_json(&rep))?;
            if rep.passed {
                Ok(())
            } else {
                let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                Err(CliError::Tolerance(failed.join(", ")))
            }
        }
        Command::Verify { suite, seed, report, sequential } => {
            let seed = resolve_seed(seed, std::env::var_os("MICZ_SEED"))?;
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let rep = run_suite(suite.into(), seed, exec)?;
            let text = to_json(&rep);
            match report {
                Some(path) => write_text(&path, &text)?,
                None => {
                    let mut stdout = std::io::stdout().lock();
                    stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
                }
            }
            for c in rep.checks.iter().filter(|c| !c.passed) {
                eprintln!("FAIL {}: {:e} vs {:e}", c.name, c.value, c.tolerance);
            }
            if rep.passed {
                Ok(())
            } else {
                Err(CliError::Tolerance(format!("{} checks failed", rep.checks.iter().filter(|c| !c.passed).count())))
            }
        }
        Command::Plot { input, plane, out } => {
            let plane = parse_plane(&plane)?;
            let (n, samples) = trajectory_csv::import_csv(&input).map_err(CliError::Config)?;
            let svg = plot::render_svg(n, &samples, plane).map_err(CliError::Config)?;
            write_text(&out, &svg)
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("micz: {e}");
            e.exit_code()
        }
    }
}
