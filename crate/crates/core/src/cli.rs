//! Command-line driver: bias, profile and I-V sweeps as CSV, plus `validate`.
//!
//! Exit status: 0 on success, 2 on a configuration error, 3 when at least one
//! row failed to integrate (the CSV is still written, with `nan` in that row),
//! 1 when `validate` reports a failed check or output cannot be written.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::model::{ModelError, ModelParams};
use crate::observables::{self, ObservableError, SweepResult};
use crate::quadrature::DEFAULT_REL_TOL;
use crate::validation::{self, Tolerances};

pub const THREADS_ENV: &str = "KWIRE_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_QUADRATURE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "kwire", version, about = "Biased quantum wire: correlations and current")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Lead band width W
    #[arg(long = "w", default_value_t = 2.0)]
    pub w: f64,
    /// Lead-wire coupling T'
    #[arg(long = "t-prime", default_value_t = 0.5)]
    pub t_prime: f64,
    /// Number of wire sites L
    #[arg(long = "wire-length", default_value_t = 20)]
    pub wire_length: usize,
    /// Relative Romberg tolerance
    #[arg(long = "rel-tol", default_value_t = DEFAULT_REL_TOL)]
    pub rel_tol: f64,
    /// Output file (stdout when omitted)
    #[arg(long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// C_ij against bias eV
    SweepBias {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "i", default_value_t = 4)]
        i: usize,
        #[arg(long = "j", default_value_t = 8)]
        j: usize,
        /// Bias grid `start:stop:step` (inclusive) or a single value
        #[arg(long = "ev", default_value = "0:2:0.05")]
        ev: String,
    },
    /// Spatial profile of C at fixed bias
    Profile {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = ProfileMode::Distance)]
        mode: ProfileMode,
        /// Fixed site for distance mode
        #[arg(long = "i", default_value_t = 4)]
        i: usize,
        /// Separation for position mode
        #[arg(long = "d", default_value_t = 4)]
        d: usize,
        #[arg(long = "ev", default_value_t = 1.0)]
        ev: f64,
    },
    /// Current against bias eV
    Iv {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "ev", default_value = "0:2:0.1")]
        ev: String,
    },
    /// Run the self-consistency checks and print a pass/fail table
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        /// Replace every check tolerance by this value
        #[arg(long = "tol")]
        tol: Option<f64>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMode {
    /// C_{i, k} for k = 1..L
    Distance,
    /// C_{k, k+d} for k = 1..L-d
    Position,
}

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("invalid grid `{0}`: {1}")]
    Grid(String, &'static str),
    #[error("rel-tol must be positive and finite, got {0}")]
    RelTol(f64),
    #[error("tol must be positive, got {0}")]
    Tol(f64),
    #[error("{THREADS_ENV} must be a positive integer, got `{0}`")]
    Threads(String),
    #[error("cannot open {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

/// Parses `start:stop:step` into an inclusive grid. A bare number is a
/// one-point grid. The last point is kept if it lies within half a step of `stop`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |why| ConfigError::Grid(spec.to_string(), why);
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| s.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("not a number"))?;
    if nums.iter().any(|x| !x.is_finite()) {
        return Err(bad("values must be finite"));
    }
    match nums[..] {
        [x] => Ok(vec![x]),
        [start, stop, step] => {
            if !(step > 0.0) {
                return Err(bad("step must be positive"));
            }
            if start > stop {
                return Err(bad("start must not exceed stop"));
            }
            let n = ((stop - start) / step + 0.5).floor() as usize + 1;
            Ok((0..n).map(|k| start + k as f64 * step).collect())
        }
        _ => Err(bad("expected start:stop:step")),
    }
}

/// Validated configuration shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub rel_tol: f64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_args(m: &ModelArgs, ev: f64) -> Result<Self, ConfigError> {
        if !(m.rel_tol.is_finite() && m.rel_tol > 0.0) {
            return Err(ConfigError::RelTol(m.rel_tol));
        }
        Ok(RunConfig {
            params: ModelParams::new(m.w, m.t_prime, m.wire_length, ev)?,
            rel_tol: m.rel_tol,
            out: m.out.clone(),
        })
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, ConfigError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw.trim().parse().map_err(|_| ConfigError::Threads(raw.clone()))?;
        if n == 0 {
            return Err(ConfigError::Threads(raw));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|_| ConfigError::Threads("pool".into()))
}

fn emit(cfg: &RunConfig, sweep: &SweepResult, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let written = match &cfg.out {
        Some(path) => File::create(path)
            .map_err(|source| ConfigError::Output {
                path: path.clone(),
                source,
            })
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                sweep
                    .write_csv(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(|source| ConfigError::Output {
                        path: path.clone(),
                        source,
                    })
            }),
        None => sweep.write_csv(&mut *stdout).map_err(|source| ConfigError::Output {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_CHECK_FAILED;
    }
    let mut failed = false;
    for e in sweep.failures() {
        failed = true;
        let _ = writeln!(stderr, "error: {e}");
    }
    if failed {
        EXIT_QUADRATURE
    } else {
        EXIT_OK
    }
}

enum Outcome {
    Sweep(RunConfig, SweepResult),
    Report { text: String, all_passed: bool },
}

fn validate(cfg: &RunConfig, tol: Option<f64>) -> Result<Outcome, ConfigError> {
    let tolerances = match tol {
        Some(t) if t > 0.0 && t.is_finite() => Tolerances::uniform(t),
        Some(t) => return Err(ConfigError::Tol(t)),
        None => Tolerances::default(),
    };
    let results = validation::run_all(&cfg.params, &tolerances, cfg.rel_tol);
    let passed = results.iter().filter(|r| r.passed).count();
    let total = results.len();
    let mut text = String::new();
    for r in &results {
        let mark = if r.passed { "PASS" } else { "FAIL" };
        text.push_str(&format!("{mark}  {:<44} {}\n", r.name, r.detail));
    }
    if passed == total {
        text.push_str(&format!("PASS {passed}/{total}\n"));
    } else {
        text.push_str(&format!("FAIL {}/{total}\n", total - passed));
    }
    Ok(Outcome::Report {
        text,
        all_passed: passed == total,
    })
}

fn compute(command: &Command) -> Result<Outcome, ConfigError> {
    match command {
        Command::SweepBias { model, i, j, ev } => {
            let grid = parse_grid(ev)?;
            let cfg = RunConfig::from_args(model, 0.0)?;
            let sweep = observables::sweep_bias(*i, *j, &grid, &cfg.params, cfg.rel_tol)?;
            Ok(Outcome::Sweep(cfg, sweep))
        }
        Command::Profile { model, mode, i, d, ev } => {
            let cfg = RunConfig::from_args(model, *ev)?;
            let sweep = match mode {
                ProfileMode::Distance => observables::sweep_distance(*i, &cfg.params, cfg.rel_tol)?,
                ProfileMode::Position => observables::sweep_position(*d, &cfg.params, cfg.rel_tol)?,
            };
            Ok(Outcome::Sweep(cfg, sweep))
        }
        Command::Iv { model, ev } => {
            let grid = parse_grid(ev)?;
            let cfg = RunConfig::from_args(model, 0.0)?;
            let sweep = observables::sweep_iv(&grid, &cfg.params, cfg.rel_tol)?;
            Ok(Outcome::Sweep(cfg, sweep))
        }
        Command::Validate { model, tol } => {
            let cfg = RunConfig::from_args(model, 0.0)?;
            validate(&cfg, *tol)
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_CONFIG
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let result = thread_pool().and_then(|pool| pool.install(|| compute(&cli.command)));
    match result {
        Ok(Outcome::Sweep(cfg, sweep)) => emit(&cfg, &sweep, stdout, stderr),
        Ok(Outcome::Report { text, all_passed }) => {
            let _ = stdout.write_all(text.as_bytes());
            if all_passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_CONFIG
        }
    }
}
