//! Command-line front end for the thermalization toolkit: parameter
//! tuning queries, trajectory emission, approximation tables,
//! protocol sequences, and self-verification suites.
//!
//! Exit codes: 0 success, 1 verification or convergence failure,
//! 2 usage error, 3 domain error.

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod record;

pub const DEFAULT_THERMALITY_TOL: f64 = qtherm_core::DEFAULT_THERMALITY_TOL;

#[derive(Parser)]
#[command(
    name = "qtherm",
    version,
    about = "Finite-time thermalization of a harmonic oscillator by quenching a coupled partner",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Tuning parameters (omega', k, tau) for a target temperature
    Tune(TuneArgs),
    /// Discrete-set approximations to a target temperature, fastest first
    Approx(ApproxArgs),
    /// Simulate one quench stage and emit the trajectory as CSV
    Evolve(EvolveArgs),
    /// Simulate a heat/cool sequence between two set indices
    Sequence(SequenceArgs),
    /// Run the built-in invariant suites
    Verify(VerifyArgs),
}

/// Target temperature, given either as inverse temperature in
/// ground-state-energy units or as its reciprocal.
#[derive(Args, Debug)]
#[command(group(ArgGroup::new("target").required(true).args(["beta_eg", "temperature"])))]
pub struct TempArgs {
    /// Inverse temperature E_g/(k_B T)
    #[arg(long, value_name = "BETA")]
    pub beta_eg: Option<f64>,
    /// Temperature k_B T / E_g (reciprocal of --beta-eg)
    #[arg(long, value_name = "T")]
    pub temperature: Option<f64>,
}

impl TempArgs {
    pub fn beta(&self) -> Result<f64, CliError> {
        let beta = match (self.beta_eg, self.temperature) {
            (Some(b), None) => b,
            (None, Some(t)) => 1.0 / t,
            _ => unreachable!("clap enforces exactly one target"),
        };
        if !(beta.is_finite() && beta > 0.0) {
            return Err(CliError::Domain(format!(
                "target inverse temperature must be finite and positive, got {beta}"
            )));
        }
        Ok(beta)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TuneMode {
    /// Closed forms; requires the target to lie exactly on the set
    SdsExact,
    /// Continuous envelope curves through the set (no duration)
    Envelope,
    /// Damped Newton iteration seeded from set approximations
    Newton,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Comma-separated trajectory or table rows
    Csv,
    /// Machine-readable run record (JSON)
    Record,
}

#[derive(Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub target: TempArgs,
    /// Tuning strategy
    #[arg(long, value_enum, default_value_t = TuneMode::SdsExact)]
    pub mode: TuneMode,
    /// Relative tolerance for suggestion/seed searches
    #[arg(long, default_value_t = 0.012)]
    pub rel_tol: f64,
    /// Emit a run record instead of text
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub target: TempArgs,
    /// Relative temperature tolerance of the search
    #[arg(long, default_value_t = 0.012)]
    pub rel_tol: f64,
    /// Keep only protocols no longer than this (units of 2 pi / omega)
    #[arg(long, value_name = "TAU")]
    pub tau_max: Option<f64>,
    /// Output as CSV rows or a run record instead of a table
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("stage").required(true).args(["index", "params"])))]
pub struct EvolveArgs {
    /// Set index l,n (closed-form stage parameters)
    #[arg(long, value_parser = parse_index, value_name = "L,N")]
    pub index: Option<(u32, u32)>,
    /// Explicit stage parameters omega',k,tau
    #[arg(long, value_parser = parse_params, value_name = "W,K,TAU")]
    pub params: Option<(f64, f64, f64)>,
    /// Sample points per stage
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Free-evolution tail after the stage, in natural periods
    #[arg(long, default_value_t = 0.0)]
    pub tail: f64,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<std::path::PathBuf>,
    /// csv (default): trajectory to stdout or --out; record: run record
    /// to stdout, trajectory only to --out
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args)]
pub struct SequenceArgs {
    /// Initial temperature index l,n
    #[arg(value_parser = parse_index, value_name = "L,N")]
    pub initial: (u32, u32),
    /// Final temperature index l,n
    #[arg(value_parser = parse_index, value_name = "L,N")]
    pub target: (u32, u32),
    /// Sample points per stage
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Free-evolution tail after the last stage, in natural periods
    #[arg(long, default_value_t = 0.0)]
    pub tail: f64,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<std::path::PathBuf>,
    /// csv (default): trajectory to stdout or --out; record: run record
    /// to stdout, trajectory only to --out
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyScope {
    All,
    State,
    Dynamics,
    Sds,
    Solver,
    Protocol,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Which invariant suite to run
    #[arg(value_enum, default_value_t = VerifyScope::All)]
    pub scope: VerifyScope,
    /// Emit a run record instead of text
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Failures ranked by exit code: usage 2, domain 3, everything that
/// means "the computation ran and did not meet its target" 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) | CliError::Failure(m) => m,
        }
    }
}

impl From<qtherm_core::Error> for CliError {
    fn from(e: qtherm_core::Error) -> Self {
        use qtherm_core::Error::*;
        match e {
            Domain(_) | InvalidState(_) | UnstableMode { .. } | NotThermal { .. } => {
                CliError::Domain(e.to_string())
            }
            SingularJacobian { .. } | StepOutOfDomain { .. } => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("i/o error: {e}"))
    }
}

fn parse_index(s: &str) -> Result<(u32, u32), String> {
    let (l, n) = s
        .split_once(',')
        .ok_or_else(|| format!("expected L,N (two whole numbers), got {s:?}"))?;
    let l = l.trim().parse().map_err(|e| format!("bad l in {s:?}: {e}"))?;
    let n = n.trim().parse().map_err(|e| format!("bad n in {s:?}: {e}"))?;
    Ok((l, n))
}

fn parse_params(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected W,K,TAU (three reals), got {s:?}"));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("bad number {part:?}: {e}"))?;
    }
    Ok((v[0], v[1], v[2]))
}

/// Thermality tolerance for this invocation: QT_DEFAULT_TOL when set,
/// the built-in 1e-8 otherwise.
fn thermality_tol() -> Result<f64, CliError> {
    match std::env::var("QT_DEFAULT_TOL") {
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_THERMALITY_TOL),
        Err(e) => Err(CliError::Usage(format!("QT_DEFAULT_TOL: {e}"))),
        Ok(raw) => match raw.trim().parse::<f64>() {
            Ok(tol) if tol.is_finite() && tol > 0.0 => Ok(tol),
            _ => Err(CliError::Usage(format!(
                "QT_DEFAULT_TOL must be a positive real, got {raw:?}"
            ))),
        },
    }
}

/// Parses arguments from the process environment, runs the command,
/// and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = thermality_tol().and_then(|tol| match cli.command {
        Command::Tune(args) => commands::tune::run(&args),
        Command::Approx(args) => commands::approx::run(&args),
        Command::Evolve(args) => commands::evolve::run(&args, tol),
        Command::Sequence(args) => commands::sequence::run(&args, tol),
        Command::Verify(args) => commands::verify::run(&args),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
