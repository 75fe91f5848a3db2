//! Command-line front-end: problem files in, deterministic reports out.
//!
//! [`run`] is the whole program minus process plumbing, so tests can drive it
//! without spawning a binary.

pub mod commands;
pub mod problem;
pub mod report;
pub mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use ebmod_core::{ProbeKind, SamplingConfig, Tolerances};

pub use problem::ProblemFile;
pub use report::Report;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] ebmod_core::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0} fixture check(s) failed")]
    Mismatch(usize),
}

impl CliError {
    /// 1 input, 2 numerical failure, 3 fixture mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 1,
            CliError::Core(ebmod_core::Error::Input(_) | ebmod_core::Error::Capacity { .. }) => 1,
            CliError::Core(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ebmod",
    version,
    about = "Error bound moduli of max-functions and linear systems"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Emit the machine-readable JSON report.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, value_name = "TOL")]
    pub tol_eq: Option<f64>,
    #[arg(long, global = true, value_name = "TOL")]
    pub tol_active: Option<f64>,
    #[arg(long, global = true, value_name = "TOL")]
    pub tol_lp_margin: Option<f64>,
    #[arg(long, global = true, value_name = "TOL")]
    pub tol_dist: Option<f64>,
    /// Seed for every sampled quantity.
    #[arg(long, global = true, env = "EBMOD_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exposed faces and end-set distance of a point set.
    Endset(EndsetArgs),
    /// Lower, empirical and upper estimates of the modulus.
    Analyze(AnalyzeArgs),
    /// Active indices, modulus formula and a regularity probe for a linear system.
    Linsys(LinsysArgs),
    /// Nearest point of a convex hull to the origin.
    Minnorm(MinnormArgs),
    /// Checks every reference example against its published values.
    VerifyPaper(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Enumerate,
    Sample,
}

#[derive(Debug, Args)]
pub struct EndsetArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Enumerate)]
    pub mode: ModeArg,
    /// Directions used by the sample mode.
    #[arg(long, default_value_t = 4096)]
    pub directions: usize,
    /// End-set membership query (comma-separated coordinates); repeatable.
    #[arg(long, value_name = "X", allow_hyphen_values = true)]
    pub point: Vec<Point>,
    /// Gauge query; repeatable.
    #[arg(long, value_name = "X", allow_hyphen_values = true)]
    pub gauge: Vec<Point>,
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Problem file (JSON).
    #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
    pub file: Option<PathBuf>,
    #[arg(long)]
    pub builtin: Option<String>,
    /// Base point, overriding the file's.
    #[arg(long, value_name = "X", allow_hyphen_values = true)]
    pub point: Option<Point>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: Source,
    /// Shell schedule `r0,beta,m`.
    #[arg(long, value_name = "R0,BETA,M", value_parser = parse_shells)]
    pub shells: Option<(f64, f64, usize)>,
    /// Deterministic directions per shell.
    #[arg(long)]
    pub dirs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeArg {
    Lp,
    Acq,
    Eta,
}

impl From<ProbeArg> for ProbeKind {
    fn from(p: ProbeArg) -> Self {
        match p {
            ProbeArg::Lp => ProbeKind::LocallyPolyhedral,
            ProbeArg::Acq => ProbeKind::Acq,
            ProbeArg::Eta => ProbeKind::Eta,
        }
    }
}

#[derive(Debug, Args)]
pub struct LinsysArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value_t = ProbeArg::Lp)]
    pub probe: ProbeArg,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct MinnormArgs {
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Test hook: shifts every computed value so the checks fail.
    #[arg(long, hide = true)]
    pub perturb: bool,
}

/// Comma-separated coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<f64>);

impl std::str::FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_point(s).map(Point)
    }
}

fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    let v = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("'{c}': {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.iter().any(|c| !c.is_finite()) {
        return Err("coordinates must be finite".into());
    }
    Ok(v)
}

fn parse_shells(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [r0, beta, m] = parts.as_slice() else {
        return Err("expected r0,beta,m".into());
    };
    Ok((
        r0.parse().map_err(|e| format!("r0: {e}"))?,
        beta.parse().map_err(|e| format!("beta: {e}"))?,
        m.parse().map_err(|e| format!("m: {e}"))?,
    ))
}

impl GlobalOpts {
    /// Defaults, then file overrides, then flags.
    pub fn tolerances(&self, file: Option<&ProblemFile>) -> Result<Tolerances, CliError> {
        let mut tol = Tolerances::default();
        if let Some(o) = file.and_then(|f| f.tolerances.as_ref()) {
            o.apply(&mut tol);
        }
        let flags = problem::ToleranceOverrides {
            eq_tol: self.tol_eq,
            active_tol: self.tol_active,
            lp_margin: self.tol_lp_margin,
            dist_tol: self.tol_dist,
        };
        flags.apply(&mut tol);
        tol.validate()?;
        Ok(tol)
    }

    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            seed: self.seed,
            ..SamplingConfig::default()
        }
    }
}

/// What the process should print and return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let echo: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let json = cli.global.json;
    let (report, result) = match commands::dispatch(&cli, echo) {
        Ok(report) => {
            let failed = report.failed_checks();
            let result = if failed > 0 {
                Err(CliError::Mismatch(failed))
            } else {
                Ok(())
            };
            (Some(report), result)
        }
        Err(e) => (None, Err(e)),
    };
    let stdout = report
        .map(|r| if json { r.to_json() } else { r.to_text() })
        .unwrap_or_default();
    match result {
        Ok(()) => Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout,
            stderr: format!("error: {e}\n"),
        },
    }
}
