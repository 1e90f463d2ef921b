//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verified mechanism is not private, 2 parse or
//! validation failure, 3 size cap exceeded, 4 internal failure.

mod commands;
pub mod input;
pub mod report;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use input::{InputKind, MechanismFile, PriorSpec, ProblemSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_PRIVATE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dpdesign", version, about = "Design and compare private count-publication mechanisms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal mechanism.
    Solve(SolveArgs),
    /// Check a mechanism table for ε-differential privacy.
    Verify(VerifyArgs),
    /// Tabulate values of mechanisms under a problem.
    Compare(CompareArgs),
    /// Dump the vertices of the private-posterior polytope.
    Vertices(VerticesArgs),
    /// Compare the projected database polytope with the count polytope.
    Project(ProjectArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Override the spec's privacy budget.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Tolerance for binding and membership tests.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Largest number of respondents to enumerate.
    #[arg(long = "max-n")]
    pub max_n: Option<usize>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print a CSV table instead of JSON.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Add UPRR and supermodular-order verdicts of the geometric mechanism
    /// against the optimum.
    #[arg(long)]
    pub dominance: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub mechanism: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, required = true)]
    pub mechanism: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerticesArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

/// Failure carrying an exit code and, for file errors, a location.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub origin: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl CliError {
    pub fn at(origin: &str, line: usize, message: String) -> Self {
        Self { code: EXIT_INVALID, origin: Some(origin.into()), line: Some(line), message }
    }

    pub fn json(origin: &str, e: &serde_json::Error) -> Self {
        let message = e.to_string();
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        Self::at(origin, e.line().max(1), message)
    }

    pub fn usage(message: String) -> Self {
        Self { code: EXIT_INVALID, origin: None, line: None, message }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CapExceeded { .. } => EXIT_CAP,
            Error::Lp(_) | Error::Internal(_) => EXIT_INTERNAL,
            _ => EXIT_INVALID,
        };
        Self { code, origin: None, line: None, message: e.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.origin, self.line) {
            (Some(o), Some(l)) => write!(f, "{o}:{l}: {}", self.message),
            (Some(o), None) => write!(f, "{o}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::execute(&cli.command) {
        Ok(output) => {
            if let Err(e) = out.write_all(output.stdout.as_bytes()) {
                let _ = writeln!(err, "error: {e}");
                return EXIT_INTERNAL;
            }
            output.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code
        }
    }
}
