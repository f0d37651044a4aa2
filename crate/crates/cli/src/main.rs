//! `pohozaev`: solve, classify, sweep and certify from the command line.
//!
//! Exit codes: 0 success, 1 usage or regime error, 2 diagnosed numerical or
//! mathematical failure.

mod commands;
mod config;
mod json;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pohozaev::{Branch, Error, ProblemParams};

#[derive(Debug, Parser)]
#[command(name = "pohozaev", version, about = "Normalized radial solutions of the constrained p-Laplacian equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a plus, minus or degenerate solution.
    Solve(SolveArgs),
    /// Classify the fibering map of a profile read from CSV.
    Classify(ClassifyArgs),
    /// Run a parameter sweep described by a key = value file.
    Sweep(SweepArgs),
    /// Search for a strict mountain-pass energy certificate (q2 = p*).
    Certify(CertifyArgs),
}

#[derive(Debug, Args, Clone)]
pub struct ParamArgs {
    #[arg(long = "N")]
    pub dim: usize,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q1: f64,
    #[arg(long)]
    pub q2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
}

#[derive(Debug, Args, Clone)]
pub struct GridArgs {
    #[arg(long = "grid-n", default_value_t = 4000)]
    pub grid_n: usize,
    /// Truncation radius; adaptive when omitted.
    #[arg(long = "grid-R")]
    pub grid_r: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub mu: f64,
    #[arg(long, default_value = "plus")]
    pub branch: Branch,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Also compute the radial Morse index (p >= 2).
    #[arg(long)]
    pub morse: bool,
    /// Also export the MFG fields for this Hamiltonian constant C_H.
    #[arg(long)]
    pub mfg: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub mu: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; the POHOZAEV_JOBS environment variable overrides it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Skip points whose manifest is already finished for the same inputs.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, conflicts_with = "mu_frac", required_unless_present = "mu_frac")]
    pub mu: Option<f64>,
    /// Coupling as a fraction of the first extremal value.
    #[arg(long = "mu-frac")]
    pub mu_frac: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Two masses for the extremal scaling-law check, e.g. `1,2`.
    #[arg(long, value_delimiter = ',', num_args = 1..=2)]
    pub masses: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A command failure, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::InvalidRegime(_) | Error::Unsupported(_) | Error::Parse(_) | Error::Io(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl ParamArgs {
    pub fn with_mu(&self, mu: f64) -> Result<ProblemParams, Failure> {
        Ok(ProblemParams::new(self.dim, self.p, self.q1, self.q2, self.a, mu)?)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let out = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Classify(a) => commands::classify(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Certify(a) => commands::certify(&a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Numeric(m) => eprintln!("failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
