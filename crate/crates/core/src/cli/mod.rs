//! Command-line front end: `bounds`, `orlicz`, `sample`, `verify`, `covapp`.
//!
//! Every command reads optional settings from `--config <file.toml>`, lets
//! flags override them, writes its data files (to `--out <dir>` or stdout) and
//! a run manifest. Exit codes: 0 ok, 1 configuration or input error, 2 domain
//! error, 3 numerical failure.

mod commands;
pub mod config;
pub mod output;
pub mod suites;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use config::{BoundsArgs, CovappArgs, FileConfig, OrliczArgs, ProblemArgs, SampleArgs, SumArgs, VerifyArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Lib(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Json(_) => 1,
            CliError::Lib(Error::InvalidInput(_)) => 1,
            CliError::Lib(Error::Domain(_) | Error::UnsupportedRegime(_)) => 2,
            CliError::Lib(Error::Numerical(_)) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "subweibull", version, about = "Moment and tail bounds for weighted sums of sub-Weibull variables")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML file with any of the sections [problem], [bounds], [orlicz], [sample], [verify], [covapp].
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; required by sample, verify and covapp.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory. Without it data goes to stdout and the manifest to stderr.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit only this artifact kind.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a moment, GBO-norm or tail rate.
    Bounds {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        args: BoundsArgs,
    },
    /// Orlicz norms and ϕ_p functionals of the extremal variable Z.
    Orlicz {
        #[command(flatten)]
        args: OrliczArgs,
        #[command(flatten)]
        sum: SumArgs,
    },
    /// Draw from Y, Z or the weighted sum Z*.
    Sample {
        #[command(flatten)]
        args: SampleArgs,
        #[command(flatten)]
        sum: SumArgs,
    },
    /// Run a verification suite.
    Verify {
        #[command(flatten)]
        args: VerifyArgs,
    },
    /// Covariance-estimation experiment.
    Covapp {
        #[command(flatten)]
        args: CovappArgs,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bounds { .. } => "bounds",
            Command::Orlicz { .. } => "orlicz",
            Command::Sample { .. } => "sample",
            Command::Verify { .. } => "verify",
            Command::Covapp { .. } => "covapp",
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| commands::dispatch(&cli, file))
}
