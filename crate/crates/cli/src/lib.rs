//! Command-line front end: single-configuration analysis, parameter sweeps,
//! simulation runs, fail-safe scans and a self-validation suite.
//!
//! Exit codes: 0 success, 1 validation failure, 2 invalid configuration or
//! sweep definition, 3 numerical or internal failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod sweep;
pub mod validate;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sustain5g_core::model::{Criterion, OverheadForm};

pub use error::{CliError, Result};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "SUSTAIN5G_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sustain5g", version, about = "Sustainability model for key-update scheduling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for output files and their manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Interpretation {
    Integral,
    Printed,
}

impl From<Interpretation> for OverheadForm {
    fn from(i: Interpretation) -> Self {
        match i {
            Interpretation::Integral => OverheadForm::Integral,
            Interpretation::Printed => OverheadForm::Printed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Sustainability,
    Overhead,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Sustainability => Criterion::SustainabilityRate,
            CriterionArg::Overhead => Criterion::MessageOverhead,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Suite {
    Ei,
    Quadrature,
    ClosedForm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sustainability, overheads and feasibility of one configuration.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        interpretation: Option<Interpretation>,
    },
    /// Evaluate every (β, Q, E) combination of a sweep, as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        interpretation: Option<Interpretation>,
    },
    /// Event-driven simulation compared against the model.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// RNG and key-tree seed; overrides `sim.seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fail-safe point of the configured window.
    Failsafe {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "sustainability")]
        criterion: CriterionArg,
        #[arg(long, value_enum)]
        interpretation: Option<Interpretation>,
    },
    /// Run the built-in oracle checks.
    Validate {
        /// Restrict to the given suites (repeatable).
        #[arg(long, value_enum)]
        only: Vec<Suite>,
        /// Relative tolerance of the exponential-integral checks.
        #[arg(long, default_value_t = validate::DEFAULT_EI_TOLERANCE)]
        ei_tol: f64,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

/// Sizes the global thread pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}={value:?} is not a positive integer")))?;
    // A pool built earlier in the same process is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Analyze { common, interpretation } => commands::analyze(&common, interpretation, out),
        Command::Sweep { common, interpretation } => commands::sweep(&common, interpretation, out),
        Command::Simulate { common, seed } => commands::simulate(&common, seed, out),
        Command::Failsafe {
            common,
            criterion,
            interpretation,
        } => commands::failsafe(&common, criterion, interpretation, out),
        Command::Validate { only, ei_tol, format } => validate::run(&only, ei_tol, format, out),
    }
}
