//! Command-line front end: scans, trajectory dumps, positivity reports,
//! witness construction and oracle comparisons, written as CSV, SVG and JSON.

use std::path::PathBuf;

pub mod commands;
pub mod compare;
pub mod config;
pub mod output;
pub mod sweeps;

pub use config::{Cli, Command, Format, Params, RunConfig};
pub use output::Artifacts;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] qbrown_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for rejected input, 3 for numerical or output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(e) if e.is_input_error() => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

/// Runs the command; artifacts are in memory, nothing is written.
pub fn execute(config: &RunConfig) -> Result<Artifacts, CliError> {
    use commands::*;
    match &config.params {
        Params::CriterionScan(p) => criterion_scan(p),
        Params::QbeSolve(p) => qbe_solve(p),
        Params::HrCoeffs(p) => hr_coeffs_cmd(p),
        Params::WnIntegrate(p) => wn_integrate(p),
        Params::PositivityReport(p) => positivity_report(p),
        Params::Witness(p) => witness(p),
        Params::OracleCompare(p) => compare::oracle_compare(p, config.seed),
        Params::IdentityCheck(p) => identity_check(p),
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub written: Vec<PathBuf>,
    pub log: Vec<String>,
}

/// Runs the command and writes its artifacts. A check that fails after
/// producing output still writes everything before reporting the failure.
pub fn run(config: &RunConfig) -> Result<RunOutcome, (CliError, Vec<PathBuf>)> {
    let artifacts = execute(config).map_err(|e| (e, vec![]))?;
    let written = output::write_all(&artifacts, config).map_err(|e| (e, vec![]))?;
    match artifacts.failure {
        Some(e) => Err((e.into(), written)),
        None => Ok(RunOutcome {
            written,
            log: artifacts.log,
        }),
    }
}

/// Sizes the global pool from `QBROWN_THREADS` when set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("QBROWN_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!("QBROWN_THREADS = {v:?} is not a positive integer"))
    })?;
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}
