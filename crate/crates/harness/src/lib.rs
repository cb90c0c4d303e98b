//! Experiment harness: configuration ingestion, run orchestration, file
//! persistence, sweeps, and report generation for the half-line outflow
//! laboratory.
//!
//! Every run lives in its own directory `runs/<id>/` with flat,
//! diff-friendly artifacts (`manifest.json`, `equilibrium.json`,
//! `profile.csv`, `series.csv`, `rates.json`, optional `snapshots/`). Run
//! ids are derived from the canonical configuration hash, so identical
//! configurations land in identical places with bit-identical contents.

pub mod artifacts;
pub mod config;
pub mod report;
pub mod runner;
pub mod sweep;

use thiserror::Error;

/// Failure modes with their process exit codes: 2 config, 3 nonexistence,
/// 4 numerical, 5 inconclusive fit.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("no stationary solution: {0}")]
    NoStationary(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("inconclusive fit: {0}")]
    Inconclusive(String),
    #[error("io error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::NoStationary(_) => 3,
            HarnessError::Numerical(_) => 4,
            HarnessError::Inconclusive(_) => 5,
            HarnessError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

/// Map a core error arising while a run executes (after configuration has
/// been validated).
pub fn runtime_error(e: halfspace_ns_core::Error) -> HarnessError {
    use halfspace_ns_core::Error as E;
    match e {
        E::NoStationarySolution(m) => HarnessError::NoStationary(m),
        E::InsufficientData(m) => HarnessError::Inconclusive(m),
        E::Domain(m) | E::Regime(m) => HarnessError::Config(m),
        E::Singularity(g) => HarnessError::Numerical(format!(
            "singular stationary right side (|ubar - 1| = {g:.3e})"
        )),
        E::NonConvergence(m) | E::Numerical(m) => HarnessError::Numerical(m),
        E::GridMismatch(m) => HarnessError::Config(m),
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
