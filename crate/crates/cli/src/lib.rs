//! Batch driver for the talenti toolkit: scenario configuration, a domain
//! catalog normalized to measure `pi`, the solve/symmetrize/compare pipeline,
//! rigidity sweeps and the acceptance matrix.

pub mod datum;
pub mod domains;
pub mod runner;
pub mod scenario;
pub mod sweep;
pub mod verify;

use std::sync::atomic::{AtomicBool, Ordering};

use thiserror::Error;

pub use runner::{run_scenario, RunOutcome};
pub use scenario::{Check, Datum, Domain, Scenario};
pub use sweep::{run_sweep, Family, SweepReport};
pub use verify::{verify_all, CriterionResult, VerifyOptions};

/// Exit statuses of the command line.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const CRITERION_FAILED: u8 = 1;
    pub const SOLVER_FAILED: u8 = 2;
    pub const USAGE: u8 = 64;
    pub const INTERRUPTED: u8 = 130;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid flags or configuration.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] talenti_core::Error),
    #[error("interrupted")]
    Interrupted,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use talenti_core::Error as E;
        match self {
            CliError::Config(_) => exit::USAGE,
            CliError::Interrupted => exit::INTERRUPTED,
            CliError::Core(E::Domain(_) | E::Geometry(_) | E::Usage(_) | E::Parse { .. }) => exit::USAGE,
            CliError::Core(_) => exit::SOLVER_FAILED,
        }
    }

    /// The error as a toolkit error, for callbacks that return one.
    pub fn into_core(self) -> talenti_core::Error {
        match self {
            CliError::Core(e) => e,
            other => talenti_core::Error::Usage(other.to_string()),
        }
    }
}

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

/// Marks the process as interrupted; long runs stop at their next checkpoint.
pub fn request_interrupt() {
    INTERRUPTED.store(true, Ordering::SeqCst);
}

pub fn interrupted() -> bool {
    INTERRUPTED.load(Ordering::SeqCst)
}

pub(crate) fn check_interrupt() -> Result<(), CliError> {
    if interrupted() {
        Err(CliError::Interrupted)
    } else {
        Ok(())
    }
}
