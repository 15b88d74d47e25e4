//! # qfccert
//!
//! Certification of a heralded qubit channel (a quantum frequency converter)
//! from Bell-test event data, assuming only that each party's no-click
//! probability does not depend on its measurement setting.
//!
//! The crate is organised along the data flow:
//!
//! - [`model`]: rounds, counts and coincidence histograms.
//! - [`quantum`]: exact small-dimension quantum objects (states, POVMs,
//!   Kraus channels), Uhlmann and Choi fidelity, the CHSH functional, the
//!   Schmidt-based injection filter and the certified fidelity bound `f(S)`.
//! - [`stats`]: the regularized incomplete beta function and its inverse,
//!   the non-IID lower confidence bounds on the CHSH score and the success
//!   probability, the fair-sampling diagnostic and the [`stats::certify`]
//!   pipeline.
//! - [`sim`]: a seeded Monte Carlo model of the ion–photon–converter
//!   experiment that produces event logs with known ground truth.
//! - [`windows`]: post-selection time windows and the window scan.
//! - [`io`]: the event-log text format and the report document.

#![forbid(unsafe_code)]

pub mod io;
pub mod linalg;
pub mod model;
pub mod quantum;
pub mod sim;
pub mod stats;
pub mod windows;

pub use model::{CountTable, Entry, EventLog, NoClickRun, Outcome, Round, Setting};
pub use stats::{certify, CertificationReport, ConfidenceLevel};

use thiserror::Error;

/// Hermiticity tolerance for states, POVM elements and channel checks.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Trace-one tolerance for density matrices; also used for `Σ M = 1` and `Σ K†K ≼ 1`.
pub const TRACE_TOLERANCE: f64 = 1e-12;
/// Smallest eigenvalue accepted (and clamped to zero) for PSD operators.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("operator is not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("malformed round {round_id}: {reason}")]
    MalformedRound { round_id: u64, reason: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
