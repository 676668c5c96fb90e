use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("channel length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("frequency {freq} Hz out of range (0, {nyquist}) Hz")]
    FrequencyOutOfRange { freq: f64, nyquist: f64 },

    #[error("signal of {len} samples is shorter than one frame of {frame} samples")]
    SignalTooShort { len: usize, frame: usize },

    #[error("bursts overlap: burst at {first}s runs into burst at {second}s")]
    OverlappingBursts { first: f64, second: f64 },

    #[error("simulation fault at t={time}s: non-finite state")]
    SimulationFault { time: f64 },

    #[error(
        "target rebound interval {target:.4}s is unachievable; achievable range is [{min:.4}, {max:.4}]s"
    )]
    UnachievableTarget { target: f64, min: f64, max: f64 },

    #[error("infeasible stroke plan: required interval {required:.4}s, shortest achievable {achievable:.4}s")]
    InfeasiblePlan { required: f64, achievable: f64 },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty corpus: {0}")]
    EmptyCorpus(PathBuf),

    #[error("unknown behavior `{name}`; valid options: {valid}")]
    UnknownBehavior { name: String, valid: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 1 for bad input or configuration, 2 for failures
    /// while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::SimulationFault { .. }
            | Error::UnachievableTarget { .. }
            | Error::InfeasiblePlan { .. }
            | Error::Io(_) => 2,
            _ => 1,
        }
    }
}
