//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument to an operation (dimension mismatch, out-of-range
    /// time, series too short, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Configuration failed validation; each entry names the offending
    /// key path and the violated constraint.
    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    /// The integrator produced a non-finite state.
    #[error("numerical blowup in {context} at t = {time}")]
    Blowup { context: String, time: f64 },

    /// Degenerate input data (zero variance target, constant series, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Readout training failed at every ridge grid point.
    #[error("training failed: {0}")]
    Training(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },
}

impl Error {
    /// Stable process exit code for scripting: 2 config, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Config(_) => 2,
            Error::Blowup { .. } | Error::Degenerate(_) | Error::Training(_) => 3,
            Error::Io(_) | Error::Format { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
