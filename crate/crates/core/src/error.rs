use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("chi-square test needs at least 3 usable bins, got {0}")]
    InsufficientBins(usize),

    #[error("operation not supported for the {0} family")]
    UnsupportedFamily(&'static str),

    #[error("degenerate sample: {0}")]
    DegenerateFit(String),

    #[error("fit did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("MPC {id} at {delay_ns:.3} ns lies outside the delay grid [{lo:.3}, {hi:.3}) ns")]
    GridOverflow { id: u64, delay_ns: f64, lo: f64, hi: f64 },

    #[error("LOS path could not be identified: {0}")]
    NoLos(String),

    #[error("power loss undefined: {0}")]
    UndefinedLoss(String),

    #[error("corrupt recording at byte offset {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), reason: reason.into() }
    }
}
