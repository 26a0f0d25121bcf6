use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Rejected discretization or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A parameter outside its admissible range.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A checked invariant failed. `invariant` is a stable machine-readable
    /// code such as `lambda0_nonzero`.
    #[error("validation failed [{invariant}]: {detail}")]
    Validation {
        invariant: &'static str,
        detail: String,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// The function has zero L_q norm, so the quotient is undefined.
    #[error("the quotient is undefined for the zero function")]
    ZeroFunction,

    /// A pointwise power of the base function is singular on the grid.
    #[error("domain error: {0}")]
    Domain(String),

    /// ε_s(q) is infinite for q ≤ 2.
    #[error("no finite bifurcation threshold for q = {q} (requires q > 2)")]
    NoThreshold { q: f64 },

    /// The grid cannot resolve the requested bubble width.
    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON document: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Validation {
            invariant,
            detail: detail.into(),
        }
    }

    /// Stable invariant code for validation failures.
    pub fn invariant(&self) -> Option<&'static str> {
        match self {
            Error::Validation { invariant, .. } => Some(invariant),
            _ => None,
        }
    }
}
