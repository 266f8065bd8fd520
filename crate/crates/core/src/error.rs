use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid experiment parameters: {0}")]
    InvalidParams(String),

    #[error(
        "covariance matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})"
    )]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("moment expansion supports {limit}, got {got}")]
    DegreeTooHigh { limit: &'static str, got: usize },

    #[error("invalid polynomial `{text}`: {reason}")]
    InvalidPolynomial { text: String, reason: String },

    #[error("histogram geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error(
        "conditioning too weak to normalize: |sum of weights| = {weight_sum:e} <= {threshold:e}"
    )]
    WeakConditioning { weight_sum: f64, threshold: f64 },

    #[error("tomography input rejected: {0}")]
    InvalidMarginals(String),

    #[error("herald outcome k={k} is impossible (probability {probability:e})")]
    HeraldImpossible { k: u32, probability: f64 },

    #[error("squeezing pair V_s={v_s}, V_a={v_a} cannot be produced by a lossy squeezer")]
    UnsolvableSqueezing { v_s: f64, v_a: f64 },

    #[error("{path}: byte offset {offset}: {reason}")]
    Format {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    #[error("config{}: {reason}", if *line > 0 { format!(" line {line}") } else { String::new() })]
    Config { line: usize, reason: String },

    #[error("stage `{stage}`{}: {source}", angle.map(|a| format!(" (angle {a:.6} rad)")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        angle: Option<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the pipeline stage (and optionally the angle) it came from.
    pub fn in_stage(self, stage: &'static str, angle: Option<f64>) -> Self {
        Error::Stage {
            stage,
            angle,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
