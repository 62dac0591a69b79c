//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,

    #[error("series has {got} samples, need at least {need}")]
    TooFewSamples { need: usize, got: usize },

    #[error("sequence lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("timestamps must be strictly increasing (violation at sample {index})")]
    NonIncreasingTimestamps { index: usize },

    #[error("non-finite component at sample {index}")]
    NonFiniteSample { index: usize },

    #[error("sample rate {rate} Hz inconsistent with timestamp spacing {spacing} s")]
    InconsistentRate { rate: f64, spacing: f64 },

    #[error("moving-average window of {window} samples exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },

    #[error("design matrix is rank-deficient (sigma_min/sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("fitted quadric is not an ellipsoid: {0}")]
    NotAnEllipsoid(String),

    #[error("degenerate ellipsoid: {0}")]
    DegenerateEllipsoid(String),

    #[error("matrix is singular (|det| = {det:.3e})")]
    SingularMatrix { det: f64 },

    #[error("zero-vector sample at index {index}: projection is not unique")]
    ZeroVectorSample { index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "training diverged at epoch {epoch}: loss {loss:.3e} exceeds 1e6 x initial {initial:.3e}"
    )]
    Divergence {
        epoch: usize,
        loss: f64,
        initial: f64,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit code class: 2 = argument/config, 3 = parse/I-O, 4 = numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 2,
            Error::Parse { .. } | Error::Io { .. } | Error::Json { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
