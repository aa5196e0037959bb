use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability: {name} = {value} is outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("numerical domain violation: {value} lies outside [0, 1] by more than {tolerance}")]
    NumericalDomain { value: f64, tolerance: f64 },

    #[error("degenerate weights: {0}")]
    DegenerateWeights(&'static str),

    #[error("non-convergent: |alpha| = {alpha} >= 1 with gap {gap} >= epsilon")]
    NonConvergent { alpha: f64, gap: f64 },

    #[error("round {round} out of range: transcript covers rounds 0..={max_round}")]
    RoundOutOfRange { round: usize, max_round: usize },

    #[error("curve too short: {len} points, need at least {min}")]
    CurveTooShort { len: usize, min: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("parse error in {path} (line {line}): {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("validation failed:\n  {}", violations.join("\n  "))]
    Validation { violations: Vec<String> },

    #[error("missing record: question {question}, sample {sample}, round {round}")]
    Gap {
        question: String,
        sample: usize,
        round: usize,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
