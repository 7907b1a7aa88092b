use thiserror::Error;

use crate::levy::Side;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("model does not support the {0:?} exponent")]
    UnsupportedSidedness(Side),

    #[error("no root: exponent stays below {target}")]
    NoRoot { target: f64 },

    #[error("root finder did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("derivative of the exponent vanishes at the root ({value:e})")]
    DegenerateDerivative { value: f64 },

    #[error("invalid rate {0}")]
    InvalidRate(f64),

    #[error("invalid horizon {0}")]
    InvalidHorizon(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid probability {0}")]
    InvalidProbability(f64),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("second coordinate must be nonnegative (got {value} at position {index})")]
    NegativeSecondCoordinate { index: usize, value: f64 },

    #[error("negative input {value} at position {index}")]
    NegativeInput { index: usize, value: f64 },

    #[error("pmf has infinite (or non-finite) mean")]
    InfiniteMean,

    #[error("singular denominator in transform at alpha={alpha}, rate={rate}")]
    SingularDenominator { alpha: f64, rate: f64 },

    #[error("second moment is not finite")]
    InfiniteSecondMoment,

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("empty sample")]
    EmptySample,

    #[error("fewer than two cells remain after merging ({0})")]
    DegenerateCells(usize),

    #[error("cascade truncation too coarse: last term mean is {ratio:e} of the total")]
    TruncationTooCoarse { ratio: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
