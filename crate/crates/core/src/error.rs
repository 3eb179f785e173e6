//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by the zero polynomial")]
    DivisionByZero,

    #[error("gcd of two zero polynomials is undefined")]
    GcdOfZero,

    #[error("reverse width {width} is smaller than {required} (degree + 1)")]
    ReverseWidth { width: usize, required: usize },

    #[error("invalid convolutional generator set: {0}")]
    InvalidGenerator(String),

    #[error("invalid CRC generator: {0}")]
    InvalidCrc(String),

    #[error("invalid SNR: {0}")]
    InvalidSnr(String),

    #[error("cannot parse polynomial from {input:?}: {reason}")]
    PolyParse { input: String, reason: String },

    #[error("equivalent-encoder state space needs {bits} bits, limit is {limit}; use the exclusion method for this CRC degree")]
    StateSpaceLimit { bits: usize, limit: usize },

    #[error("search budget exceeded: {0}; reduce depth or disable pattern recording")]
    SearchBudget(String),

    #[error("transfer-function series diverges at this SNR; tail bound unavailable")]
    TailUnavailable,
}
