//! Undetected-error probability analysis and CRC design for feedforward
//! convolutional codes.
//!
//! A CRC outer code concatenated with a terminated rate-1/N convolutional
//! inner code leaves a residual undetected-error probability: some decoder
//! error patterns are divisible by the CRC generator and pass the check.
//! This crate computes upper bounds on that probability by two routes
//! (filtering the inner code's error-event spectrum by divisibility, and
//! analyzing the catastrophic encoder obtained by multiplying the CRC
//! generator into the inner code), searches for the degree-m CRC generator
//! that minimizes dominant undetectable errors for a given inner code and
//! information length, and validates the bounds by Monte Carlo simulation
//! of the full QPSK/AWGN/Viterbi chain.

pub mod convcode;
pub mod construction;
pub mod crc;
pub mod crcsearch;
pub mod error;
pub mod eventsearch;
pub mod exclusion;
pub mod gf2poly;
pub mod mcsim;
pub mod probability;
pub mod report;

pub use convcode::{ConvCode, TrellisState};
pub use crc::CrcSpec;
pub use error::{Error, Result};
pub use gf2poly::Gf2Poly;
pub use probability::SnrPoint;
