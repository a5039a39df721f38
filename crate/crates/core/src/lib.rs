//! Interleaved channel training for single-user massive MIMO downlink.
//!
//! Analytic training-length expressions, Monte Carlo simulation of the four
//! training schemes, a neural surrogate and sweep tooling.

pub mod analytic;
pub mod channel_models;
pub mod conditional;
pub mod config;
pub mod error;
pub mod quadrature;
pub mod simulator;
pub mod special;
pub mod spectra;
pub mod surrogate;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
