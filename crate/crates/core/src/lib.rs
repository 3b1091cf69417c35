//! Blind modulation-level classification of M-QAM / M-PSK signals received
//! over unknown frequency-selective channels.
//!
//! The receiver chain is a block-processing constant modulus equalizer
//! followed by a reduced-complexity Kuiper (rcK) goodness-of-fit classifier
//! that compares the empirical distribution of a signal feature against
//! tabulated theoretical feature CDFs at a handful of precomputed testpoints.
//! Alongside the chain the crate provides an analytical model of the
//! equalizer output error, two baselines (a genie zero-forcing equalizer and
//! the sixth-order cumulant `C63`) and a Monte Carlo experiment harness.
//!
//! Modules, bottom-up:
//!
//! * [`signals`]: constellations, exact moments, symbol draws.
//! * [`channel`]: channel models, transmission, Toeplitz channel matrices.
//! * [`equalizer`]: CMA and zero-forcing equalizers.
//! * [`distributions`]: features, theoretical CDF tables, ECDFs, testpoints.
//! * [`classifier`]: rcK decision rule and the baselines.
//! * [`analysis`]: error-variance decomposition and semi-analytic accuracy.
//! * [`harness`]: experiment sweeps, CSV output and the CLI.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod classifier;
pub mod distributions;
pub mod equalizer;
pub mod error;
pub mod harness;
pub mod signals;
pub mod special;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;
