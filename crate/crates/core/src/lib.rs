//! Simulation and security analysis of a phase-encoded quantum digital
//! signature scheme with unambiguous state elimination at the receivers.
//!
//! - [`optics`]: coherent-state amplitudes, beam splitters, the symmetrizing
//!   multiport and the elimination interferometer.
//! - [`detection`]: threshold detectors with efficiency, dark counts and
//!   visibility; elimination and discrimination rates.
//! - [`discrimination`]: Gram matrix, square-root measurement and minimum
//!   error probability of the four signature states.
//! - [`protocol`]: distribution, record keeping and the accept/reject checks.
//! - [`adversary`]: repudiation and forging strategies.
//! - [`security`]: cost matrices, bounds and required signature length.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod detection;
pub mod discrimination;
pub mod error;
pub mod optics;
pub mod protocol;
pub mod sampling;
pub mod security;

pub use error::{Error, Result};
pub use optics::{ComplexAmplitude, PhaseSymbol};
