//! Waveform design for communication-assisted sensing (CAS).
//!
//! A base station estimates a target response matrix from echoes (sensing)
//! and forwards the estimate to an end user over a noisy downlink
//! (communication). The end-to-end reconstruction error then splits into a
//! sensing part and a coding part,
//!
//! ```text
//! D = D_s + D_c,
//! ```
//!
//! where `D_s` is the MMSE of the estimate at the base station and `D_c` is
//! the rate-distortion cost of squeezing that estimate through the downlink
//! at the achievable mutual information. This crate provides the numerical
//! machinery to minimize `D` over the transmit waveform:
//!
//! - [`numerics`] — water-filling, reverse water-filling, simplex/PSD
//!   projections, and a Hermitian eigendecomposition facade.
//! - [`channels`] — deterministic synthesis of sensing covariances and
//!   Rayleigh communication channels from a seeded generator.
//! - [`metrics`] — closed-form sensing/communication metrics: mutual
//!   informations, MMSE matrices, coding distortion, plus a Monte-Carlo
//!   estimator used to validate the closed forms.
//! - [`sw_design`] — separated waveforms: a scalar power split between a
//!   sensing beam and a communication beam, optimized by 1-D search.
//! - [`dw_design`] — one dual-functional waveform covariance, optimized by
//!   weighted-MI maximization or modified gradient projection.
//!
//! All rates and mutual informations are in nats (natural logarithms); all
//! matrix work is `f64`/`Complex64`.

pub mod channels;
pub mod dw_design;
pub mod metrics;
pub mod numerics;
pub mod sw_design;

pub use channels::{CommModel, SensingModel, SystemConfig};
pub use metrics::CasResult;

/// Errors reported by the numerical routines.
///
/// Inputs that violate a documented precondition (negative powers, empty
/// spectra, dimension mismatches) are rejected with `InvalidInput`;
/// iterative solvers that exhaust their iteration budget without meeting
/// their tolerance report `NoConvergence`.
#[derive(Debug, thiserror::Error)]
pub enum CasError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, CasError>;
