// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised across the toolkit. Variant names double as the stable
/// error identifiers reported by the command-line front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    // trap physics
    #[error("non-confining polarity: q*U0 = {product:e} must be positive")]
    NonConfining { product: f64 },
    #[error("unstable trap: wc^2 = {wc2:e} <= 2 wz^2 = {two_wz2:e}")]
    Unstable { wc2: f64, two_wz2: f64 },

    // noise model
    #[error("negative frequency {omega}")]
    NegativeFrequency { omega: f64 },
    #[error("spectrum extends to {support:e} rad/s, above the Nyquist frequency {nyquist:e} rad/s")]
    NyquistViolation { support: f64, nyquist: f64 },
    #[error("segment length {segment} exceeds trace length {len}")]
    SegmentTooLong { segment: usize, len: usize },

    // pulse sequences
    #[error("pulse positions must be strictly increasing inside (0, 1): violation at index {index}")]
    OrderingViolation { index: usize },
    #[error("pulses {first} and {second} overlap at duration {tau:e} s")]
    OverlapViolation { first: usize, second: usize, tau: f64 },

    // coherence integral
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    NonConvergent { estimate: f64, error: f64 },
    #[error("coherence integrand diverges at zero frequency: {reason}")]
    DivergentIntegrand { reason: String },
    #[error("coherence curve never crosses 1/e")]
    NoCrossing,

    // stochastic oracle
    #[error("sample interval {dt:e} s under-resolves pulse width {pulse_width:e} s")]
    UnderResolvedPulse { dt: f64, pulse_width: f64 },

    // benchmarking
    #[error("benchmarking fit failed: {reason}")]
    FitFailure { reason: String },

    // fitting
    #[error("poor fit: rms residual {rms:e} above threshold {threshold:e}")]
    PoorFit { rms: f64, threshold: f64 },
    #[error("degenerate data: {reason}")]
    Degenerate { reason: String },
    #[error("least squares did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    // optimizer
    #[error("infeasible starting sequence: {reason}")]
    InfeasibleStart { reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short variant identifier, e.g. `"Unstable"`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::NonConfining { .. } => "NonConfining",
            Error::Unstable { .. } => "Unstable",
            Error::NegativeFrequency { .. } => "NegativeFrequency",
            Error::NyquistViolation { .. } => "NyquistViolation",
            Error::SegmentTooLong { .. } => "SegmentTooLong",
            Error::OrderingViolation { .. } => "OrderingViolation",
            Error::OverlapViolation { .. } => "OverlapViolation",
            Error::NonConvergent { .. } => "NonConvergent",
            Error::DivergentIntegrand { .. } => "DivergentIntegrand",
            Error::NoCrossing => "NoCrossing",
            Error::UnderResolvedPulse { .. } => "UnderResolvedPulse",
            Error::FitFailure { .. } => "FitFailure",
            Error::PoorFit { .. } => "PoorFit",
            Error::Degenerate { .. } => "Degenerate",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::InfeasibleStart { .. } => "InfeasibleStart",
            Error::Parse { .. } => "Parse",
        }
    }

    /// True for errors caused by invalid inputs rather than by a failed
    /// computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::OrderingViolation { .. }
                | Error::OverlapViolation { .. }
                | Error::NegativeFrequency { .. }
                | Error::NyquistViolation { .. }
                | Error::SegmentTooLong { .. }
                | Error::UnderResolvedPulse { .. }
                | Error::InfeasibleStart { .. }
                | Error::NonConfining { .. }
                | Error::Parse { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
