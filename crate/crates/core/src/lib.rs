// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Trapped-ion spin-qubit toolkit: Penning-trap mode frequencies, dephasing
//! noise spectra, dynamical-decoupling filter functions, Monte Carlo
//! coherence, randomized benchmarking and pulse-sequence optimization.
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`.

pub mod constants;
pub mod error;
pub mod filter;
pub mod fitting;
mod minimize;
pub mod noise;
pub mod optimizer;
pub mod oracle;
pub mod pulse;
pub mod quadrature;
pub mod rb;
pub mod scalar;
pub mod trap;

pub use error::{Error, Result};
pub use scalar::Real;

pub type TrapConfig64 = trap::TrapConfig<f64>;
pub type ModeFrequencies64 = trap::ModeFrequencies<f64>;
pub type PlasmaState64 = trap::PlasmaState<f64>;
pub type NoiseSpectrum64 = noise::NoiseSpectrum<f64>;
pub type NoiseTrace64 = noise::NoiseTrace<f64>;
pub type PulseSequence64 = pulse::PulseSequence<f64>;
pub type CoherenceCurve64 = filter::CoherenceCurve<f64>;
pub type DephasingRun64 = oracle::DephasingRun<f64>;
pub type Ensemble64 = oracle::Ensemble<f64>;
pub type RbExperiment64 = rb::RbExperiment<f64>;
pub type RbResult64 = rb::RbResult<f64>;
pub type OptimizationProblem64 = optimizer::OptimizationProblem<f64>;
