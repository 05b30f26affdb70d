// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Dephasing noise spectra and time-domain realizations.

pub mod io;
pub mod psd;
pub mod spectrum;
pub mod synth;

pub use psd::{estimate_psd, log_log_slope, relative_rms_error, table, WelchEstimator};
pub use spectrum::{
    phase_noise_stepup, NoiseSpectrum, SpectralLine, SpectrumShape, DEFAULT_LINE_FWHM,
    DEFAULT_TAIL_FRACTION,
};
pub use synth::{check_nyquist, stream_rng, synthesize_trace, NoiseTrace, TraceSynthesizer};
