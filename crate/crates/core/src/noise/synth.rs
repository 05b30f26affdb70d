// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Gaussian noise traces with a prescribed spectrum.
//!
//! Independent circular complex Gaussian Fourier coefficients are drawn with
//! variance proportional to `S(ω_k)` and inverse transformed. Real and
//! imaginary parts of one transform are two independent stationary traces,
//! so every transform yields a pair.

use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::spectrum::{NoiseSpectrum, DEFAULT_TAIL_FRACTION};
use crate::error::{Error, Result};
use crate::scalar::{count, Real};

/// Sampled realization of `β(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrace<T> {
    /// Sample interval, s.
    pub dt: T,
    /// `β` samples, rad/s.
    pub samples: Vec<T>,
    /// Seed the trace was generated from.
    pub seed: u64,
}

impl<T: Real> NoiseTrace<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> T {
        self.dt * count(self.samples.len())
    }
}

/// Deterministic random stream `stream` of generator `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fails with `NyquistViolation` when the spectrum carries power above `π/dt`.
pub fn check_nyquist<T: Real>(spec: &NoiseSpectrum<T>, dt: T) -> Result<()> {
    let nyquist = T::PI() / dt;
    if let Some(band) = spec.effective_bandwidth(T::lit(DEFAULT_TAIL_FRACTION))? {
        // a cutoff sitting on the Nyquist bin is fine
        if band > nyquist * (T::one() + T::lit(1e-12)) && !spec.is_zero() {
            return Err(Error::NyquistViolation {
                support: band.as_f64(),
                nyquist: nyquist.as_f64(),
            });
        }
    }
    Ok(())
}

/// Reusable generator for traces of fixed length and sampling.
pub struct TraceSynthesizer<T: Real> {
    dt: T,
    len: usize,
    /// Standard deviation of the real and imaginary parts of each bin.
    amplitude: Vec<T>,
    fft: Arc<dyn Fft<T>>,
    silent: bool,
}

impl<T: Real> TraceSynthesizer<T> {
    pub fn new(spec: &NoiseSpectrum<T>, dt: T, len: usize) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid("len", "must be a power of two, at least 2"));
        }
        spec.validate()?;
        check_nyquist(spec, dt)?;
        let n: T = count(len);
        let d_omega = T::TAU() / (n * dt);
        // Two-sided autocorrelation density is 4 S; per bin the complex
        // coefficient needs E|Z|² = 2 N S_two / dt.
        let scale = T::lit(4.0) * n / dt;
        let amplitude = (0..len)
            .map(|k| {
                let kk = if k <= len / 2 { k } else { len - k };
                let omega = d_omega * count(kk);
                (scale * spec.density(omega)).sqrt()
            })
            .collect::<Vec<T>>();
        let silent = amplitude.iter().all(|a| *a == T::zero());
        let fft = FftPlanner::new().plan_fft_inverse(len);
        Ok(TraceSynthesizer {
            dt,
            len,
            amplitude,
            fft,
            silent,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Fills `buf` with two independent traces: the real and imaginary parts.
    pub fn fill_pair<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut Vec<Complex<T>>) {
        buf.clear();
        if self.silent {
            buf.resize(self.len, Complex::new(T::zero(), T::zero()));
            return;
        }
        buf.extend(self.amplitude.iter().map(|&a| {
            let re = T::standard_normal(rng);
            let im = T::standard_normal(rng);
            Complex::new(a * re, a * im)
        }));
        self.fft.process(buf);
        let inv_n = T::one() / count::<T>(self.len);
        for z in buf.iter_mut() {
            *z = *z * inv_n;
        }
    }
}

/// One trace of `len` samples at interval `dt`, deterministic in `seed`.
pub fn synthesize_trace<T: Real>(
    spec: &NoiseSpectrum<T>,
    dt: T,
    len: usize,
    seed: u64,
) -> Result<NoiseTrace<T>> {
    let synth = TraceSynthesizer::new(spec, dt, len)?;
    let mut rng = stream_rng(seed, 0);
    let mut buf = Vec::with_capacity(len);
    synth.fill_pair(&mut rng, &mut buf);
    Ok(NoiseTrace {
        dt,
        samples: buf.iter().map(|z| z.re).collect(),
        seed,
    })
}
