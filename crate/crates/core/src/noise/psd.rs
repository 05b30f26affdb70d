// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Averaged-periodogram (Welch) spectrum estimates in the same normalization
//! as [`NoiseSpectrum`], so that synthesis followed by estimation returns the
//! input spectrum in expectation.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::spectrum::NoiseSpectrum;
use super::synth::NoiseTrace;
use crate::error::{Error, Result};
use crate::scalar::{count, Real};

/// Hann-windowed, half-overlapping segment averager.
pub struct WelchEstimator<T: Real> {
    segment: usize,
    dt: T,
    window: Vec<T>,
    window_power: T,
    fft: Arc<dyn Fft<T>>,
    sum: Vec<T>,
    segments: usize,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> WelchEstimator<T> {
    pub fn new(segment: usize, dt: T) -> Result<Self> {
        if segment < 2 {
            return Err(Error::invalid("segment", "must hold at least two samples"));
        }
        if !(dt > T::zero()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let window: Vec<T> = (0..segment)
            .map(|m| {
                let x = T::TAU() * count::<T>(m) / count::<T>(segment);
                T::lit(0.5) * (T::one() - x.cos())
            })
            .collect();
        let window_power = window.iter().map(|w| *w * *w).sum();
        Ok(WelchEstimator {
            segment,
            dt,
            window,
            window_power,
            fft: FftPlanner::new().plan_fft_forward(segment),
            sum: vec![T::zero(); segment / 2 + 1],
            segments: 0,
            scratch: Vec::with_capacity(segment),
        })
    }

    /// Adds every half-overlapping segment of `samples`.
    pub fn push(&mut self, samples: &[T]) -> Result<()> {
        if self.segment > samples.len() {
            return Err(Error::SegmentTooLong {
                segment: self.segment,
                len: samples.len(),
            });
        }
        let step = (self.segment / 2).max(1);
        let mut start = 0;
        while start + self.segment <= samples.len() {
            self.scratch.clear();
            self.scratch.extend(
                samples[start..start + self.segment]
                    .iter()
                    .zip(&self.window)
                    .map(|(x, w)| Complex::new(*x * *w, T::zero())),
            );
            self.fft.process(&mut self.scratch);
            for (acc, z) in self.sum.iter_mut().zip(&self.scratch) {
                *acc += z.norm_sqr();
            }
            self.segments += 1;
            start += step;
        }
        Ok(())
    }

    /// Averaged estimate as a tabulated spectrum on `ω_k = 2πk/(L dt)`,
    /// `k = 0..=L/2`.
    pub fn finish(&self) -> Result<NoiseSpectrum<T>> {
        if self.segments == 0 {
            return Err(Error::invalid("trace", "no segments accumulated"));
        }
        let d_omega = T::TAU() / (count::<T>(self.segment) * self.dt);
        // two-sided estimate dt |X|² / Σw², converted with S = S_two / 4
        let norm = self.dt / (self.window_power * count::<T>(self.segments) * T::lit(4.0));
        let points = self
            .sum
            .iter()
            .enumerate()
            .map(|(k, p)| (d_omega * count(k), *p * norm))
            .collect();
        NoiseSpectrum::tabulated(points)
    }
}

/// Welch estimate of a single trace.
pub fn estimate_psd<T: Real>(trace: &NoiseTrace<T>, segment: usize) -> Result<NoiseSpectrum<T>> {
    let mut est = WelchEstimator::new(segment, trace.dt)?;
    est.push(&trace.samples)?;
    est.finish()
}

/// Tabulated nodes of a spectrum, or an empty slice for analytic shapes.
pub fn table<T: Real>(spec: &NoiseSpectrum<T>) -> &[(T, T)] {
    match &spec.shape {
        super::spectrum::SpectrumShape::Tabulated { points } => points,
        _ => &[],
    }
}

/// Least-squares slope of `ln S` against `ln ω` over table nodes in
/// `[lo, hi]` with positive density.
pub fn log_log_slope<T: Real>(points: &[(T, T)], lo: T, hi: T) -> Option<T> {
    let sel: Vec<(T, T)> = points
        .iter()
        .filter(|(w, s)| *w >= lo && *w <= hi && *w > T::zero() && *s > T::zero())
        .map(|(w, s)| (w.ln(), s.ln()))
        .collect();
    if sel.len() < 2 {
        return None;
    }
    let n: T = count(sel.len());
    let mx = sel.iter().map(|p| p.0).sum::<T>() / n;
    let my = sel.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = sel.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = sel.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// RMS of `Ŝ/S - 1` over table nodes in `[lo, hi]` where the reference is
/// positive.
pub fn relative_rms_error<T: Real>(
    estimate: &[(T, T)],
    reference: &NoiseSpectrum<T>,
    lo: T,
    hi: T,
) -> Option<T> {
    let errs: Vec<T> = estimate
        .iter()
        .filter(|(w, _)| *w >= lo && *w <= hi)
        .filter_map(|(w, s)| {
            let r = reference.density(*w);
            (r > T::zero()).then(|| *s / r - T::one())
        })
        .collect();
    if errs.is_empty() {
        return None;
    }
    let n: T = count(errs.len());
    Some((errs.iter().map(|e| *e * *e).sum::<T>() / n).sqrt())
}
