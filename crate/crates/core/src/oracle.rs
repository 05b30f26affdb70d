// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo dephasing: accumulate `φ = ∫ y(t) β(t) dt` along synthesized
//! noise traces and estimate `W = |⟨e^{iφ}⟩|`.
//!
//! `β` is held constant over each sample interval, so the phase through a
//! free-precession interval is an exact difference of the running integral
//! of the trace. Each shot draws a fresh trace; shots come in pairs sharing
//! one transform (real and imaginary parts), and shot pair `k` always uses
//! random stream `k` of the ensemble seed, so results do not depend on how shots
//! are scheduled across threads.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::{check_grid, CoherenceCurve, CurveMethod};
use crate::noise::{stream_rng, NoiseSpectrum, TraceSynthesizer, DEFAULT_TAIL_FRACTION};
use crate::pulse::{PulseSequence, Segment};
use crate::scalar::{count, Real};

pub const DEFAULT_BATCHES: usize = 20;

/// Samples per highest spectral frequency in the default sample interval.
pub const DEFAULT_SAMPLES_PER_CYCLE: f64 = 40.0;

/// Samples across the shortest duration in the default sample interval.
pub const DEFAULT_SAMPLES_PER_TAU: f64 = 20.0;

/// Largest trace the default sizing will allocate.
const MAX_DEFAULT_LEN: usize = 1 << 24;

/// Noise ensemble shared by every sequence simulated against it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T> {
    pub spectrum: NoiseSpectrum<T>,
    pub shots: usize,
    pub seed: u64,
    /// Sample interval; chosen from the pulse width and spectrum when `None`.
    pub dt: Option<T>,
    /// Samples per trace (power of two); sized from the spectrum when `None`.
    pub trace_len: Option<usize>,
    pub batches: usize,
}

impl<T: Real> Ensemble<T> {
    pub fn new(spectrum: NoiseSpectrum<T>, shots: usize, seed: u64) -> Self {
        Ensemble {
            spectrum,
            shots,
            seed,
            dt: None,
            trace_len: None,
            batches: DEFAULT_BATCHES,
        }
    }

    /// Sampling covering every sequence in `seqs` for durations in
    /// `[tau_min, tau_max]`.
    pub fn sampling<'a>(
        &self,
        seqs: impl IntoIterator<Item = &'a PulseSequence<T>>,
        tau_min: T,
        tau_max: T,
    ) -> Result<Sampling<T>> {
        let widths = seqs
            .into_iter()
            .map(|s| s.pulse_width())
            .filter(|w| *w > T::zero())
            .fold(None, |acc: Option<T>, w| Some(acc.map_or(w, |a| a.min(w))));
        let ten = T::lit(10.0);
        let dt = match self.dt {
            Some(dt) => {
                if !(dt > T::zero()) || !dt.is_finite() {
                    return Err(Error::invalid("dt", "must be positive and finite"));
                }
                if let Some(w) = widths {
                    if dt > w / ten {
                        return Err(Error::UnderResolvedPulse {
                            dt: dt.as_f64(),
                            pulse_width: w.as_f64(),
                        });
                    }
                }
                dt
            }
            None => {
                let band = self
                    .spectrum
                    .effective_bandwidth(T::lit(DEFAULT_TAIL_FRACTION))?
                    .filter(|b| *b > T::zero());
                // white noise has no band edge; the duration bound alone applies
                let mut dt = tau_min / T::lit(DEFAULT_SAMPLES_PER_TAU);
                if let Some(b) = band {
                    dt = dt.min(T::TAU() / (T::lit(DEFAULT_SAMPLES_PER_CYCLE) * b));
                }
                if let Some(w) = widths {
                    dt = dt.min(w / ten);
                }
                dt
            }
        };
        let len = match self.trace_len {
            Some(n) => n,
            None => {
                let mut span = tau_max * T::lit(2.0);
                if let Some(r) = self.spectrum.resolution_scale() {
                    span = span.max(T::lit(20.0) * T::TAU() / r);
                }
                let n = (span / dt).ceil().to_usize().unwrap_or(usize::MAX).max(64);
                if n > MAX_DEFAULT_LEN {
                    return Err(Error::invalid(
                        "trace_len",
                        format!("default sizing needs {n} samples; set dt or trace_len explicitly"),
                    ));
                }
                n.next_power_of_two()
            }
        };
        if count::<T>(len) * dt < tau_max {
            return Err(Error::invalid("trace_len", "trace is shorter than the longest duration"));
        }
        Ok(Sampling { dt, len })
    }

    fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::invalid("shots", "need at least one shot"));
        }
        if self.batches < 2 || self.batches > self.shots {
            return Err(Error::invalid("batches", "need 2 ≤ batches ≤ shots"));
        }
        self.spectrum.validate()
    }
}

/// One sequence simulated against an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingRun<T> {
    pub sequence: PulseSequence<T>,
    pub ensemble: Ensemble<T>,
}

impl<T: Real> DephasingRun<T> {
    pub fn new(sequence: PulseSequence<T>, spectrum: NoiseSpectrum<T>, shots: usize, seed: u64) -> Self {
        DephasingRun {
            sequence,
            ensemble: Ensemble::new(spectrum, shots, seed),
        }
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.ensemble.dt = Some(dt);
        self
    }

    pub fn with_trace_len(mut self, len: usize) -> Self {
        self.ensemble.trace_len = Some(len);
        self
    }

    pub fn with_batches(mut self, batches: usize) -> Self {
        self.ensemble.batches = batches;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling<T> {
    pub dt: T,
    pub len: usize,
}

/// Signed free intervals of one sequence at one duration.
type Windows<T> = Vec<(T, T, T)>;

fn windows<T: Real>(seq: &PulseSequence<T>, tau: T) -> Result<Windows<T>> {
    Ok(seq
        .realize(tau)?
        .intervals
        .iter()
        .filter_map(|i| match i.segment {
            Segment::Free { sign } if i.end > i.start => {
                Some((i.start, i.end, T::lit(f64::from(sign))))
            }
            _ => None,
        })
        .collect())
}

/// Running integral of a zero-order-hold trace.
pub(crate) struct Accumulated<'a, T> {
    dt: T,
    samples: &'a [T],
    prefix: Vec<T>,
}

impl<'a, T: Real> Accumulated<'a, T> {
    pub(crate) fn new(samples: &'a [T], dt: T, upto: usize) -> Self {
        let upto = upto.min(samples.len());
        let mut prefix = Vec::with_capacity(upto + 1);
        let mut acc = T::zero();
        prefix.push(acc);
        for b in &samples[..upto] {
            acc += *b * dt;
            prefix.push(acc);
        }
        Accumulated { dt, samples, prefix }
    }

    /// `∫_0^t β dt'`.
    pub(crate) fn at(&self, t: T) -> T {
        let x = t / self.dt;
        let i = x.floor().to_usize().unwrap_or(0).min(self.prefix.len() - 1);
        let frac = t - self.dt * count(i);
        if i >= self.samples.len() || frac <= T::zero() {
            return self.prefix[i];
        }
        self.prefix[i] + self.samples[i] * frac
    }

    fn phase(&self, w: &Windows<T>) -> T {
        w.iter()
            .map(|(a, b, s)| *s * (self.at(*b) - self.at(*a)))
            .sum()
    }
}

/// Monte Carlo coherence of `run.sequence`.
pub fn simulate_coherence<T: Real>(run: &DephasingRun<T>, taus: &[T]) -> Result<CoherenceCurve<T>> {
    let mut curves = simulate_ensemble(&run.ensemble, &[(&run.sequence, taus)])?;
    Ok(curves.remove(0))
}

/// Monte Carlo coherence of several sequences, each on its own duration
/// grid, all driven by the same noise realizations.
pub fn simulate_ensemble<T: Real>(
    ens: &Ensemble<T>,
    jobs: &[(&PulseSequence<T>, &[T])],
) -> Result<Vec<CoherenceCurve<T>>> {
    ens.validate()?;
    if jobs.is_empty() {
        return Ok(Vec::new());
    }
    for (_, taus) in jobs {
        check_grid(taus)?;
    }
    let tau_min = jobs.iter().map(|j| j.1[0]).fold(T::infinity(), T::min);
    let tau_max = jobs
        .iter()
        .map(|j| *j.1.last().expect("grid is non-empty"))
        .fold(T::zero(), T::max);
    let sampling = ens.sampling(jobs.iter().map(|j| j.0), tau_min, tau_max)?;
    let layout: Vec<Windows<T>> = jobs
        .iter()
        .flat_map(|(s, taus)| taus.iter().map(move |&t| windows(s, t)))
        .collect::<Result<_>>()?;
    let synth = TraceSynthesizer::new(&ens.spectrum, sampling.dt, sampling.len)?;
    let upto = ((tau_max / sampling.dt).ceil().to_usize().unwrap_or(sampling.len) + 1).min(sampling.len);
    let points = layout.len();

    let pairs = ens.shots.div_ceil(2);
    let per_pair: Vec<Vec<Complex<T>>> = (0..pairs)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::with_capacity(upto)),
            |(buf, trace), p| {
                let mut rng = stream_rng(ens.seed, p as u64);
                synth.fill_pair(&mut rng, buf);
                let shots_here = if 2 * p + 1 < ens.shots { 2 } else { 1 };
                let mut out = Vec::with_capacity(points * shots_here);
                for half in 0..shots_here {
                    trace.clear();
                    trace.extend(buf[..upto].iter().map(|z| if half == 0 { z.re } else { z.im }));
                    let acc = Accumulated::new(trace, sampling.dt, upto);
                    out.extend(layout.iter().map(|w| {
                        let (s, c) = acc.phase(w).sin_cos();
                        Complex::new(c, s)
                    }));
                }
                out
            },
        )
        .collect();

    // deterministic reduction in shot order
    let b = ens.batches;
    let zero = Complex::new(T::zero(), T::zero());
    let mut total = vec![zero; points];
    let mut batch = vec![zero; points * b];
    let mut batch_count = vec![0usize; b];
    let mut shot = 0usize;
    for chunk in &per_pair {
        for shot_values in chunk.chunks(points) {
            let k = shot * b / ens.shots;
            batch_count[k] += 1;
            for (i, z) in shot_values.iter().enumerate() {
                total[i] = total[i] + *z;
                batch[k * points + i] = batch[k * points + i] + *z;
            }
            shot += 1;
        }
    }
    let n_shots: T = count(ens.shots);
    let nb: T = count(b);
    let mut curves = Vec::with_capacity(jobs.len());
    let mut i = 0;
    for (_, taus) in jobs {
        let mut w = Vec::with_capacity(taus.len());
        let mut se = Vec::with_capacity(taus.len());
        for _ in taus.iter() {
            w.push((total[i] / n_shots).norm().min(T::one()));
            let bw: Vec<T> = (0..b)
                .map(|k| (batch[k * points + i] / count::<T>(batch_count[k])).norm())
                .collect();
            let mean = bw.iter().copied().sum::<T>() / nb;
            let var = bw.iter().map(|x| (*x - mean) * (*x - mean)).sum::<T>() / (nb - T::one());
            se.push((var / nb).sqrt());
            i += 1;
        }
        let chi = w
            .iter()
            .map(|x| if *x > T::zero() { -x.ln() } else { T::infinity() })
            .collect();
        curves.push(CoherenceCurve {
            tau: taus.to_vec(),
            chi,
            w,
            uncertainty: Some(se),
            method: CurveMethod::MonteCarlo,
        });
    }
    Ok(curves)
}

/// Ramsey fringe record.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeCurve<T> {
    pub t: Vec<T>,
    /// Excited-state probability `½(1 - W cos 2πΔt)`.
    pub p_up: Vec<T>,
    pub w: Vec<T>,
    pub uncertainty: Vec<T>,
    /// Measured fraction with projection noise, when requested.
    pub measured: Option<Vec<T>>,
}

/// Ramsey fringes at detuning `detuning_hz`, optionally with binomial
/// projection noise for `ions` detected spins (drawn from `seed`).
pub fn simulate_ramsey_fringes<T: Real>(
    run: &DephasingRun<T>,
    detuning_hz: T,
    times: &[T],
    projection: Option<(u64, u64)>,
) -> Result<FringeCurve<T>> {
    if !detuning_hz.is_finite() {
        return Err(Error::invalid("detuning", "must be finite"));
    }
    let curve = simulate_coherence(run, times)?;
    let p_up: Vec<T> = times
        .iter()
        .zip(&curve.w)
        .map(|(t, w)| T::lit(0.5) * (T::one() - *w * (T::TAU() * detuning_hz * *t).cos()))
        .collect();
    let measured = match projection {
        Some((ions, seed)) => {
            let mut rng = stream_rng(seed, u64::MAX);
            Some(
                p_up.iter()
                    .map(|p| sample_projection(*p, ions, &mut rng))
                    .collect::<Result<_>>()?,
            )
        }
        None => None,
    };
    Ok(FringeCurve {
        t: times.to_vec(),
        p_up,
        w: curve.w,
        uncertainty: curve.uncertainty.unwrap_or_default(),
        measured,
    })
}

/// Fraction of `ions` spins found bright when each is bright with
/// probability `p`.
pub fn sample_projection<T: Real, R: Rng + ?Sized>(p: T, ions: u64, rng: &mut R) -> Result<T> {
    if ions == 0 {
        return Err(Error::invalid("ions", "need at least one ion"));
    }
    let p = p.as_f64().clamp(0.0, 1.0);
    let dist = Binomial::new(ions, p).map_err(|e| Error::invalid("p", e.to_string()))?;
    Ok(T::lit(dist.sample(rng) as f64 / ions as f64))
}

/// Standard deviation of the measured fraction at each point across
/// `repeats` independent simulated experiments.
pub fn projection_noise_trace<T: Real>(p_up: &[T], ions: u64, repeats: usize, seed: u64) -> Result<Vec<T>> {
    if repeats < 2 {
        return Err(Error::invalid("repeats", "need at least two repeats"));
    }
    p_up.iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = stream_rng(seed, i as u64);
            let xs: Vec<T> = (0..repeats)
                .map(|_| sample_projection(*p, ions, &mut rng))
                .collect::<Result<_>>()?;
            let n: T = count(repeats);
            let mean = xs.iter().copied().sum::<T>() / n;
            let var = xs.iter().map(|x| (*x - mean) * (*x - mean)).sum::<T>() / (n - T::one());
            Ok(var.sqrt())
        })
        .collect()
}
