// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Simplified single-qubit randomized benchmarking.
//!
//! Each computational gate is a Pauli π rotation followed by a Clifford π/2
//! rotation, each about a random axis in {X, Y} with positive sign. The ideal
//! Bloch vector is tracked alongside the simulated one, and a final rotation
//! built from the same π/2 steps brings the ideal state to |↓⟩. The spin is
//! represented by its polarization vector so that depolarization is exact.
//! |↑⟩ is `+z` and the fidelity is the |↓⟩ population `(1 - z) / 2`.

use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{stream_rng, NoiseSpectrum, TraceSynthesizer, DEFAULT_TAIL_FRACTION};
use crate::oracle::Accumulated;
use crate::pulse::Axis;
use crate::scalar::{count, Real};

/// Delay between consecutive gates, s.
pub const DEFAULT_GATE_GAP: f64 = 5e-6;
/// π-pulse duration of the reference experiment, s.
pub const DEFAULT_TAU_PI: f64 = 232.5e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Pauli,
    Clifford,
    FinalInversion,
}

/// One driven rotation. A final inversion may be a multiple of π/2,
/// including zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSpec<T> {
    pub kind: GateKind,
    pub axis: Axis,
    pub angle: T,
}

/// Error channel acting during a benchmarking run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "model",
    rename_all = "snake_case",
    bound(deserialize = "T: Real + Deserialize<'de>")
)]
pub enum ErrorModel<T: Real> {
    /// No error.
    Ideal,
    /// After every computational gate the polarization shrinks by
    /// `1 - 2p`, so `p = 0.5` depolarizes completely.
    Depolarizing { p: T },
    /// Every Pauli π pulse rotates by `π + epsilon`.
    OverRotation { epsilon: T },
    /// Classical detuning `β(t)` with the given spectrum, present during
    /// the gaps and the drive.
    Detuning { spectrum: NoiseSpectrum<T> },
}

/// Benchmarking experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct RbExperiment<T: Real> {
    pub lengths: Vec<usize>,
    /// Randomizations per length.
    pub runs: usize,
    pub seed: u64,
    pub error: ErrorModel<T>,
    /// Delay between gates, s.
    pub gate_gap: T,
    /// π-pulse duration, s.
    pub tau_pi: T,
    /// Projective measurements averaged into each run's fidelity; `None`
    /// records the exact population.
    pub measurements: Option<u32>,
}

impl<T: Real> RbExperiment<T> {
    pub fn new(lengths: Vec<usize>, runs: usize, seed: u64, error: ErrorModel<T>) -> Self {
        RbExperiment {
            lengths,
            runs,
            seed,
            error,
            gate_gap: T::lit(DEFAULT_GATE_GAP),
            tau_pi: T::lit(DEFAULT_TAU_PI),
            measurements: None,
        }
    }

    pub fn with_measurements(mut self, m: u32) -> Self {
        self.measurements = Some(m);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::invalid("lengths", "at least one length is required"));
        }
        if self.lengths.contains(&0) {
            return Err(Error::invalid("lengths", "every length must be at least 1"));
        }
        if self.runs == 0 {
            return Err(Error::invalid("runs", "must be at least 1"));
        }
        if !(self.gate_gap >= T::zero()) || !self.gate_gap.is_finite() {
            return Err(Error::invalid("gate_gap", "must be finite and non-negative"));
        }
        if !(self.tau_pi > T::zero()) || !self.tau_pi.is_finite() {
            return Err(Error::invalid("tau_pi", "must be positive and finite"));
        }
        if self.measurements == Some(0) {
            return Err(Error::invalid("measurements", "must be at least 1"));
        }
        match &self.error {
            ErrorModel::Ideal => {}
            ErrorModel::Depolarizing { p } => {
                if !(*p >= T::zero() && *p <= T::lit(0.5)) {
                    return Err(Error::invalid("p", "must lie in [0, 0.5]"));
                }
            }
            ErrorModel::OverRotation { epsilon } => {
                if !epsilon.is_finite() {
                    return Err(Error::invalid("epsilon", "must be finite"));
                }
            }
            ErrorModel::Detuning { spectrum } => spectrum.validate()?,
        }
        Ok(())
    }
}

/// Fidelity of one randomization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord<T> {
    pub length: usize,
    pub run: usize,
    pub fidelity: T,
}

/// Raw benchmarking data with per-length statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbData<T> {
    pub records: Vec<RunRecord<T>>,
    pub lengths: Vec<usize>,
    pub mean: Vec<T>,
    /// Standard error of each mean.
    pub se: Vec<T>,
    pub seed: u64,
}

/// Fitted decay `A (1 - 2 p_g)^l + 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbFit<T> {
    pub error_per_gate: T,
    /// Half-width of the 68 % confidence interval on `error_per_gate`.
    pub ci: T,
    pub amplitude: T,
    pub reduced_chi2: T,
    /// RMS of the unweighted residuals.
    pub residual_rms: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbResult<T> {
    pub data: RbData<T>,
    pub fit: RbFit<T>,
}

type Vec3<T> = [T; 3];

fn axis_vector<T: Real>(axis: Axis) -> Vec3<T> {
    match axis {
        Axis::X => [T::one(), T::zero(), T::zero()],
        Axis::Y => [T::zero(), T::one(), T::zero()],
    }
}

/// Right-handed rotation of `r` by `angle` about the unit vector `n`.
fn rotate<T: Real>(r: Vec3<T>, n: Vec3<T>, angle: T) -> Vec3<T> {
    let (s, c) = angle.sin_cos();
    let dot = n[0] * r[0] + n[1] * r[1] + n[2] * r[2];
    let cross = [
        n[1] * r[2] - n[2] * r[1],
        n[2] * r[0] - n[0] * r[2],
        n[0] * r[1] - n[1] * r[0],
    ];
    let k = dot * (T::one() - c);
    [
        r[0] * c + cross[0] * s + n[0] * k,
        r[1] * c + cross[1] * s + n[1] * k,
        r[2] * c + cross[2] * s + n[2] * k,
    ]
}

/// Applies ideal gates to a polarization vector.
pub fn apply_ideal<T: Real>(gates: &[GateSpec<T>], mut r: [T; 3]) -> [T; 3] {
    for g in gates {
        r = rotate(r, axis_vector(g.axis), g.angle);
    }
    r
}

fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> Axis {
    if rng.random::<bool>() {
        Axis::X
    } else {
        Axis::Y
    }
}

/// The ideal state after any sequence of π/2 and π rotations about X and Y
/// starting from `+z` is one of the six axis states; some rotation by a
/// multiple of π/2 about X or Y sends it to `-z`.
fn inversion<T: Real>(r: Vec3<T>) -> GateSpec<T> {
    let target = [T::zero(), T::zero(), -T::one()];
    let mut best = None;
    let mut best_err = T::infinity();
    for axis in [Axis::X, Axis::Y] {
        for k in 0..4 {
            let angle = T::FRAC_PI_2() * count(k);
            let out = rotate(r, axis_vector(axis), angle);
            let err = (0..3).map(|i| (out[i] - target[i]).abs()).sum::<T>();
            if err < best_err {
                best_err = err;
                best = Some(GateSpec {
                    kind: GateKind::FinalInversion,
                    axis,
                    angle,
                });
            }
        }
    }
    best.expect("eight candidates")
}

fn generate_with<T: Real, R: Rng + ?Sized>(l: usize, rng: &mut R) -> Vec<GateSpec<T>> {
    let mut gates = Vec::with_capacity(2 * l + 1);
    let mut r = [T::zero(), T::zero(), T::one()];
    for _ in 0..l {
        for (kind, angle) in [(GateKind::Pauli, T::PI()), (GateKind::Clifford, T::FRAC_PI_2())] {
            let g = GateSpec {
                kind,
                axis: random_axis(rng),
                angle,
            };
            r = rotate(r, axis_vector(g.axis), g.angle);
            gates.push(g);
        }
    }
    gates.push(inversion(r));
    gates
}

/// `l` computational gates (`2l` rotations) and the final inversion.
pub fn generate_sequence<T: Real>(l: usize, seed: u64) -> Result<Vec<GateSpec<T>>> {
    if l == 0 {
        return Err(Error::invalid("l", "must be at least 1"));
    }
    Ok(generate_with(l, &mut stream_rng(seed, 0)))
}

fn run_stream(length: usize, run: usize) -> u64 {
    ((length as u64) << 32) | run as u64
}

/// Noise sampling shared by all runs of a detuning experiment.
struct DetuningNoise<T: Real> {
    synth: TraceSynthesizer<T>,
}

impl<T: Real> DetuningNoise<T> {
    fn new(exp: &RbExperiment<T>, spectrum: &NoiseSpectrum<T>) -> Result<Self> {
        // longest run: every gate at most a π pulse
        let l_max = *exp.lengths.iter().max().unwrap_or(&1);
        let duration = count::<T>(2 * l_max + 1) * (exp.tau_pi + exp.gate_gap);
        let mut dt = exp.tau_pi / T::lit(10.0);
        if let Some(band) = spectrum.effective_bandwidth(T::lit(DEFAULT_TAIL_FRACTION))? {
            if band > T::zero() {
                dt = dt.min(T::TAU() / (T::lit(40.0) * band));
            }
        }
        let mut span = duration;
        if let Some(scale) = spectrum.resolution_scale() {
            if scale > T::zero() {
                span = span.max(T::lit(20.0) * T::TAU() / scale);
            }
        }
        let want = (span / dt).ceil().to_usize().unwrap_or(usize::MAX).max(2);
        let len = want
            .checked_next_power_of_two()
            .filter(|n| *n <= 1 << 24)
            .ok_or_else(|| Error::invalid("lengths", "detuning trace would exceed 2^24 samples"))?;
        Ok(DetuningNoise {
            synth: TraceSynthesizer::new(spectrum, dt, len)?,
        })
    }
}

fn run_fidelity<T: Real>(
    exp: &RbExperiment<T>,
    noise: Option<&DetuningNoise<T>>,
    length: usize,
    run: usize,
) -> T {
    let mut rng = stream_rng(exp.seed, run_stream(length, run));
    let gates = generate_with::<T, _>(length, &mut rng);
    let mut r = [T::zero(), T::zero(), T::one()];
    match &exp.error {
        ErrorModel::Ideal => r = apply_ideal(&gates, r),
        ErrorModel::Depolarizing { p } => {
            let shrink = T::one() - T::lit(2.0) * *p;
            for g in &gates {
                r = rotate(r, axis_vector(g.axis), g.angle);
                if g.kind == GateKind::Clifford {
                    r = [r[0] * shrink, r[1] * shrink, r[2] * shrink];
                }
            }
        }
        ErrorModel::OverRotation { epsilon } => {
            for g in &gates {
                let angle = match g.kind {
                    GateKind::Pauli => g.angle + *epsilon,
                    _ => g.angle,
                };
                r = rotate(r, axis_vector(g.axis), angle);
            }
        }
        ErrorModel::Detuning { .. } => {
            let noise = noise.expect("detuning noise prepared");
            let mut buf = Vec::with_capacity(noise.synth.len());
            noise.synth.fill_pair(&mut rng, &mut buf);
            let beta: Vec<T> = buf.iter().map(|z| z.re).collect();
            let acc = Accumulated::new(&beta, noise.synth.dt(), beta.len());
            let rabi = T::PI() / exp.tau_pi;
            let z = [T::zero(), T::zero(), T::one()];
            let mut t = T::zero();
            for (i, g) in gates.iter().enumerate() {
                if i > 0 {
                    let phase = acc.at(t + exp.gate_gap) - acc.at(t);
                    r = rotate(r, z, phase);
                    t += exp.gate_gap;
                }
                let width = g.angle / rabi;
                if width > T::zero() {
                    // detuning held at its mean over the pulse
                    let delta = (acc.at(t + width) - acc.at(t)) / width;
                    let a = axis_vector::<T>(g.axis);
                    let norm = (rabi * rabi + delta * delta).sqrt();
                    let n = [a[0] * rabi / norm, a[1] * rabi / norm, delta / norm];
                    r = rotate(r, n, norm * width);
                    t += width;
                }
            }
        }
    }
    let p_down = ((T::one() - r[2]) * T::lit(0.5)).max(T::zero()).min(T::one());
    match exp.measurements {
        None => p_down,
        Some(m) => {
            let hits = Binomial::new(u64::from(m), p_down.as_f64())
                .expect("probability clamped to [0, 1]")
                .sample(&mut rng);
            T::lit(hits as f64) / T::lit(f64::from(m))
        }
    }
}

/// Fidelities of every run, without fitting.
pub fn simulate_fidelities<T: Real>(exp: &RbExperiment<T>) -> Result<RbData<T>> {
    exp.validate()?;
    let noise = match &exp.error {
        ErrorModel::Detuning { spectrum } => Some(DetuningNoise::new(exp, spectrum)?),
        _ => None,
    };
    let pairs: Vec<(usize, usize)> = exp
        .lengths
        .iter()
        .flat_map(|&l| (0..exp.runs).map(move |k| (l, k)))
        .collect();
    let records: Vec<RunRecord<T>> = pairs
        .par_iter()
        .map(|&(length, run)| RunRecord {
            length,
            run,
            fidelity: run_fidelity(exp, noise.as_ref(), length, run),
        })
        .collect();
    let k: T = count(exp.runs);
    let mut mean = Vec::with_capacity(exp.lengths.len());
    let mut se = Vec::with_capacity(exp.lengths.len());
    for chunk in records.chunks(exp.runs) {
        let m = chunk.iter().map(|r| r.fidelity).sum::<T>() / k;
        let s = if exp.runs > 1 {
            let var = chunk.iter().map(|r| (r.fidelity - m).powi(2)).sum::<T>() / (k - T::one());
            (var / k).sqrt()
        } else {
            T::zero()
        };
        mean.push(m);
        se.push(s);
    }
    // A run-to-run spread of zero still carries the resolution of the
    // measurement average.
    let floor = match exp.measurements {
        Some(m) => T::one() / (T::lit(2.0) * k * T::lit(f64::from(m))),
        None => T::lit(1e-12),
    };
    for s in se.iter_mut() {
        *s = s.max(floor);
    }
    Ok(RbData {
        records,
        lengths: exp.lengths.clone(),
        mean,
        se,
        seed: exp.seed,
    })
}

/// Weighted least-squares fit of `A q^l + 1/2` with `q = 1 - 2 p_g`.
pub fn fit_decay<T: Real>(lengths: &[usize], mean: &[T], se: &[T]) -> Result<RbFit<T>> {
    let n = lengths.len();
    if n != mean.len() || n != se.len() {
        return Err(Error::invalid("data", "lengths, means and errors differ in size"));
    }
    if n < 3 {
        return Err(Error::FitFailure {
            reason: "at least three lengths are needed".into(),
        });
    }
    if se.iter().any(|s| !(*s > T::zero())) {
        return Err(Error::invalid("se", "standard errors must be positive"));
    }
    let half = T::lit(0.5);
    let w: Vec<T> = se.iter().map(|s| T::one() / (*s * *s)).collect();
    let y: Vec<T> = mean.iter().map(|m| *m - half).collect();
    let ls: Vec<T> = lengths.iter().map(|l| count(*l)).collect();

    let (i_lo, i_hi) = {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by_key(|&i| lengths[i]);
        (idx[0], idx[n - 1])
    };
    let drop = mean[i_lo] - mean[i_hi];
    let noise = (se[i_lo] * se[i_lo] + se[i_hi] * se[i_hi]).sqrt();
    if !(drop > T::lit(2.0) * noise) {
        return Err(Error::FitFailure {
            reason: format!(
                "fidelity drop {:.3e} between shortest and longest sequence is within noise {:.3e}",
                drop.as_f64(),
                noise.as_f64()
            ),
        });
    }

    // amplitude is linear for fixed q: profile it out
    let profile = |p: T| -> (T, T) {
        let q = T::one() - T::lit(2.0) * p;
        let mut num = T::zero();
        let mut den = T::zero();
        let basis: Vec<T> = ls.iter().map(|l| q.powf(*l)).collect();
        for i in 0..n {
            num += w[i] * y[i] * basis[i];
            den += w[i] * basis[i] * basis[i];
        }
        let a = if den > T::zero() { num / den } else { T::zero() };
        let chi2 = (0..n).map(|i| w[i] * (y[i] - a * basis[i]).powi(2)).sum::<T>();
        (chi2, a)
    };

    // coarse log scan, then golden section inside the best bracket
    let lo = T::lit(1e-9);
    let hi = T::lit(0.5) - T::lit(1e-9);
    let steps = 400;
    let grid: Vec<T> = (0..=steps)
        .map(|i| lo * (hi / lo).powf(count::<T>(i) / count::<T>(steps)))
        .collect();
    let (best, _) = grid
        .iter()
        .enumerate()
        .map(|(i, p)| (i, profile(*p).0))
        .fold((0, T::infinity()), |acc, x| if x.1 < acc.1 { x } else { acc });
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(steps)];
    let g = T::lit(0.618_033_988_749_894_9);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..200 {
        if profile(c).0 < profile(d).0 {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
        if (b - a) <= T::lit(1e-14) * (a + b) {
            break;
        }
    }
    let p = (a + b) * half;
    let (chi2, amp) = profile(p);
    if !(amp > T::zero()) || p <= lo * T::lit(10.0) {
        return Err(Error::FitFailure {
            reason: "no decay toward 1/2 resolved".into(),
        });
    }

    // covariance from the weighted Jacobian, inflated by the reduced χ²
    let q = T::one() - T::lit(2.0) * p;
    let (mut jaa, mut jap, mut jpp) = (T::zero(), T::zero(), T::zero());
    for i in 0..n {
        let da = q.powf(ls[i]);
        let dp = -T::lit(2.0) * amp * ls[i] * q.powf(ls[i] - T::one());
        jaa += w[i] * da * da;
        jap += w[i] * da * dp;
        jpp += w[i] * dp * dp;
    }
    let det = jaa * jpp - jap * jap;
    if !(det > T::zero()) {
        return Err(Error::FitFailure {
            reason: "singular fit covariance".into(),
        });
    }
    let dof = count::<T>(n - 2);
    let reduced = chi2 / dof;
    let var_p = jaa / det * reduced.max(T::one());
    let residual_rms = ((0..n)
        .map(|i| (y[i] - amp * q.powf(ls[i])).powi(2))
        .sum::<T>()
        / count(n))
    .sqrt();
    Ok(RbFit {
        error_per_gate: p,
        ci: var_p.sqrt(),
        amplitude: amp,
        reduced_chi2: reduced,
        residual_rms,
    })
}

/// Runs the experiment and fits the decay.
pub fn simulate<T: Real>(exp: &RbExperiment<T>) -> Result<RbResult<T>> {
    let data = simulate_fidelities(exp)?;
    let fit = fit_decay(&data.lengths, &data.mean, &data.se)?;
    Ok(RbResult { data, fit })
}

/// Worst-case π-pulse error from a timing resolution step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingInfidelity<T> {
    /// Population error `sin²(π/2 · resolution/τ_π)`.
    pub population: T,
    /// Fractional timing error `resolution/τ_π`.
    pub linear: T,
}

pub fn timing_infidelity<T: Real>(tau_pi: T, resolution: T) -> Result<TimingInfidelity<T>> {
    if !(tau_pi > T::zero()) {
        return Err(Error::invalid("tau_pi", "must be positive"));
    }
    if !(resolution >= T::zero()) {
        return Err(Error::invalid("resolution", "must be non-negative"));
    }
    let x = resolution / tau_pi;
    Ok(TimingInfidelity {
        population: (T::FRAC_PI_2() * x).sin().powi(2),
        linear: x,
    })
}

/// Writes `l,run,fidelity` rows after a `# seed=` line.
pub fn write_runs_csv<T: Real, W: Write>(data: &RbData<T>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# seed={}", data.seed)?;
    writeln!(out, "l,run,fidelity")?;
    for r in &data.records {
        writeln!(out, "{},{},{:.12e}", r.length, r.run, r.fidelity.as_f64())?;
    }
    Ok(())
}
