// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Filter functions and the coherence integral
//! `χ(τ) = (2/π) ∫₀^∞ S(ω)/ω² F(ω, τ) dω`, with `W = e^{-χ}`.
//!
//! Internally the time-domain filter is reduced to its jumps: `y(t)` steps
//! by `c_a` at time `t_a`, and `F = |Σ c_a e^{iωt_a}|²`. Since `Σ c_a = 0`,
//! `F/ω² = |Σ c_a (e^{iωt_a} - 1)/ω|²`, which stays finite and accurate down
//! to `ω = 0`.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::noise::{NoiseSpectrum, SpectrumShape};
use crate::pulse::PulseSequence;
use crate::quadrature::{breakpoints, integrate, Integral, QuadratureOptions};
use crate::scalar::{count, Real};

/// `4 sin²(x/2)` at `x = ωτ`.
pub fn ramsey_filter<T: Real>(x: T) -> T {
    let s = (x * T::lit(0.5)).sin();
    T::lit(4.0) * s * s
}

/// Closed-form filter of a pulse sequence with finite pulse width:
/// `|1 + (-1)^{n+1} e^{iωτ} + 2 Σ_j (-1)^j e^{iδ_j ωτ} cos(ωτ_π/2)|²`.
pub fn dd_filter<T: Real>(seq: &PulseSequence<T>, tau: T, omega: T) -> Result<T> {
    seq.check_fits(tau)?;
    let x = omega * tau;
    let n = seq.n();
    let end_sign = if n % 2 == 0 { -T::one() } else { T::one() };
    let mut z = Complex::new(T::one(), T::zero()) + Complex::from_polar(end_sign, x);
    let c = T::lit(2.0) * (omega * seq.pulse_width() * T::lit(0.5)).cos();
    for (j, &d) in seq.positions().iter().enumerate() {
        let sign = if j % 2 == 0 { -c } else { c };
        z = z + Complex::from_polar(sign, d * x);
    }
    Ok(z.norm_sqr())
}

/// Jump representation of `y(t)` at a fixed duration.
#[derive(Debug, Clone, PartialEq)]
pub struct Impulses<T> {
    duration: T,
    times: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Impulses<T> {
    pub fn new(seq: &PulseSequence<T>, tau: T) -> Result<Self> {
        seq.check_fits(tau)?;
        let n = seq.n();
        let w = seq.pulse_width();
        let half = w * T::lit(0.5);
        let mut times = vec![T::zero()];
        let mut weights = vec![T::one()];
        for (j, &d) in seq.positions().iter().enumerate() {
            // y goes +1 → 0 → -1 across an odd-numbered pulse
            let sign = if j % 2 == 0 { -T::one() } else { T::one() };
            let center = d * tau;
            if w > T::zero() {
                times.push(center - half);
                weights.push(sign);
                times.push(center + half);
                weights.push(sign);
            } else {
                times.push(center);
                weights.push(sign * T::lit(2.0));
            }
        }
        times.push(tau);
        weights.push(if n % 2 == 0 { -T::one() } else { T::one() });
        Ok(Impulses {
            duration: tau,
            times,
            weights,
        })
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    pub fn jumps(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.times.iter().copied().zip(self.weights.iter().copied())
    }

    /// `F(ω)`.
    pub fn filter(&self, omega: T) -> T {
        let z: Complex<T> = self
            .jumps()
            .map(|(t, c)| Complex::from_polar(c, omega * t))
            .sum();
        z.norm_sqr()
    }

    /// `F(ω)/ω²`, finite at `ω = 0`.
    pub fn filter_over_omega2(&self, omega: T) -> T {
        let small = T::lit(1e-4);
        let (mut re, mut im) = (T::zero(), T::zero());
        for (t, c) in self.jumps() {
            if t == T::zero() {
                continue;
            }
            let x = omega * t;
            let (a, b) = if x.abs() < small {
                let x2 = x * x;
                (
                    -x * T::lit(0.5) * (T::one() - x2 / T::lit(12.0)),
                    T::one() - x2 / T::lit(6.0) * (T::one() - x2 / T::lit(20.0)),
                )
            } else {
                let (s, co) = (x * T::lit(0.5)).sin_cos();
                (-T::lit(2.0) * s * s / x, T::lit(2.0) * s * co / x)
            };
            re += c * t * a;
            im += c * t * b;
        }
        re * re + im * im
    }

    /// Lowest power `m` with `F/ω² ~ ω^{2m}` as `ω → 0`.
    pub fn zero_order(&self) -> usize {
        let scale: T = self.weights.iter().map(|c| c.abs()).sum();
        let tol = T::lit(1e-9) * scale;
        let s: Vec<T> = self.times.iter().map(|t| *t / self.duration).collect();
        let mut pow: Vec<T> = s.clone();
        for k in 1..=2 * self.times.len() {
            let moment: T = pow.iter().zip(&self.weights).map(|(p, c)| *p * *c).sum();
            if moment.abs() > tol {
                return k - 1;
            }
            for (p, x) in pow.iter_mut().zip(&s) {
                *p *= *x;
            }
        }
        2 * self.times.len()
    }

    /// `F(ω) = A_0 + Σ_d A_d cos(ω d)` as `(d, A_d)` with `d = 0` first.
    pub fn lags(&self) -> Vec<(T, T)> {
        let a0: T = self.weights.iter().map(|c| *c * *c).sum();
        let mut pairs = Vec::new();
        for a in 0..self.times.len() {
            for b in a + 1..self.times.len() {
                let d = (self.times[b] - self.times[a]).abs();
                pairs.push((d, T::lit(2.0) * self.weights[a] * self.weights[b]));
            }
        }
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        let tol = T::lit(1e-12) * self.duration;
        let mut merged: Vec<(T, T)> = vec![(T::zero(), a0)];
        for (d, amp) in pairs {
            let last = merged.last_mut().expect("non-empty");
            if (d - last.0).abs() <= tol {
                last.1 += amp;
            } else {
                merged.push((d, amp));
            }
        }
        merged.retain(|(d, a)| *d == T::zero() || *a != T::zero());
        merged
    }
}

/// `F(ω)` for a sequence at duration `tau`.
pub fn filter_function<T: Real>(seq: &PulseSequence<T>, tau: T, omega: T) -> Result<T> {
    Ok(Impulses::new(seq, tau)?.filter(omega))
}

/// `F` sampled on a frequency grid.
pub fn filter_on_grid<T: Real>(seq: &PulseSequence<T>, tau: T, omegas: &[T]) -> Result<Vec<T>> {
    let imp = Impulses::new(seq, tau)?;
    Ok(omegas.iter().map(|&w| imp.filter(w)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiOptions {
    pub quadrature: QuadratureOptions,
    /// Number of `2π/τ` periods integrated numerically before the
    /// asymptotic tail takes over.
    pub periods: usize,
}

impl Default for ChiOptions {
    fn default() -> Self {
        ChiOptions {
            quadrature: QuadratureOptions::default(),
            periods: 64,
        }
    }
}

/// `q` with `S ~ ω^q` near zero; `None` when `S` vanishes near zero.
fn low_frequency_exponent<T: Real>(spec: &NoiseSpectrum<T>) -> Option<T> {
    match &spec.shape {
        SpectrumShape::AmbientPowerLaw {
            exponent,
            low_cutoff,
            ..
        } => Some(if *low_cutoff > T::zero() {
            T::zero()
        } else {
            -*exponent
        }),
        SpectrumShape::OhmicSharpCutoff { .. } => Some(T::one()),
        SpectrumShape::White => Some(T::zero()),
        SpectrumShape::Tabulated { points } => {
            let (w0, s0) = points[0];
            if w0 > T::zero() {
                None
            } else if s0 > T::zero() {
                Some(T::zero())
            } else {
                Some(T::one())
            }
        }
    }
}

const ASYMPTOTIC_PHASE: f64 = 50.0;

/// `∫_Ω^∞ g(ω) cos(ωd) dω` from three terms of the integration-by-parts
/// expansion, valid for `Ωd ≫ 1` and smooth `g`.
fn oscillatory_tail<T: Real>(g: [T; 3], omega: T, d: T) -> T {
    let (s, c) = (omega * d).sin_cos();
    -g[0] * s / d - g[1] * c / (d * d) + g[2] * s / (d * d * d)
}

fn derivatives<T: Real>(g: &impl Fn(T) -> T, omega: T) -> [T; 3] {
    let h = omega * T::lit(1e-3);
    let (gm, g0, gp) = (g(omega - h), g(omega), g(omega + h));
    [
        g0,
        (gp - gm) / (T::lit(2.0) * h),
        (gp - T::lit(2.0) * g0 + gm) / (h * h),
    ]
}

/// Absolute tolerance on `χ` relative to [`unfiltered_scale`].
const SCALE_ABS_TOL: f64 = 1e-14;

/// `∫ S min(τ², 4/ω²) dω`, the size of the integral before any cancellation
/// between pulses.
fn unfiltered_scale<T: Real>(tau: T, spec: &NoiseSpectrum<T>, breaks: &[T], quad: &QuadratureOptions) -> T {
    let loose = QuadratureOptions {
        rel_tol: 1e-2,
        abs_tol: 0.0,
        ..*quad
    };
    let two = T::lit(2.0);
    integrate(
        |w| {
            let m = if w * tau < two { tau } else { two / w };
            spec.density(w) * m * m
        },
        breaks,
        &loose,
    )
    .value
}

/// Coherence integral with its quadrature error estimate.
pub fn chi_integral<T: Real>(
    seq: &PulseSequence<T>,
    tau: T,
    spec: &NoiseSpectrum<T>,
    opts: &ChiOptions,
) -> Result<Integral<T>> {
    spec.validate()?;
    let imp = Impulses::new(seq, tau)?;
    if spec.is_zero() {
        return Ok(Integral {
            value: T::zero(),
            error: T::zero(),
            evaluations: 0,
            converged: true,
        });
    }
    let m = imp.zero_order();
    if let Some(q) = low_frequency_exponent(spec) {
        if count::<T>(2 * m) + q <= -T::one() {
            return Err(Error::DivergentIntegrand {
                reason: format!(
                    "S ~ ω^{:.3} against F/ω² ~ ω^{} near zero",
                    q.as_f64(),
                    2 * m
                ),
            });
        }
    }

    let period = T::TAU() / tau;
    let (omega_max, unbounded) = match spec.support_end() {
        Some(end) => (end, false),
        None => (
            (spec.smooth_beyond() * T::lit(8.0)).max(period * count(opts.periods)),
            true,
        ),
    };
    let panels = (omega_max / period).to_usize().unwrap_or(usize::MAX).min(4096);
    let breaks = breakpoints(
        T::zero(),
        omega_max,
        spec.features()
            .into_iter()
            .chain((1..=panels).map(|k| period * count(k))),
    );
    // deep cancellation in F leaves values far below anything observable;
    // resolve those to an absolute accuracy set by the free-evolution scale
    let floor = match low_frequency_exponent(spec) {
        // the free-evolution integral diverges; keep the caller's tolerance
        Some(q) if q <= -T::one() => 0.0,
        _ => unfiltered_scale(tau, spec, &breaks, &opts.quadrature).as_f64() * SCALE_ABS_TOL,
    };
    let floor = if floor.is_finite() { floor } else { 0.0 };
    let quad = QuadratureOptions {
        abs_tol: opts.quadrature.abs_tol.max(floor),
        ..opts.quadrature
    };
    let main = integrate(|w| spec.density(w) * imp.filter_over_omega2(w), &breaks, &quad);
    if !main.converged {
        return Err(Error::NonConvergent {
            estimate: (main.value * T::FRAC_2_PI()).as_f64(),
            error: (main.error * T::FRAC_2_PI()).as_f64(),
        });
    }
    let mut value = main.value;
    let mut error = main.error;
    let mut evaluations = main.evaluations;

    if unbounded {
        let g = |w: T| spec.density(w) / (w * w);
        let tail_opts = QuadratureOptions {
            rel_tol: opts.quadrature.rel_tol.min(1e-8),
            ..opts.quadrature
        };
        let lags = imp.lags();
        // ∫_Ω^∞ S/ω² dω = ∫_0^{1/Ω} S(1/u) du
        let flat = integrate(
            |u: T| {
                if u == T::zero() {
                    T::zero()
                } else {
                    let s = spec.density(T::one() / u);
                    if s.is_finite() {
                        s
                    } else {
                        T::zero()
                    }
                }
            },
            &[T::zero(), T::one() / omega_max],
            &tail_opts,
        );
        value += lags[0].1 * flat.value;
        error += lags[0].1.abs() * flat.error;
        evaluations += flat.evaluations;

        let g_max = derivatives(&g, omega_max);
        let phase = T::lit(ASYMPTOTIC_PHASE);
        for &(d, amp) in &lags[1..] {
            let start = phase / d;
            if start <= omega_max {
                value += amp * oscillatory_tail(g_max, omega_max, d);
                continue;
            }
            // slow lag: integrate numerically out to where the expansion holds
            let mut br = vec![omega_max];
            let mut w = omega_max;
            while w < start {
                w = (w * T::lit(2.0)).min(start);
                br.push(w);
            }
            let k0 = (omega_max * d / T::TAU()).ceil().to_usize().unwrap_or(0);
            let k1 = (start * d / T::TAU()).floor().to_usize().unwrap_or(0);
            let br = breakpoints(
                omega_max,
                start,
                br.into_iter()
                    .chain((k0..=k1).map(|k| T::TAU() * count(k) / d)),
            );
            let near = integrate(|w| g(w) * (w * d).cos(), &br, &tail_opts);
            value += amp * near.value;
            error += amp.abs() * near.error;
            evaluations += near.evaluations;
            value += amp * oscillatory_tail(derivatives(&g, start), start, d);
        }
    }
    let scale = T::FRAC_2_PI();
    Ok(Integral {
        value: (value * scale).max(T::zero()),
        error: error * scale,
        evaluations,
        converged: true,
    })
}

/// `χ(τ)` for `seq` under `spec`.
pub fn chi<T: Real>(
    seq: &PulseSequence<T>,
    tau: T,
    spec: &NoiseSpectrum<T>,
    opts: &ChiOptions,
) -> Result<T> {
    chi_integral(seq, tau, spec, opts).map(|r| r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMethod {
    Analytic,
    MonteCarlo,
}

impl CurveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveMethod::Analytic => "analytic",
            CurveMethod::MonteCarlo => "montecarlo",
        }
    }
}

/// `χ` and `W` on a grid of durations.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceCurve<T> {
    pub tau: Vec<T>,
    pub chi: Vec<T>,
    pub w: Vec<T>,
    pub uncertainty: Option<Vec<T>>,
    pub method: CurveMethod,
}

impl<T: Real> CoherenceCurve<T> {
    /// `(1 - W)/2`, the excited-state fraction after the final analysis pulse.
    pub fn plotted(&self) -> Vec<T> {
        self.w
            .iter()
            .map(|w| (T::one() - *w) * T::lit(0.5))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Duration at which `W` first falls to `1/e`, interpolated linearly.
    pub fn coherence_time(&self) -> Result<T> {
        coherence_time(&self.tau, &self.w)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# method={}", self.method.as_str())?;
        writeln!(out, "tau,chi,W,half_one_minus_W,uncertainty")?;
        let half = self.plotted();
        for i in 0..self.len() {
            let u = self
                .uncertainty
                .as_ref()
                .map(|u| format!("{:e}", u[i].as_f64()))
                .unwrap_or_default();
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{}",
                self.tau[i].as_f64(),
                self.chi[i].as_f64(),
                self.w[i].as_f64(),
                half[i].as_f64(),
                u
            )?;
        }
        Ok(())
    }
}

/// First `1/e` crossing of `w` sampled at `tau`.
pub fn coherence_time<T: Real>(tau: &[T], w: &[T]) -> Result<T> {
    let target = (-T::one()).exp();
    for i in 1..tau.len().min(w.len()) {
        let (w0, w1) = (w[i - 1], w[i]);
        if w0 > target && w1 <= target {
            let f = (w0 - target) / (w0 - w1);
            return Ok(tau[i - 1] + f * (tau[i] - tau[i - 1]));
        }
    }
    Err(Error::NoCrossing)
}

pub(crate) fn check_grid<T: Real>(taus: &[T]) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::invalid("tau", "grid is empty"));
    }
    for (i, t) in taus.iter().enumerate() {
        if !(*t > T::zero()) || !t.is_finite() {
            return Err(Error::invalid("tau", "durations must be positive and finite"));
        }
        if i > 0 && !(*t > taus[i - 1]) {
            return Err(Error::invalid("tau", "grid must be strictly ascending"));
        }
    }
    Ok(())
}

/// Analytic coherence curve. Grid points are evaluated in parallel; the
/// result does not depend on scheduling.
pub fn coherence_curve<T: Real>(
    seq: &PulseSequence<T>,
    taus: &[T],
    spec: &NoiseSpectrum<T>,
    opts: &ChiOptions,
) -> Result<CoherenceCurve<T>> {
    check_grid(taus)?;
    spec.validate()?;
    let chi: Vec<T> = taus
        .par_iter()
        .map(|&t| chi(seq, t, spec, opts))
        .collect::<Result<_>>()?;
    let w = chi.iter().map(|c| (-*c).exp()).collect();
    Ok(CoherenceCurve {
        tau: taus.to_vec(),
        chi,
        w,
        uncertainty: None,
        method: CurveMethod::Analytic,
    })
}

/// `ω, F` table for plotting.
pub fn write_filter_csv<T: Real, W: Write>(
    mut out: W,
    seq: &PulseSequence<T>,
    tau: T,
    omegas: &[T],
) -> Result<()> {
    let f = filter_on_grid(seq, tau, omegas)?;
    let io = |e: std::io::Error| Error::invalid("output", e.to_string());
    writeln!(out, "omega,F").map_err(io)?;
    for (w, v) in omegas.iter().zip(f) {
        writeln!(out, "{:e},{:e}", w.as_f64(), v.as_f64()).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gk21;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    /// `ω² |∫ y(t) e^{iωt} dt|²` by direct quadrature of the piecewise filter.
    fn transform_oracle(seq: &PulseSequence<f64>, tau: f64, omega: f64) -> f64 {
        let y = seq.time_domain_filter(tau).unwrap();
        let (mut re, mut im) = (0.0, 0.0);
        for &(a, b, v) in &y.pieces {
            if v == 0.0 || b <= a {
                continue;
            }
            let k = ((omega * (b - a)).ceil() as usize).max(1);
            let h = (b - a) / k as f64;
            for i in 0..k {
                let (lo, hi) = (a + h * i as f64, a + h * (i + 1) as f64);
                re += v * gk21(&mut |t: f64| (omega * t).cos(), lo, hi).0;
                im += v * gk21(&mut |t: f64| (omega * t).sin(), lo, hi).0;
            }
        }
        omega * omega * (re * re + im * im)
    }

    fn random_sequence(rng: &mut ChaCha8Rng, tau: f64) -> PulseSequence<f64> {
        let n = rng.random_range(0..10);
        let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.98)).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut gap = 2.0 * d.first().map_or(1.0, |x| x.min(1.0 - d[d.len() - 1]));
        for w in d.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        let width = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.9) * gap * tau };
        PulseSequence::custom(d, width).unwrap()
    }

    #[test]
    fn ramsey_filter_values() {
        assert_eq!(ramsey_filter(0.0), 0.0);
        assert!((ramsey_filter(PI) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn ramsey_matches_dd_with_no_pulses() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = PulseSequence::ramsey();
        for _ in 0..10_000 {
            let x: f64 = rng.random_range(0.0..200.0);
            let f = dd_filter(&seq, 1.0, x).unwrap();
            assert!((f - ramsey_filter(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn hahn_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let seq = PulseSequence::cpmg(1).unwrap();
        let tau = 3e-3;
        for _ in 0..10_000 {
            let w: f64 = rng.random_range(0.0..1e5);
            let expect = 16.0 * (w * tau / 4.0).sin().powi(4);
            assert!((dd_filter(&seq, tau, w).unwrap() - expect).abs() < 1e-11);
            assert!((filter_function(&seq, tau, w).unwrap() - expect).abs() < 1e-11);
        }
    }

    #[test]
    fn single_precision_chi() {
        let opts = ChiOptions::default();
        let white = NoiseSpectrum::<f32>::white(200.0).unwrap();
        let c = chi(&PulseSequence::<f32>::ramsey(), 1e-3, &white, &opts).unwrap();
        assert!((c - 0.4).abs() < 1e-5, "{c}");
        let ohmic64 = NoiseSpectrum::<f64>::ohmic(1.0, TAU * 500.0).unwrap();
        let ohmic32 = NoiseSpectrum::<f32>::ohmic(1.0, (TAU * 500.0) as f32).unwrap();
        let c64 = chi(&PulseSequence::<f64>::udd(4).unwrap(), 2e-3, &ohmic64, &opts).unwrap();
        let c32 = chi(&PulseSequence::<f32>::udd(4).unwrap(), 2e-3, &ohmic32, &opts).unwrap();
        assert!(((c32 as f64) / c64 - 1.0).abs() < 1e-4, "{c32} {c64}");
    }

    #[test]
    fn zero_frequency_is_zero() {
        for seq in [
            PulseSequence::<f64>::cpmg(3).unwrap().with_pulse_width(1e-4).unwrap(),
            PulseSequence::udd(4).unwrap(),
            PulseSequence::ramsey(),
        ] {
            assert!(dd_filter(&seq, 1e-2, 0.0).unwrap().abs() < 1e-24);
            assert!(filter_function(&seq, 1e-2, 0.0).unwrap().abs() < 1e-24);
        }
    }

    #[test]
    fn closed_form_matches_transform_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let tau = rng.random_range(1e-4..1e-1);
            let seq = random_sequence(&mut rng, tau);
            let fmax = (2 * seq.n() + 2).pow(2) as f64;
            for k in 1..=200 {
                let w = k as f64 * 0.37 * TAU / tau;
                let oracle = transform_oracle(&seq, tau, w);
                let eq = dd_filter(&seq, tau, w).unwrap();
                let imp = filter_function(&seq, tau, w).unwrap();
                let floor = 1e-6 * fmax;
                assert!((eq - oracle).abs() <= 1e-8 * oracle.max(floor), "{eq} vs {oracle}");
                assert!((imp - oracle).abs() <= 1e-8 * oracle.max(floor));
            }
        }
    }

    #[test]
    fn stable_ratio_matches_direct() {
        let seq = PulseSequence::udd(5).unwrap().with_pulse_width(2e-5).unwrap();
        let imp = Impulses::new(&seq, 1e-3).unwrap();
        for k in 1..500 {
            let w = k as f64 * 97.0;
            let direct = imp.filter(w) / (w * w);
            let stable = imp.filter_over_omega2(w);
            assert!((direct - stable).abs() <= 1e-9 * direct.max(1e-14), "w = {w}");
        }
    }

    #[test]
    fn zero_orders() {
        let ord = |s: PulseSequence<f64>| Impulses::new(&s, 1.0).unwrap().zero_order();
        assert_eq!(ord(PulseSequence::ramsey()), 0);
        assert_eq!(ord(PulseSequence::cpmg(1).unwrap()), 1);
        assert_eq!(ord(PulseSequence::udd(3).unwrap()), 3);
        assert_eq!(ord(PulseSequence::udd(6).unwrap()), 6);
    }

    #[test]
    fn lag_expansion_reproduces_filter() {
        let seq = PulseSequence::cpmg(3).unwrap().with_pulse_width(1e-4).unwrap();
        let imp = Impulses::new(&seq, 2e-3).unwrap();
        let lags = imp.lags();
        for k in 0..100 {
            let w = k as f64 * 311.0;
            let f: f64 = lags.iter().map(|(d, a)| a * (w * d).cos()).sum();
            assert!((f - imp.filter(w)).abs() < 1e-10);
        }
    }

    #[test]
    fn white_ramsey_chi() {
        let opts = ChiOptions::default();
        for &(s0, tau) in &[(1.0_f64, 1.0), (250.0, 2e-3), (3e3, 1e-4)] {
            let spec = NoiseSpectrum::white(s0).unwrap();
            let c = chi(&PulseSequence::ramsey(), tau, &spec, &opts).unwrap();
            let expect = 2.0 * s0 * tau;
            assert!((c / expect - 1.0).abs() < 1e-6, "{c} vs {expect}");
        }
    }

    #[test]
    fn white_echo_matches_ramsey() {
        // for white noise every sequence without dead time dephases alike
        let spec = NoiseSpectrum::white(10.0_f64).unwrap();
        let opts = ChiOptions::default();
        for seq in [PulseSequence::cpmg(1).unwrap(), PulseSequence::udd(7).unwrap()] {
            let c = chi(&seq, 0.05, &spec, &opts).unwrap();
            assert!((c / 1.0 - 1.0).abs() < 1e-6, "{c}");
        }
    }

    #[test]
    fn white_with_pulse_width_removes_dead_time() {
        let spec = NoiseSpectrum::white(10.0_f64).unwrap();
        let seq = PulseSequence::cpmg(4).unwrap().with_pulse_width(1e-3).unwrap();
        let c = chi(&seq, 0.05, &spec, &ChiOptions::default()).unwrap();
        let expect = 2.0 * 10.0 * (0.05 - 4e-3);
        assert!((c / expect - 1.0).abs() < 1e-6, "{c} vs {expect}");
    }

    #[test]
    fn zero_spectrum_gives_unit_coherence() {
        let spec = NoiseSpectrum::ambient(0.0, 4.0, TAU * 30.0).unwrap();
        let curve = coherence_curve(
            &PulseSequence::cpmg(2).unwrap(),
            &[1e-3, 2e-3],
            &spec,
            &ChiOptions::default(),
        )
        .unwrap();
        assert_eq!(curve.w, vec![1.0, 1.0]);
    }

    #[test]
    fn ohmic_chi_matches_direct_sum() {
        // bounded support: compare with a brute-force midpoint sum
        let spec = NoiseSpectrum::ohmic(2.0, TAU * 500.0).unwrap();
        let seq = PulseSequence::cpmg(2).unwrap().with_pulse_width(5e-5).unwrap();
        let tau = 4e-3;
        let c = chi(&seq, tau, &spec, &ChiOptions::default()).unwrap();
        let imp = Impulses::new(&seq, tau).unwrap();
        let n = 2_000_000;
        let h = TAU * 500.0 / n as f64;
        let sum: f64 = (0..n)
            .map(|k| {
                let w = (k as f64 + 0.5) * h;
                2.0 * w * imp.filter(w) / (w * w)
            })
            .sum::<f64>()
            * h
            * 2.0
            / PI;
        assert!((c / sum - 1.0).abs() < 1e-6, "{c} vs {sum}");
    }

    #[test]
    fn ambient_tail_is_consistent() {
        // widening the numerical range must not move the answer
        let spec = NoiseSpectrum::ambient(1e9, 4.0, TAU * 30.0).unwrap();
        let seq = PulseSequence::udd(3).unwrap().with_pulse_width(1.85e-4).unwrap();
        let a = chi(&seq, 2e-3, &spec, &ChiOptions::default()).unwrap();
        let wide = ChiOptions {
            periods: 2048,
            quadrature: QuadratureOptions {
                rel_tol: 1e-10,
                max_panels: 200_000,
                ..Default::default()
            },
        };
        let b = chi(&seq, 2e-3, &spec, &wide).unwrap();
        assert!((a / b - 1.0).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn white_tail_with_short_lags() {
        let spec = NoiseSpectrum::white(5.0_f64).unwrap();
        let seq = PulseSequence::cpmg(2).unwrap().with_pulse_width(1e-6).unwrap();
        let c = chi(&seq, 0.1, &spec, &ChiOptions::default()).unwrap();
        let expect = 2.0 * 5.0 * (0.1 - 2e-6);
        assert!((c / expect - 1.0).abs() < 1e-6, "{c} vs {expect}");
    }

    #[test]
    fn udd_beats_cpmg_for_ohmic() {
        let spec = NoiseSpectrum::ohmic(1.0, TAU * 500.0).unwrap();
        let opts = ChiOptions::default();
        let udd = PulseSequence::udd(6).unwrap();
        let cpmg = PulseSequence::cpmg(6).unwrap();
        for &tau in &[2e-4, 5e-4, 1e-3] {
            let u = chi(&udd, tau, &spec, &opts).unwrap();
            let c = chi(&cpmg, tau, &spec, &opts).unwrap();
            assert!(u < c, "tau = {tau}: {u} vs {c}");
        }
    }

    #[test]
    fn singular_spectrum_is_rejected() {
        let spec = NoiseSpectrum::ambient(1.0, 1.5, 0.0).unwrap();
        assert!(matches!(
            chi(&PulseSequence::ramsey(), 1e-3, &spec, &ChiOptions::default()),
            Err(Error::DivergentIntegrand { .. })
        ));
        // the echo suppresses low frequencies enough
        assert!(chi(&PulseSequence::cpmg(1).unwrap(), 1e-3, &spec, &ChiOptions::default()).is_ok());
    }

    #[test]
    fn coherence_time_interpolates() {
        let t2 = 2.4e-3;
        let tau: Vec<f64> = (1..2000).map(|k| k as f64 * 5e-6).collect();
        let w: Vec<f64> = tau.iter().map(|t| (-t / t2).exp()).collect();
        let got = coherence_time(&tau, &w).unwrap();
        assert!((got - t2).abs() < 5e-6);
        let flat = vec![0.9; tau.len()];
        assert_eq!(coherence_time(&tau, &flat), Err(Error::NoCrossing));
    }

    #[test]
    fn cpmg_extends_coherence_under_ambient_noise() {
        let spec = NoiseSpectrum::ambient(1.4e12, 4.0, TAU * 30.0).unwrap();
        let opts = ChiOptions::default();
        let taus: Vec<f64> = (0..400).map(|k| 1e-4 * 10f64.powf(k as f64 / 100.0)).collect();
        let mut last = 0.0;
        for n in [1, 2, 4, 8] {
            let curve = coherence_curve(&PulseSequence::cpmg(n).unwrap(), &taus, &spec, &opts).unwrap();
            let t = curve.coherence_time().unwrap();
            assert!(t >= last, "n = {n}: {t} < {last}");
            if n == 1 {
                assert!(t > 2e-3);
            }
            last = t;
        }
    }

    #[test]
    fn curve_is_order_independent() {
        let spec = NoiseSpectrum::ohmic(3.0, TAU * 200.0).unwrap();
        let seq = PulseSequence::udd(4).unwrap();
        let taus: Vec<f64> = (1..40).map(|k| k as f64 * 1e-3).collect();
        let a = coherence_curve(&seq, &taus, &spec, &ChiOptions::default()).unwrap();
        let single: Vec<f64> = taus
            .iter()
            .map(|&t| chi(&seq, t, &spec, &ChiOptions::default()).unwrap())
            .collect();
        assert_eq!(a.chi, single);
        for (c, w) in a.chi.iter().zip(&a.w) {
            assert!((w - (-c).exp()).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn filter_is_nonnegative_and_vanishes_at_zero(seed in 0u64..10_000, w in 0.0f64..1e6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tau = rng.random_range(1e-4..1e-1);
            let seq = random_sequence(&mut rng, tau);
            prop_assert!(dd_filter(&seq, tau, w).unwrap() >= 0.0);
            prop_assert!(dd_filter(&seq, tau, 0.0).unwrap().abs() < 1e-20);
            prop_assert!(filter_function(&seq, tau, 0.0).unwrap().abs() < 1e-20);
        }

        #[test]
        fn chi_is_linear_in_strength(seed in 0u64..10_000, scale in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tau = rng.random_range(1e-3..1e-2);
            let seq = random_sequence(&mut rng, tau);
            let spec = NoiseSpectrum::ohmic(1.0, TAU * 300.0).unwrap();
            let opts = ChiOptions::default();
            let a = chi(&seq, tau, &spec, &opts).unwrap();
            let b = chi(&seq, tau, &spec.with_strength(scale), &opts).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((b - scale * a).abs() <= 1e-12 * (scale * a).max(1e-300));
        }
    }
}
