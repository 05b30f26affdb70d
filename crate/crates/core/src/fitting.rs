// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Data reductions: Rabi lineshape fits, noise-strength calibration from
//! Ramsey decay, exponential and Gaussian decay fits, fluorescence
//! normalization and sinusoid fits.
//!
//! Single-parameter fits scan a coarse grid, refine by golden section and
//! polish with Gauss-Newton steps. Multi-parameter decay fits start from a
//! grid over the time constant with the linear parameters solved exactly,
//! then run Levenberg-Marquardt.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{chi, ChiOptions};
use crate::minimize::{invert, scan_golden, solve};
use crate::noise::io::{io_error, parse_field};
use crate::noise::NoiseSpectrum;
use crate::pulse::PulseSequence;
use crate::scalar::{count, Real};

/// RMS residual above which a lineshape fit is reported as poor.
pub const DEFAULT_MAX_RMS: f64 = 0.1;

/// Points `(x, y)` with optional one-sigma errors on `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XyData<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub sigma: Option<Vec<T>>,
}

impl<T: Real> XyData<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        let d = XyData { x, y, sigma: None };
        d.validate()?;
        Ok(d)
    }

    pub fn with_sigma(mut self, sigma: Vec<T>) -> Result<Self> {
        self.sigma = Some(sigma);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() {
            return Err(Error::invalid("data", "x and y differ in length"));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("data", "values must be finite"));
        }
        if let Some(s) = &self.sigma {
            if s.len() != self.x.len() {
                return Err(Error::invalid("sigma", "length differs from data"));
            }
            if s.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
                return Err(Error::invalid("sigma", "errors must be positive and finite"));
            }
        }
        Ok(())
    }

    fn weights(&self) -> Vec<T> {
        match &self.sigma {
            Some(s) => s.iter().map(|v| T::one() / (*v * *v)).collect(),
            None => vec![T::one(); self.len()],
        }
    }
}

/// Reads `x,y[,sigma]` rows. Comments start with `#`; a non-numeric first
/// row is taken as a header.
pub fn read_xy_csv<T: Real, R: BufRead>(reader: R) -> Result<XyData<T>> {
    let (mut x, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
    let mut columns = None;
    let mut first = true;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_error)?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if first && fields[0].trim().parse::<f64>().is_err() {
            first = false;
            continue;
        }
        first = false;
        if !(2..=3).contains(&fields.len()) || columns.is_some_and(|c| c != fields.len()) {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("expected a consistent 2 or 3 columns, found {}", fields.len()),
            });
        }
        columns = Some(fields.len());
        x.push(parse_field(fields[0], i + 1)?);
        y.push(parse_field(fields[1], i + 1)?);
        if fields.len() == 3 {
            s.push(parse_field(fields[2], i + 1)?);
        }
    }
    let data = XyData {
        x,
        y,
        sigma: (columns == Some(3)).then_some(s),
    };
    data.validate()?;
    Ok(data)
}

/// Driven-rotation lineshape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiModel<T> {
    /// Resonance, rad/s.
    pub omega0: T,
    /// π-pulse duration, s.
    pub tau_pi: T,
    /// Nominal rotation angle on resonance, rad.
    pub theta: T,
}

impl<T: Real> RabiModel<T> {
    pub fn new(omega0: T, tau_pi: T, theta: T) -> Result<Self> {
        if !(tau_pi > T::zero()) || !tau_pi.is_finite() {
            return Err(Error::invalid("tau_pi", "must be positive and finite"));
        }
        if !(theta > T::zero()) || !theta.is_finite() {
            return Err(Error::invalid("theta", "must be positive and finite"));
        }
        if !omega0.is_finite() {
            return Err(Error::invalid("omega0", "must be finite"));
        }
        Ok(RabiModel { omega0, tau_pi, theta })
    }

    fn detuning(&self, omega: T) -> T {
        (omega - self.omega0) * self.tau_pi / T::TAU()
    }
}

/// Bright-state population after a fixed-duration drive at `omega`.
pub fn rabi_lineshape<T: Real>(model: &RabiModel<T>, omega: T) -> T {
    let x = model.detuning(omega);
    let s2 = T::one() + x * x;
    let s = s2.sqrt();
    let sn = (model.theta * T::lit(0.5) * s).sin();
    T::one() - sn * sn / s2
}

/// `∂P/∂ω₀`.
fn lineshape_slope<T: Real>(model: &RabiModel<T>, omega: T) -> T {
    let x = model.detuning(omega);
    let s2 = T::one() + x * x;
    let s = s2.sqrt();
    let a = model.theta * T::lit(0.5);
    let (sn, cs) = (a * s).sin_cos();
    let d_dx = -(T::lit(2.0) * sn * cs * a * x / (s2 * s) - T::lit(2.0) * sn * sn * x / (s2 * s2));
    -d_dx * model.tau_pi / T::TAU()
}

/// One measured lineshape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineshapeData<T> {
    pub theta: T,
    pub omega: Vec<T>,
    pub p_up: Vec<T>,
    /// Ion-measurements averaged into each point; sets binomial weights.
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFit<T> {
    pub omega0: T,
    /// One-sigma uncertainty on `omega0`.
    pub ci: T,
    pub rms: T,
    pub reduced_chi2: T,
}

/// Fits the common resonance `ω₀` of one or more lineshapes with known
/// `τ_π` and rotation angles.
pub fn fit_resonance<T: Real>(sets: &[LineshapeData<T>], tau_pi: T, max_rms: T) -> Result<ResonanceFit<T>> {
    let mut points = Vec::new();
    for set in sets {
        RabiModel::new(T::zero(), tau_pi, set.theta)?;
        if set.omega.len() != set.p_up.len() {
            return Err(Error::invalid("data", "omega and p_up differ in length"));
        }
        if set.shots == Some(0) {
            return Err(Error::invalid("shots", "must be at least 1"));
        }
        for (w, p) in set.omega.iter().zip(&set.p_up) {
            let weight = match set.shots {
                Some(n) => {
                    let n = T::lit(n as f64);
                    let lo = T::lit(0.5) / n;
                    let q = p.max(lo).min(T::one() - lo);
                    n / (q * (T::one() - q))
                }
                None => T::one(),
            };
            points.push((*w, *p, weight, set.theta));
        }
    }
    if points.len() < 5 {
        return Err(Error::Degenerate {
            reason: format!("{} points; at least 5 are needed", points.len()),
        });
    }
    let weighted = sets.iter().all(|s| s.shots.is_some());
    let model = |w0: T, theta: T| RabiModel {
        omega0: w0,
        tau_pi,
        theta,
    };
    let chi2 = |w0: T| {
        points
            .iter()
            .map(|(w, p, wt, th)| *wt * (*p - rabi_lineshape(&model(w0, *th), *w)).powi(2))
            .sum::<T>()
    };
    let lo = points.iter().map(|p| p.0).fold(T::infinity(), T::min);
    let hi = points.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
    let step = T::TAU() / tau_pi / T::lit(40.0);
    let steps = ((hi - lo) / step).ceil().to_usize().unwrap_or(1).clamp(1, 100_000);
    let (mut w0, mut best, _) = scan_golden(&mut |w| chi2(w), lo, hi, steps, T::epsilon());

    // Gauss-Newton polish to full precision
    for _ in 0..30 {
        let (mut num, mut den) = (T::zero(), T::zero());
        for (w, p, wt, th) in &points {
            let m = model(w0, *th);
            let j = lineshape_slope(&m, *w);
            num += *wt * (*p - rabi_lineshape(&m, *w)) * j;
            den += *wt * j * j;
        }
        if !(den > T::zero()) {
            break;
        }
        let trial = w0 + num / den;
        let c = chi2(trial);
        if !(c <= best) {
            break;
        }
        let moved = (trial - w0).abs();
        w0 = trial;
        best = c;
        if moved <= T::epsilon() * w0.abs() {
            break;
        }
    }

    let n = count::<T>(points.len());
    let info: T = points
        .iter()
        .map(|(w, _, wt, th)| *wt * lineshape_slope(&model(w0, *th), *w).powi(2))
        .sum();
    let reduced = best / (n - T::one());
    let scale = if weighted { reduced.max(T::one()) } else { reduced };
    let ci = if info > T::zero() { (scale / info).sqrt() } else { T::infinity() };
    let rms = (points
        .iter()
        .map(|(w, p, _, th)| (*p - rabi_lineshape(&model(w0, *th), *w)).powi(2))
        .sum::<T>()
        / n)
        .sqrt();
    if rms > max_rms {
        return Err(Error::PoorFit {
            rms: rms.as_f64(),
            threshold: max_rms.as_f64(),
        });
    }
    Ok(ResonanceFit {
        omega0: w0,
        ci,
        rms,
        reduced_chi2: reduced,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit<T> {
    pub alpha: T,
    /// One-sigma uncertainty on `alpha`.
    pub ci: T,
    pub rms: T,
    pub reduced_chi2: T,
}

/// Noise strength reproducing the observed decay envelope.
///
/// `data.y` holds `(1 - W)/2` at durations `data.x`; `shape` supplies the
/// spectral shape, its own strength is ignored.
pub fn calibrate_alpha<T: Real>(
    data: &XyData<T>,
    shape: &NoiseSpectrum<T>,
    seq: &PulseSequence<T>,
    opts: &ChiOptions,
) -> Result<AlphaFit<T>> {
    data.validate()?;
    if data.len() < 2 {
        return Err(Error::Degenerate {
            reason: "at least two points are needed".into(),
        });
    }
    let min_contrast = data
        .y
        .iter()
        .map(|y| T::one() - T::lit(2.0) * *y)
        .fold(T::infinity(), T::min);
    if min_contrast >= T::lit(0.9) {
        return Err(Error::Degenerate {
            reason: format!("contrast never falls below 0.9 (minimum {:.4})", min_contrast.as_f64()),
        });
    }
    let unit = shape.with_strength(T::one());
    let chi1: Vec<T> = data
        .x
        .iter()
        .map(|t| chi(seq, *t, &unit, opts))
        .collect::<Result<_>>()?;
    let mut positive: Vec<T> = chi1.iter().copied().filter(|c| *c > T::zero()).collect();
    if positive.is_empty() {
        return Err(Error::Degenerate {
            reason: "the spectral shape produces no dephasing".into(),
        });
    }
    positive.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let u0 = -positive[positive.len() / 2].ln();
    let w = data.weights();
    let model = |a: T, c: T| (T::one() - (-a * c).exp()) * T::lit(0.5);
    let cost = |a: T| {
        (0..data.len())
            .map(|i| w[i] * (data.y[i] - model(a, chi1[i])).powi(2))
            .sum::<T>()
    };
    let span = T::lit(12.0);
    let (u, mut best, _) = scan_golden(&mut |u: T| cost(u.exp()), u0 - span, u0 + span, 960, T::lit(1e-12));
    let mut alpha = u.exp();
    for _ in 0..30 {
        let (mut num, mut den) = (T::zero(), T::zero());
        for i in 0..data.len() {
            let j = T::lit(0.5) * chi1[i] * (-alpha * chi1[i]).exp();
            num += w[i] * (data.y[i] - model(alpha, chi1[i])) * j;
            den += w[i] * j * j;
        }
        if !(den > T::zero()) {
            break;
        }
        let trial = (alpha + num / den).max(T::zero());
        let c = cost(trial);
        if !(c <= best) {
            break;
        }
        let moved = (trial - alpha).abs();
        alpha = trial;
        best = c;
        if moved <= T::epsilon() * alpha {
            break;
        }
    }
    let n = count::<T>(data.len());
    let info: T = (0..data.len())
        .map(|i| w[i] * (T::lit(0.5) * chi1[i] * (-alpha * chi1[i]).exp()).powi(2))
        .sum();
    let reduced = best / (n - T::one());
    let scale = if data.sigma.is_some() { reduced.max(T::one()) } else { reduced };
    let rms = ((0..data.len())
        .map(|i| (data.y[i] - model(alpha, chi1[i])).powi(2))
        .sum::<T>()
        / n)
        .sqrt();
    Ok(AlphaFit {
        alpha,
        ci: if info > T::zero() { (scale / info).sqrt() } else { T::infinity() },
        rms,
        reduced_chi2: reduced,
    })
}

/// Strength for which `seq` under `shape` reaches `W = 1/e` at duration `t`.
pub fn alpha_for_coherence_time<T: Real>(
    shape: &NoiseSpectrum<T>,
    seq: &PulseSequence<T>,
    t: T,
    opts: &ChiOptions,
) -> Result<T> {
    let c = chi(seq, t, &shape.with_strength(T::one()), opts)?;
    if !(c > T::zero()) {
        return Err(Error::Degenerate {
            reason: "the spectral shape produces no dephasing".into(),
        });
    }
    Ok(T::one() / c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `A e^{-t/T} + c`
    Exponential,
    /// `A e^{-(t/T)²} + c`
    Gaussian,
}

impl DecayModel {
    fn envelope<T: Real>(self, t: T, time: T) -> T {
        let x = t / time;
        match self {
            DecayModel::Exponential => (-x).exp(),
            DecayModel::Gaussian => (-x * x).exp(),
        }
    }

    /// `∂ ln(envelope) / ∂ ln T`.
    fn log_slope<T: Real>(self, t: T, time: T) -> T {
        let x = t / time;
        match self {
            DecayModel::Exponential => x,
            DecayModel::Gaussian => T::lit(2.0) * x * x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit<T> {
    pub model: DecayModel,
    pub amplitude: T,
    pub time_constant: T,
    pub offset: T,
    /// One-sigma uncertainties of amplitude, time constant and offset; the
    /// offset entry is zero when it was held fixed.
    pub ci: [T; 3],
    pub rms: T,
    pub reduced_chi2: T,
    /// Wald-Wolfowitz runs statistic of the residual signs. Values well
    /// below zero mean the residuals are structured.
    pub runs_z: T,
}

/// Runs-test z score of the signs of `r` (zeros skipped).
pub fn runs_z<T: Real>(r: &[T]) -> T {
    let signs: Vec<bool> = r.iter().filter(|v| **v != T::zero()).map(|v| *v > T::zero()).collect();
    let n1 = signs.iter().filter(|s| **s).count();
    let n2 = signs.len() - n1;
    if n1 == 0 || n2 == 0 {
        return T::zero();
    }
    let runs = 1 + signs.windows(2).filter(|w| w[0] != w[1]).count();
    let (a, b, n) = (n1 as f64, n2 as f64, signs.len() as f64);
    let mu = 2.0 * a * b / n + 1.0;
    let var = 2.0 * a * b * (2.0 * a * b - n) / (n * n * (n - 1.0));
    if var <= 0.0 {
        return T::zero();
    }
    T::lit((runs as f64 - mu) / var.sqrt())
}

/// Least-squares decay fit. `fixed_offset` pins the baseline.
pub fn fit_decay<T: Real>(data: &XyData<T>, model: DecayModel, fixed_offset: Option<T>) -> Result<DecayFit<T>> {
    data.validate()?;
    if data.len() < 4 {
        return Err(Error::invalid("data", "at least four points are needed"));
    }
    let w = data.weights();
    let n = data.len();
    let free_offset = fixed_offset.is_none();
    let np = if free_offset { 3 } else { 2 };

    // params: [A, ln T, c]
    let eval = |p: &[T; 3], t: T| p[0] * model.envelope(t, p[1].exp()) + p[2];
    let cost = |p: &[T; 3]| (0..n).map(|i| w[i] * (data.y[i] - eval(p, data.x[i])).powi(2)).sum::<T>();

    // linear parameters solved exactly for each trial time constant
    let linear = |u: T| -> Option<[T; 3]> {
        let time = u.exp();
        let e: Vec<T> = data.x.iter().map(|t| model.envelope(*t, time)).collect();
        if let Some(c) = fixed_offset {
            let num: T = (0..n).map(|i| w[i] * e[i] * (data.y[i] - c)).sum();
            let den: T = (0..n).map(|i| w[i] * e[i] * e[i]).sum();
            (den > T::zero()).then(|| [num / den, u, c])
        } else {
            let s = |f: &dyn Fn(usize) -> T| (0..n).map(|i| w[i] * f(i)).sum::<T>();
            let a = vec![
                vec![s(&|i| e[i] * e[i]), s(&|i| e[i])],
                vec![s(&|i| e[i]), s(&|_| T::one())],
            ];
            let b = vec![s(&|i| e[i] * data.y[i]), s(&|i| data.y[i])];
            solve(a, b).map(|x| [x[0], u, x[1]])
        }
    };
    let tmax = data.x.iter().map(|t| t.abs()).fold(T::zero(), T::max);
    if !(tmax > T::zero()) {
        return Err(Error::invalid("data", "times must not all be zero"));
    }
    let lo = (tmax / T::lit(1e4)).ln();
    let hi = (tmax * T::lit(1e3)).ln();
    let (u, _, _) = scan_golden(
        &mut |u: T| linear(u).map_or(T::infinity(), |p| cost(&p)),
        lo,
        hi,
        700,
        T::lit(1e-10),
    );
    let mut p = linear(u).ok_or(Error::NonConvergence { iterations: 0 })?;
    let mut c = cost(&p);

    let jac = |p: &[T; 3], t: T| -> [T; 3] {
        let time = p[1].exp();
        let e = model.envelope(t, time);
        [e, p[0] * e * model.log_slope(t, time), T::one()]
    };
    let mut lambda = T::lit(1e-3);
    let max_iter = 200;
    let mut converged = false;
    for _ in 0..max_iter {
        let mut h = vec![vec![T::zero(); np]; np];
        let mut g = vec![T::zero(); np];
        for i in 0..n {
            let j = jac(&p, data.x[i]);
            let r = data.y[i] - eval(&p, data.x[i]);
            for a in 0..np {
                g[a] += w[i] * j[a] * r;
                for b in 0..np {
                    h[a][b] += w[i] * j[a] * j[b];
                }
            }
        }
        let mut damped = h.clone();
        for (a, row) in damped.iter_mut().enumerate() {
            row[a] += lambda * h[a][a].max(T::min_positive_value());
        }
        let Some(step) = solve(damped, g) else {
            lambda *= T::lit(10.0);
            continue;
        };
        let mut trial = p;
        for a in 0..np {
            trial[a] += step[a];
        }
        let tc = cost(&trial);
        if tc.is_finite() && tc <= c {
            let gain = c - tc;
            p = trial;
            c = tc;
            lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
            let small_step = step.iter().take(2).all(|s| s.abs() <= T::lit(1e-12) * (T::one() + p[1].abs()));
            if gain <= T::lit(1e-14) * c.max(T::min_positive_value()) || small_step {
                converged = true;
                break;
            }
        } else {
            lambda *= T::lit(10.0);
            if lambda > T::lit(1e14) {
                // no descent direction left: at the minimum
                converged = true;
                break;
            }
        }
    }
    if !converged || !p[1].exp().is_finite() {
        return Err(Error::NonConvergence { iterations: max_iter });
    }

    let mut h = vec![vec![T::zero(); np]; np];
    for i in 0..n {
        let j = jac(&p, data.x[i]);
        for a in 0..np {
            for b in 0..np {
                h[a][b] += w[i] * j[a] * j[b];
            }
        }
    }
    let dof = count::<T>(n - np);
    let reduced = c / dof;
    let scale = if data.sigma.is_some() { reduced.max(T::one()) } else { reduced };
    let cov = invert(&h).ok_or(Error::NonConvergence { iterations: max_iter })?;
    let time = p[1].exp();
    let sd = |k: usize| (cov[k][k] * scale).max(T::zero()).sqrt();
    let residuals: Vec<T> = (0..n).map(|i| data.y[i] - eval(&p, data.x[i])).collect();
    let rms = (residuals.iter().map(|r| *r * *r).sum::<T>() / count(n)).sqrt();
    Ok(DecayFit {
        model,
        amplitude: p[0],
        time_constant: time,
        offset: p[2],
        ci: [sd(0), time * sd(1), if free_offset { sd(2) } else { T::zero() }],
        rms,
        reduced_chi2: reduced,
        runs_z: runs_z(&residuals),
    })
}

/// Normalized bright-state population from post-sequence count bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fluorescence<T> {
    pub p_up: T,
    /// Count rate extrapolated to the end of the sequence.
    pub intercept: T,
    /// Rate change per second from repumping.
    pub slope: T,
    /// True when the estimate was clamped into `[0, 1]`.
    pub clamped: bool,
}

/// Extrapolates consecutive count-rate bins of width `bin_width` back to
/// the end of the sequence by a straight-line fit and divides by the
/// bright-state reference rate.
pub fn normalize_fluorescence<T: Real>(bright_rate: T, bins: &[T], bin_width: T) -> Result<Fluorescence<T>> {
    if !(bright_rate > T::zero()) || !bright_rate.is_finite() {
        return Err(Error::invalid("bright_rate", "must be positive and finite"));
    }
    if !(bin_width > T::zero()) {
        return Err(Error::invalid("bin_width", "must be positive"));
    }
    if bins.len() < 2 {
        return Err(Error::invalid("bins", "at least two bins are needed"));
    }
    let n: T = count(bins.len());
    let t: Vec<T> = (0..bins.len()).map(|i| bin_width * (count::<T>(i) + T::lit(0.5))).collect();
    let mt = t.iter().copied().sum::<T>() / n;
    let my = bins.iter().copied().sum::<T>() / n;
    let sxy: T = t.iter().zip(bins).map(|(a, b)| (*a - mt) * (*b - my)).sum();
    let sxx: T = t.iter().map(|a| (*a - mt) * (*a - mt)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let raw = intercept / bright_rate;
    let p_up = raw.max(T::zero()).min(T::one());
    Ok(Fluorescence {
        p_up,
        intercept,
        slope,
        clamped: p_up != raw,
    })
}

/// `y ≈ offset + amplitude cos(2π f t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit<T> {
    pub frequency: T,
    pub amplitude: T,
    pub phase: T,
    pub offset: T,
    pub rms: T,
}

/// Least-squares sinusoid with the frequency searched in `[f_lo, f_hi]`.
pub fn fit_sinusoid<T: Real>(t: &[T], y: &[T], f_lo: T, f_hi: T) -> Result<SinusoidFit<T>> {
    if t.len() != y.len() || t.len() < 4 {
        return Err(Error::invalid("data", "need at least four paired points"));
    }
    if !(f_lo > T::zero()) || !(f_hi > f_lo) {
        return Err(Error::invalid("frequency", "need 0 < f_lo < f_hi"));
    }
    let linear = |f: T| -> Option<([T; 3], T)> {
        let basis: Vec<[T; 3]> = t
            .iter()
            .map(|ti| {
                let (s, c) = (T::TAU() * f * *ti).sin_cos();
                [T::one(), c, s]
            })
            .collect();
        let mut a = vec![vec![T::zero(); 3]; 3];
        let mut b = vec![T::zero(); 3];
        for (row, yi) in basis.iter().zip(y) {
            for i in 0..3 {
                b[i] += row[i] * *yi;
                for j in 0..3 {
                    a[i][j] += row[i] * row[j];
                }
            }
        }
        let x = solve(a, b)?;
        let ss = basis
            .iter()
            .zip(y)
            .map(|(row, yi)| (*yi - row[0] * x[0] - row[1] * x[1] - row[2] * x[2]).powi(2))
            .sum::<T>();
        Some(([x[0], x[1], x[2]], ss))
    };
    let span = t.iter().copied().fold(T::neg_infinity(), T::max) - t.iter().copied().fold(T::infinity(), T::min);
    let steps = ((f_hi - f_lo) * span * T::lit(20.0))
        .ceil()
        .to_usize()
        .unwrap_or(2000)
        .clamp(2000, 200_000);
    let (f, ss, _) = scan_golden(
        &mut |f: T| linear(f).map_or(T::infinity(), |r| r.1),
        f_lo,
        f_hi,
        steps,
        T::lit(1e-13),
    );
    let (x, _) = linear(f).ok_or_else(|| Error::Degenerate {
        reason: "sinusoid basis is singular".into(),
    })?;
    Ok(SinusoidFit {
        frequency: f,
        amplitude: (x[1] * x[1] + x[2] * x[2]).sqrt(),
        phase: (-x[2]).atan2(x[1]),
        offset: x[0],
        rms: (ss / count(t.len())).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn model(theta: f64) -> RabiModel<f64> {
        RabiModel::new(TAU * 77e6, 232.5e-6, theta).unwrap()
    }

    #[test]
    fn lineshape_landmarks() {
        let m = model(PI);
        assert!(rabi_lineshape(&m, m.omega0).abs() < 1e-15);
        assert!((rabi_lineshape(&model(TAU), m.omega0) - 1.0).abs() < 1e-15);
        let dw = 3f64.sqrt() * TAU / m.tau_pi;
        assert!((rabi_lineshape(&m, m.omega0 + dw) - 1.0).abs() < 1e-12);
        assert!((rabi_lineshape(&m, m.omega0 - dw) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_matches_finite_difference() {
        let m = model(3.0 * PI);
        for k in -20..20 {
            let w = m.omega0 + k as f64 * 1.3e3;
            let h = 1e-2;
            let plus = RabiModel { omega0: m.omega0 + h, ..m };
            let minus = RabiModel { omega0: m.omega0 - h, ..m };
            let fd = (rabi_lineshape(&plus, w) - rabi_lineshape(&minus, w)) / (2.0 * h);
            assert!((fd - lineshape_slope(&m, w)).abs() < 1e-6 * (1.0 + fd.abs()) + 1e-10);
        }
    }

    #[test]
    fn noiseless_resonance_recovered() {
        let m = model(PI);
        let omega: Vec<f64> = (-30..=30).map(|k| m.omega0 + k as f64 * 2e3 + 123.0).collect();
        let p_up = omega.iter().map(|w| rabi_lineshape(&m, *w)).collect();
        let set = LineshapeData {
            theta: PI,
            omega,
            p_up,
            shots: None,
        };
        let fit = fit_resonance(&[set], m.tau_pi, 0.1).unwrap();
        assert!((fit.omega0 / m.omega0 - 1.0).abs() < 1e-14, "{:?}", fit);
    }

    #[test]
    fn too_few_points() {
        let set = LineshapeData {
            theta: PI,
            omega: vec![1.0, 2.0],
            p_up: vec![1.0, 0.0],
            shots: None,
        };
        assert!(matches!(fit_resonance(&[set], 1e-4, 0.1), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn poor_fit_flagged() {
        let omega: Vec<f64> = (0..20).map(|k| k as f64 * 1e3).collect();
        let p_up = (0..20).map(|k| (k % 2) as f64).collect();
        let set = LineshapeData {
            theta: PI,
            omega,
            p_up,
            shots: None,
        };
        assert!(matches!(fit_resonance(&[set], 232.5e-6, 0.1), Err(Error::PoorFit { .. })));
    }

    #[test]
    fn exponential_decay_recovered() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.03).collect();
        let y = t.iter().map(|t| 0.8 * (-t / 0.688).exp() + 0.1).collect();
        let fit = fit_decay(&XyData::new(t, y).unwrap(), DecayModel::Exponential, None).unwrap();
        assert!((fit.time_constant - 0.688).abs() < 1e-8);
        assert!((fit.amplitude - 0.8).abs() < 1e-8);
        assert!((fit.offset - 0.1).abs() < 1e-8);
    }

    #[test]
    fn gaussian_data_prefers_gaussian() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|t| (-(t / 0.9_f64).powi(2)).exp()).collect();
        let d = XyData::new(t, y).unwrap();
        let e = fit_decay(&d, DecayModel::Exponential, None).unwrap();
        let g = fit_decay(&d, DecayModel::Gaussian, None).unwrap();
        assert!(e.rms > g.rms);
        assert!((g.time_constant - 0.9).abs() < 1e-8);
    }

    #[test]
    fn mixed_decay_leaves_structure() {
        let t: Vec<f64> = (0..60).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|t| 0.5 * (-t / 1.0 - (t / 1.5).powi(2)).exp()).collect();
        let d = XyData::new(t, y).unwrap();
        for m in [DecayModel::Exponential, DecayModel::Gaussian] {
            let fit = fit_decay(&d, m, Some(0.0)).unwrap();
            assert!(fit.runs_z < -3.0, "{m:?}: {}", fit.runs_z);
        }
    }

    #[test]
    fn fluorescence_cases() {
        let f = normalize_fluorescence(100.0_f64, &[100.0; 5], 0.01).unwrap();
        assert!((f.p_up - 1.0).abs() < 1e-12 && !f.clamped);
        assert_eq!(normalize_fluorescence(100.0, &[0.0; 5], 0.01).unwrap().p_up, 0.0);
        // rate r(t) = 0.2 + 4 t over 50 ms, bins hold the bin averages
        let bins: Vec<f64> = (0..5).map(|i| 100.0 * (0.2 + 4.0 * 0.01 * (i as f64 + 0.5))).collect();
        let f = normalize_fluorescence(100.0, &bins, 0.01).unwrap();
        assert!((f.p_up - 0.2).abs() < 1e-12);
        let f = normalize_fluorescence(100.0, &[-5.0, 0.0, 5.0, 10.0, 15.0], 0.01).unwrap();
        assert!(f.clamped && f.p_up == 0.0);
    }

    #[test]
    fn sinusoid_recovered() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 1e-3).collect();
        let y: Vec<f64> = t.iter().map(|t| 0.3 + 0.7 * (TAU * 12.5 * t + 0.4).cos()).collect();
        let fit = fit_sinusoid(&t, &y, 5.0, 40.0).unwrap();
        assert!((fit.frequency - 12.5).abs() < 1e-8);
        assert!((fit.amplitude - 0.7).abs() < 1e-8);
        assert!((fit.phase - 0.4).abs() < 1e-8);
        assert!((fit.offset - 0.3).abs() < 1e-8);
    }

    #[test]
    fn xy_csv_with_header_and_sigma() {
        let text = "# decay\nt,y,sigma\n0,1,0.1\n1,0.5,0.1\n";
        let d: XyData<f64> = read_xy_csv(text.as_bytes()).unwrap();
        assert_eq!(d.x, vec![0.0, 1.0]);
        assert_eq!(d.sigma, Some(vec![0.1, 0.1]));
        assert!(read_xy_csv::<f64, _>("1,2\n3,4,5\n".as_bytes()).is_err());
        assert!(matches!(
            read_xy_csv::<f64, _>("1,2\n3,x\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
