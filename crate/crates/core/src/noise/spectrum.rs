// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{breakpoints, integrate, QuadratureOptions};
use crate::scalar::Real;

/// Default full width at half maximum of an ambient spectral line, rad/s
/// (1 Hz).
pub const DEFAULT_LINE_FWHM: f64 = std::f64::consts::TAU;

/// Fraction of the total spectral power allowed above the reported
/// effective bandwidth of a spectrum without a hard cutoff.
pub const DEFAULT_TAIL_FRACTION: f64 = 1e-6;

/// A narrow Lorentzian feature on top of an ambient spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct SpectralLine<T> {
    /// Line center, rad/s.
    pub center: T,
    /// Integrated line power (before the overall strength), in the units of
    /// `S·ω`.
    pub weight: T,
    /// Full width at half maximum, rad/s; `None` means 1 Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm: Option<T>,
}

impl<T: Real> SpectralLine<T> {
    pub fn new(center: T, weight: T) -> Self {
        SpectralLine {
            center,
            weight,
            fwhm: None,
        }
    }

    pub fn width(&self) -> T {
        self.fwhm.unwrap_or_else(|| T::lit(DEFAULT_LINE_FWHM))
    }

    fn half_width(&self) -> T {
        self.width() * T::lit(0.5)
    }

    /// Unit-area Lorentzian profile times the line weight.
    fn profile(&self, omega: T) -> T {
        let g = self.half_width();
        let d = omega - self.center;
        self.weight * g / (T::PI() * (d * d + g * g))
    }
}

/// Functional form of a dephasing spectrum, before the strength factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "shape",
    rename_all = "snake_case",
    bound(deserialize = "T: Deserialize<'de>")
)]
pub enum SpectrumShape<T> {
    /// `max(ω, ω_lo)^(-p)` plus Lorentzian lines.
    AmbientPowerLaw {
        exponent: T,
        low_cutoff: T,
        #[serde(default)]
        lines: Vec<SpectralLine<T>>,
    },
    /// `ω` up to a sharp cutoff, zero above.
    OhmicSharpCutoff { high_cutoff: T },
    /// Flat.
    White,
    /// `(ω, S)` nodes strictly increasing in `ω`; interpolated log-log and
    /// zero outside the table.
    Tabulated { points: Vec<(T, T)> },
}

/// Power spectral density `S_β(ω)` of the qubit frequency fluctuation.
///
/// Normalization: the coherence integral is `χ(τ) = (2/π) ∫₀^∞ S(ω)/ω² F(ωτ) dω`,
/// so a white spectrum `S₀` dephases a Ramsey experiment as `exp(-2 S₀ τ)`.
/// In terms of the two-sided density of the autocorrelation of `β`,
/// `S = S_two / 4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrum<T> {
    #[serde(flatten)]
    pub shape: SpectrumShape<T>,
    /// Overall multiplicative strength `α`.
    pub strength: T,
}

impl<T: Real> NoiseSpectrum<T> {
    pub fn new(shape: SpectrumShape<T>, strength: T) -> Result<Self> {
        let s = NoiseSpectrum { shape, strength };
        s.validate()?;
        Ok(s)
    }

    pub fn white(level: T) -> Result<Self> {
        Self::new(SpectrumShape::White, level)
    }

    pub fn ohmic(strength: T, high_cutoff: T) -> Result<Self> {
        Self::new(SpectrumShape::OhmicSharpCutoff { high_cutoff }, strength)
    }

    pub fn ambient(strength: T, exponent: T, low_cutoff: T) -> Result<Self> {
        Self::new(
            SpectrumShape::AmbientPowerLaw {
                exponent,
                low_cutoff,
                lines: Vec::new(),
            },
            strength,
        )
    }

    pub fn tabulated(points: Vec<(T, T)>) -> Result<Self> {
        Self::new(SpectrumShape::Tabulated { points }, T::one())
    }

    /// Same shape with a different strength.
    pub fn with_strength(&self, strength: T) -> Self {
        NoiseSpectrum {
            shape: self.shape.clone(),
            strength,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= T::zero()) || !self.strength.is_finite() {
            return Err(Error::invalid("strength", "must be finite and non-negative"));
        }
        match &self.shape {
            SpectrumShape::AmbientPowerLaw {
                exponent,
                low_cutoff,
                lines,
            } => {
                if !exponent.is_finite() {
                    return Err(Error::invalid("exponent", "must be finite"));
                }
                if !(*low_cutoff >= T::zero()) || !low_cutoff.is_finite() {
                    return Err(Error::invalid("low_cutoff", "must be finite and non-negative"));
                }
                if *low_cutoff == T::zero() && *exponent < T::zero() {
                    return Err(Error::invalid(
                        "exponent",
                        "a rising power law needs no low cutoff; use a positive exponent or set low_cutoff",
                    ));
                }
                for line in lines {
                    let w = line.width();
                    if !(line.center >= T::zero() && line.weight >= T::zero() && w > T::zero())
                        || !(line.center.is_finite() && line.weight.is_finite() && w.is_finite())
                    {
                        return Err(Error::invalid(
                            "lines",
                            "line center and weight must be non-negative, width positive",
                        ));
                    }
                }
            }
            SpectrumShape::OhmicSharpCutoff { high_cutoff } => {
                if !(*high_cutoff > T::zero()) || !high_cutoff.is_finite() {
                    return Err(Error::invalid("high_cutoff", "must be positive and finite"));
                }
            }
            SpectrumShape::White => {}
            SpectrumShape::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::invalid("points", "need at least two table nodes"));
                }
                for (i, &(w, s)) in points.iter().enumerate() {
                    if !(w >= T::zero()) || !w.is_finite() || !(s >= T::zero()) || !s.is_finite() {
                        return Err(Error::invalid(
                            "points",
                            format!("node {i} must have finite non-negative frequency and density"),
                        ));
                    }
                    if i > 0 && !(w > points[i - 1].0) {
                        return Err(Error::invalid(
                            "points",
                            format!("frequencies must be strictly increasing (node {i})"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// `S(ω)` for `ω ≥ 0`.
    pub fn evaluate(&self, omega: T) -> Result<T> {
        if omega < T::zero() || omega.is_nan() {
            return Err(Error::NegativeFrequency {
                omega: omega.as_f64(),
            });
        }
        Ok(self.density(omega))
    }

    /// `S(ω)` without the domain check; callers guarantee `ω ≥ 0`.
    pub(crate) fn density(&self, omega: T) -> T {
        if self.strength == T::zero() {
            return T::zero();
        }
        self.strength * self.shape_density(omega)
    }

    fn shape_density(&self, omega: T) -> T {
        match &self.shape {
            SpectrumShape::AmbientPowerLaw {
                exponent,
                low_cutoff,
                lines,
            } => {
                let base = omega.max(*low_cutoff).powf(-*exponent);
                lines.iter().fold(base, |acc, l| acc + l.profile(omega))
            }
            SpectrumShape::OhmicSharpCutoff { high_cutoff } => {
                if omega <= *high_cutoff {
                    omega
                } else {
                    T::zero()
                }
            }
            SpectrumShape::White => T::one(),
            SpectrumShape::Tabulated { points } => interpolate_log_log(points, omega),
        }
    }

    /// True when the density is identically zero.
    pub fn is_zero(&self) -> bool {
        if self.strength == T::zero() {
            return true;
        }
        match &self.shape {
            SpectrumShape::Tabulated { points } => points.iter().all(|p| p.1 == T::zero()),
            _ => false,
        }
    }

    /// End of a bounded support, if the shape has one.
    pub fn support_end(&self) -> Option<T> {
        match &self.shape {
            SpectrumShape::OhmicSharpCutoff { high_cutoff } => Some(*high_cutoff),
            SpectrumShape::Tabulated { points } => points.last().map(|p| p.0),
            _ => None,
        }
    }

    /// Frequencies where the density has kinks, jumps or narrow features;
    /// quadrature panels break there.
    pub fn features(&self) -> Vec<T> {
        match &self.shape {
            SpectrumShape::AmbientPowerLaw {
                low_cutoff, lines, ..
            } => {
                let mut v = vec![*low_cutoff];
                for l in lines {
                    let g = l.half_width();
                    for k in [-50.0, -10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0, 50.0] {
                        v.push(l.center + T::lit(k) * g);
                    }
                }
                v
            }
            SpectrumShape::OhmicSharpCutoff { high_cutoff } => vec![*high_cutoff],
            SpectrumShape::White => Vec::new(),
            SpectrumShape::Tabulated { points } => points.iter().map(|p| p.0).collect(),
        }
    }

    /// Frequency beyond which the density is smooth and slowly varying.
    pub fn smooth_beyond(&self) -> T {
        match &self.shape {
            SpectrumShape::AmbientPowerLaw {
                low_cutoff, lines, ..
            } => lines
                .iter()
                .map(|l| l.center + T::lit(200.0) * l.half_width())
                .fold(*low_cutoff, T::max),
            SpectrumShape::OhmicSharpCutoff { high_cutoff } => *high_cutoff,
            SpectrumShape::White => T::zero(),
            SpectrumShape::Tabulated { points } => points.last().map(|p| p.0).unwrap_or_else(T::zero),
        }
    }

    /// Low-frequency scale that a finite trace must resolve, rad/s.
    pub fn resolution_scale(&self) -> Option<T> {
        match &self.shape {
            SpectrumShape::AmbientPowerLaw { low_cutoff, .. } if *low_cutoff > T::zero() => {
                Some(*low_cutoff)
            }
            SpectrumShape::OhmicSharpCutoff { high_cutoff } => Some(*high_cutoff / T::lit(20.0)),
            SpectrumShape::Tabulated { points } => points
                .windows(2)
                .map(|w| w[1].0 - w[0].0)
                .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d)))),
            _ => None,
        }
    }

    /// `∫_a^b S(ω) dω`; `b` may be infinite.
    pub fn band_power(&self, a: T, b: T) -> Result<T> {
        if a < T::zero() || a.is_nan() {
            return Err(Error::NegativeFrequency { omega: a.as_f64() });
        }
        if !(b > a) {
            return Err(Error::invalid("band", "upper edge must exceed lower edge"));
        }
        if self.is_zero() {
            return Ok(T::zero());
        }
        let opts = QuadratureOptions {
            rel_tol: 1e-10,
            ..Default::default()
        };
        let mut upper = b;
        if let Some(end) = self.support_end() {
            upper = upper.min(end);
        }
        let mut total = T::zero();
        let finite_upper = if upper.is_finite() {
            upper
        } else {
            match &self.shape {
                SpectrumShape::White => return Ok(T::infinity()),
                SpectrumShape::AmbientPowerLaw { exponent, .. } if *exponent <= T::one() => {
                    return Ok(T::infinity())
                }
                _ => {}
            }
            let omega_tail = (self.smooth_beyond() * T::lit(4.0)).max(a).max(T::one());
            // ∫_Ω^∞ S dω = ∫_0^{1/Ω} S(1/u)/u² du
            let tail = integrate(
                |u: T| {
                    if u == T::zero() {
                        T::zero()
                    } else {
                        self.density(T::one() / u) / (u * u)
                    }
                },
                &[T::zero(), T::one() / omega_tail],
                &opts,
            );
            total += tail.value;
            omega_tail
        };
        if finite_upper > a {
            let breaks = breakpoints(a, finite_upper, self.features());
            total += integrate(|w| self.density(w), &breaks, &opts).value;
        }
        Ok(total)
    }

    /// `sqrt((1/π) ∫_a^b S dω)`, rad/s.
    pub fn integrated_rms(&self, a: T, b: T) -> Result<T> {
        Ok((self.band_power(a, b)? / T::PI()).sqrt())
    }

    /// Frequency above which at most `tail_fraction` of the total power lies.
    /// `None` for white noise, which is taken as band-limited to whatever
    /// sampling it is synthesized at.
    pub fn effective_bandwidth(&self, tail_fraction: T) -> Result<Option<T>> {
        if let Some(end) = self.support_end() {
            return Ok(Some(end));
        }
        match &self.shape {
            SpectrumShape::White => Ok(None),
            SpectrumShape::AmbientPowerLaw { .. } => {
                if self.is_zero() {
                    return Ok(Some(T::zero()));
                }
                let total = self.band_power(T::zero(), T::infinity())?;
                if !total.is_finite() {
                    return Err(Error::invalid(
                        "exponent",
                        "power-law tail with exponent <= 1 has unbounded power",
                    ));
                }
                let target = tail_fraction * total;
                let mut hi = self.smooth_beyond().max(T::one());
                while self.band_power(hi, T::infinity())? > target {
                    hi *= T::lit(2.0);
                }
                let mut lo = hi / T::lit(2.0);
                for _ in 0..60 {
                    let mid = (lo * hi).sqrt();
                    if self.band_power(mid, T::infinity())? > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi / lo - T::one() < T::lit(1e-6) {
                        break;
                    }
                }
                Ok(Some(hi))
            }
            _ => unreachable!("bounded shapes handled above"),
        }
    }
}

fn interpolate_log_log<T: Real>(points: &[(T, T)], omega: T) -> T {
    let (first, last) = (points[0], points[points.len() - 1]);
    if omega < first.0 || omega > last.0 {
        return T::zero();
    }
    let idx = points.partition_point(|p| p.0 <= omega);
    if idx == 0 {
        return first.1;
    }
    if idx >= points.len() {
        return last.1;
    }
    let (w0, s0) = points[idx - 1];
    let (w1, s1) = points[idx];
    if omega == w0 {
        return s0;
    }
    if w0 > T::zero() && s0 > T::zero() && s1 > T::zero() {
        let t = (omega / w0).ln() / (w1 / w0).ln();
        (s0.ln() + t * (s1 / s0).ln()).exp()
    } else {
        // Log-log is undefined with a zero endpoint; fall back to linear.
        let t = (omega - w0) / (w1 - w0);
        s0 + t * (s1 - s0)
    }
}

/// Microwave phase-noise increase in dB when a reference is multiplied by
/// `n`.
pub fn phase_noise_stepup<T: Real>(n: T) -> Result<T> {
    if !(n > T::zero()) {
        return Err(Error::invalid("multiplication factor", "must be positive"));
    }
    Ok(T::lit(20.0) * n.log10())
}
