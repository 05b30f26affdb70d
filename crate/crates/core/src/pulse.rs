// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Dynamical-decoupling pulse sequences.
//!
//! A sequence is a list of π-pulse centers `δ_j` given as fractions of the
//! total duration `τ`, together with a fixed pulse width `τ_π` in seconds.
//! Realizing a sequence at a concrete `τ` checks that pulses fit and yields
//! the partition of `[0, τ]` into free-precession and pulse intervals.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{count, Real};

/// Rotation axis of a π pulse. Carried for bookkeeping only; the dephasing
/// model does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence<T> {
    positions: Vec<T>,
    pulse_width: T,
    axes: Vec<Axis>,
}

fn check_order<T: Real>(positions: &[T]) -> Result<()> {
    for (j, &d) in positions.iter().enumerate() {
        let ok = d > T::zero() && d < T::one() && (j == 0 || d > positions[j - 1]);
        if !ok {
            return Err(Error::OrderingViolation { index: j + 1 });
        }
    }
    Ok(())
}

impl<T: Real> PulseSequence<T> {
    /// No pulses: free precession for the whole duration.
    pub fn ramsey() -> Self {
        PulseSequence {
            positions: Vec::new(),
            pulse_width: T::zero(),
            axes: Vec::new(),
        }
    }

    /// Evenly spaced pulses, `δ_j = (j - 1/2)/n`, about Y.
    pub fn cpmg(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "CPMG needs at least one pulse"));
        }
        let nn: T = count(n);
        let positions = (1..=n)
            .map(|j| (count::<T>(j) - T::lit(0.5)) / nn)
            .collect();
        Ok(PulseSequence {
            positions,
            pulse_width: T::zero(),
            axes: vec![Axis::Y; n],
        })
    }

    /// Uhrig spacing, `δ_j = sin²(πj / (2n + 2))`, about X.
    pub fn udd(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "UDD needs at least one pulse"));
        }
        let denom: T = count(2 * n + 2);
        let positions = (1..=n)
            .map(|j| {
                let s = (T::PI() * count::<T>(j) / denom).sin();
                s * s
            })
            .collect();
        Ok(PulseSequence {
            positions,
            pulse_width: T::zero(),
            axes: vec![Axis::X; n],
        })
    }

    /// Arbitrary strictly increasing centers in `(0, 1)`, about X.
    pub fn custom(positions: Vec<T>, pulse_width: T) -> Result<Self> {
        check_order(&positions)?;
        let n = positions.len();
        PulseSequence {
            positions,
            pulse_width: T::zero(),
            axes: vec![Axis::X; n],
        }
        .with_pulse_width(pulse_width)
    }

    pub fn with_pulse_width(mut self, pulse_width: T) -> Result<Self> {
        if !(pulse_width >= T::zero()) || !pulse_width.is_finite() {
            return Err(Error::invalid("pulse_width", "must be finite and non-negative"));
        }
        self.pulse_width = pulse_width;
        Ok(self)
    }

    pub fn with_axes(mut self, axes: Vec<Axis>) -> Result<Self> {
        if axes.len() != self.positions.len() {
            return Err(Error::invalid("axes", "one axis per pulse"));
        }
        self.axes = axes;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn pulse_width(&self) -> T {
        self.pulse_width
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Shortest duration at which the pulses fit without overlapping.
    pub fn min_duration(&self) -> T {
        let w = self.pulse_width;
        if self.positions.is_empty() || w == T::zero() {
            return T::zero();
        }
        let half = T::lit(0.5);
        let n = self.positions.len();
        let mut need = w * half / self.positions[0];
        need = need.max(w * half / (T::one() - self.positions[n - 1]));
        for p in self.positions.windows(2) {
            need = need.max(w / (p[1] - p[0]));
        }
        need
    }

    /// Checks the overlap constraints at duration `tau`. In the error,
    /// index 0 stands for the start of the sequence and `n + 1` for its end.
    pub fn check_fits(&self, tau: T) -> Result<()> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::invalid("tau", "must be positive and finite"));
        }
        let w = self.pulse_width;
        if self.positions.is_empty() || w == T::zero() {
            return Ok(());
        }
        // rounding slack so sequences built to touch exactly still fit
        let slack = T::lit(1e-12) * tau;
        let half = w * T::lit(0.5);
        let n = self.positions.len();
        let overlap = |first, second| Error::OverlapViolation {
            first,
            second,
            tau: tau.as_f64(),
        };
        if self.positions[0] * tau + slack < half {
            return Err(overlap(0, 1));
        }
        for j in 0..n.saturating_sub(1) {
            if (self.positions[j + 1] - self.positions[j]) * tau + slack < w {
                return Err(overlap(j + 1, j + 2));
            }
        }
        if (T::one() - self.positions[n - 1]) * tau + slack < half {
            return Err(overlap(n, n + 1));
        }
        Ok(())
    }

    /// Partition of `[0, tau]` into free and pulse intervals.
    pub fn realize(&self, tau: T) -> Result<TimedSequence<T>> {
        self.check_fits(tau)?;
        let half = self.pulse_width * T::lit(0.5);
        let mut intervals = Vec::with_capacity(2 * self.n() + 1);
        let mut edge = T::zero();
        let mut sign = 1i8;
        for (j, &d) in self.positions.iter().enumerate() {
            let center = d * tau;
            let start = (center - half).max(edge).min(tau);
            let end = (center + half).max(start).min(tau);
            intervals.push(Interval {
                start: edge,
                end: start,
                segment: Segment::Free { sign },
            });
            intervals.push(Interval {
                start,
                end,
                segment: Segment::Pulse { index: j + 1 },
            });
            edge = end;
            sign = -sign;
        }
        intervals.push(Interval {
            start: edge,
            end: tau,
            segment: Segment::Free { sign },
        });
        Ok(TimedSequence {
            duration: tau,
            intervals,
        })
    }

    /// Piecewise-constant `y(t)`: `±1` during free precession, alternating
    /// after every pulse, and `0` while a pulse is on.
    pub fn time_domain_filter(&self, tau: T) -> Result<TimeDomainFilter<T>> {
        Ok(TimeDomainFilter::from(&self.realize(tau)?))
    }

    /// Single-line text record `n,τ_π,δ_1,…,δ_n` with 12 significant digits.
    pub fn to_record(&self) -> String {
        let mut s = format!("{},{:.11e}", self.n(), self.pulse_width.as_f64());
        for d in &self.positions {
            let _ = write!(s, ",{:.11e}", d.as_f64());
        }
        s
    }

    pub fn from_record(record: &str) -> Result<Self> {
        let fields: Vec<&str> = record.trim().split(',').map(str::trim).collect();
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line: 1,
                reason: format!("`{s}`: {e}"),
            })
        };
        let n: usize = fields[0].parse().map_err(|e| Error::Parse {
            line: 1,
            reason: format!("pulse count `{}`: {e}", fields[0]),
        })?;
        if fields.len() != n + 2 {
            return Err(Error::Parse {
                line: 1,
                reason: format!("expected {} fields, found {}", n + 2, fields.len()),
            });
        }
        let width = T::lit(parse(fields[1])?);
        let positions = fields[2..]
            .iter()
            .map(|f| parse(f).map(T::lit))
            .collect::<Result<Vec<T>>>()?;
        Self::custom(positions, width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Free { sign: i8 },
    /// 1-based pulse index.
    Pulse { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub start: T,
    pub end: T,
    pub segment: Segment,
}

impl<T: Real> Interval<T> {
    pub fn len(&self) -> T {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn value(&self) -> T {
        match self.segment {
            Segment::Free { sign } => T::lit(f64::from(sign)),
            Segment::Pulse { .. } => T::zero(),
        }
    }
}

/// A sequence laid out on `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedSequence<T> {
    pub duration: T,
    /// Alternating free and pulse intervals, contiguous from 0 to `duration`.
    pub intervals: Vec<Interval<T>>,
}

impl<T: Real> TimedSequence<T> {
    pub fn pulses(&self) -> impl Iterator<Item = &Interval<T>> {
        self.intervals
            .iter()
            .filter(|i| matches!(i.segment, Segment::Pulse { .. }))
    }

    pub fn free(&self) -> impl Iterator<Item = &Interval<T>> {
        self.intervals
            .iter()
            .filter(|i| matches!(i.segment, Segment::Free { .. }))
    }
}

/// Piecewise-constant time-domain filter `y(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainFilter<T> {
    pub duration: T,
    /// `(start, end, value)` pieces covering `[0, duration]`.
    pub pieces: Vec<(T, T, T)>,
}

impl<T: Real> From<&TimedSequence<T>> for TimeDomainFilter<T> {
    fn from(seq: &TimedSequence<T>) -> Self {
        TimeDomainFilter {
            duration: seq.duration,
            pieces: seq
                .intervals
                .iter()
                .map(|i| (i.start, i.end, i.value()))
                .collect(),
        }
    }
}

impl<T: Real> TimeDomainFilter<T> {
    /// `y(t)`; at a shared edge the later piece wins. Zero outside
    /// `[0, duration]`.
    pub fn value(&self, t: T) -> T {
        if t < T::zero() || t > self.duration {
            return T::zero();
        }
        self.pieces
            .iter()
            .find(|p| p.0 <= t && t < p.1)
            .or_else(|| self.pieces.last())
            .map_or(T::zero(), |p| p.2)
    }

    /// `∫_0^duration y(t) dt`.
    pub fn integral(&self) -> T {
        self.pieces.iter().map(|p| (p.1 - p.0) * p.2).sum()
    }

    /// Number of sign flips between consecutive non-zero free pieces.
    pub fn sign_changes(&self) -> usize {
        let signs: Vec<T> = self
            .pieces
            .iter()
            .filter(|p| p.2 != T::zero())
            .map(|p| p.2)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Pieces where `y = 0`.
    pub fn zero_pieces(&self) -> impl Iterator<Item = &(T, T, T)> {
        self.pieces.iter().filter(|p| p.2 == T::zero())
    }
}
