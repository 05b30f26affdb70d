// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Text formats: two-column spectrum tables and `t,β` trace CSV.

use std::io::{BufRead, Write};

use super::spectrum::NoiseSpectrum;
use super::synth::NoiseTrace;
use crate::error::{Error, Result};
use crate::scalar::{count, Real};

pub(crate) fn parse_field<T: Real>(field: &str, line: usize) -> Result<T> {
    field
        .trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|e| Error::Parse {
            line,
            reason: format!("`{}`: {e}", field.trim()),
        })
}

pub(crate) fn io_error(e: std::io::Error) -> Error {
    Error::Parse {
        line: 0,
        reason: e.to_string(),
    }
}

/// Reads whitespace- or comma-separated `(ω, S)` rows. Blank lines and text
/// after `#` are ignored.
pub fn read_spectrum_table<T: Real, R: BufRead>(reader: R) -> Result<NoiseSpectrum<T>> {
    let mut points = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_error)?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("expected two columns, found {}", fields.len()),
            });
        }
        points.push((parse_field(fields[0], i + 1)?, parse_field(fields[1], i + 1)?));
    }
    NoiseSpectrum::tabulated(points)
}

/// Writes `(ω, S)` rows with a comment header.
pub fn write_spectrum_table<T: Real, W: Write>(mut out: W, points: &[(T, T)]) -> std::io::Result<()> {
    writeln!(out, "# omega_rad_per_s S_rad2_per_s_per_rad_per_s")?;
    for (w, s) in points {
        writeln!(out, "{:e} {:e}", w.as_f64(), s.as_f64())?;
    }
    Ok(())
}

/// Writes a trace as `t,beta` CSV.
pub fn write_trace_csv<T: Real, W: Write>(mut out: W, trace: &NoiseTrace<T>) -> std::io::Result<()> {
    writeln!(out, "# seed={} dt={:e}", trace.seed, trace.dt.as_f64())?;
    writeln!(out, "t,beta")?;
    for (i, b) in trace.samples.iter().enumerate() {
        let t = trace.dt * count(i);
        writeln!(out, "{:e},{:e}", t.as_f64(), b.as_f64())?;
    }
    Ok(())
}

/// Reads a `t,beta` CSV. The sample interval is taken from the first two
/// rows and must be uniform.
pub fn read_trace_csv<T: Real, R: BufRead>(reader: R) -> Result<NoiseTrace<T>> {
    let mut times: Vec<T> = Vec::new();
    let mut samples = Vec::new();
    let mut seed = 0u64;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_error)?;
        let body = line.trim();
        if let Some(comment) = body.strip_prefix('#') {
            if let Some(s) = comment.split_whitespace().find_map(|kv| kv.strip_prefix("seed=")) {
                seed = s.parse().unwrap_or(0);
            }
            continue;
        }
        if body.is_empty() || body.starts_with('t') {
            continue;
        }
        let (t, b) = body.split_once(',').ok_or_else(|| Error::Parse {
            line: i + 1,
            reason: "expected `t,beta`".into(),
        })?;
        times.push(parse_field(t, i + 1)?);
        samples.push(parse_field(b, i + 1)?);
    }
    if samples.len() < 2 {
        return Err(Error::invalid("trace", "needs at least two samples"));
    }
    let dt = times[1] - times[0];
    if !(dt > T::zero()) {
        return Err(Error::invalid("trace", "time column must increase"));
    }
    let tol = T::lit(1e-6) * dt;
    for (k, t) in times.iter().enumerate() {
        if (*t - times[0] - dt * count(k)).abs() > tol.max(T::lit(1e-9) * t.abs()) {
            return Err(Error::Parse {
                line: k + 1,
                reason: "non-uniform sampling".into(),
            });
        }
    }
    if samples.iter().any(|x: &T| !x.is_finite()) {
        return Err(Error::invalid("trace", "non-finite sample"));
    }
    Ok(NoiseTrace { dt, samples, seed })
}
