// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration. Every block is plain JSON; unknown keys are rejected
//! so that typos surface as validation errors.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use ionspin::constants::{BE9_ION_MASS, ELEMENTARY_CHARGE};
use ionspin::noise::io::read_spectrum_table;
use ionspin::noise::NoiseSpectrum;
use ionspin::pulse::PulseSequence;
use ionspin::rb::{ErrorModel, RbExperiment, DEFAULT_GATE_GAP, DEFAULT_TAU_PI};
use ionspin::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sequences: Vec<SequenceBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rb: Option<RbBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseBlock>,
    /// Provenance written by a previous run; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<serde_json::Value>,
}

fn missing(name: &'static str, what: &str) -> Error {
    Error::InvalidParameter {
        name,
        reason: format!("missing ({what})"),
    }
}

impl RunConfig {
    pub fn load(path: &PathBuf) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::InvalidParameter {
            name: "config",
            reason: format!("{}: {e}", path.display()),
        })?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Parse {
            line: e.line(),
            reason: e.to_string(),
        })
    }

    pub fn spectrum(&self) -> Result<NoiseSpectrum<f64>> {
        self.spectrum
            .as_ref()
            .ok_or_else(|| missing("spectrum", "noise spectrum block"))?
            .build()
    }

    pub fn sequences(&self) -> Result<Vec<(String, PulseSequence<f64>)>> {
        if self.sequences.is_empty() {
            return Err(missing("sequences", "at least one pulse sequence"));
        }
        let mut out: Vec<(String, PulseSequence<f64>)> = Vec::new();
        for (i, s) in self.sequences.iter().enumerate() {
            let (label, seq) = s.build(i)?;
            if out.iter().any(|(l, _)| *l == label) {
                return Err(Error::InvalidParameter {
                    name: "sequences",
                    reason: format!("duplicate label `{label}`"),
                });
            }
            out.push((label, seq));
        }
        Ok(out)
    }

    pub fn taus(&self) -> Result<Vec<f64>> {
        self.grid.as_ref().ok_or_else(|| missing("grid", "duration grid"))?.build()
    }
}

/// Trap description. Either `voltage` with `geometry_factor` (or `r0` and
/// `z0`), or the axial frequency directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapBlock {
    /// Magnetic field B0, T.
    pub field: Option<f64>,
    /// Charge in units of e.
    #[serde(default = "one")]
    pub charge_e: f64,
    /// Ion mass, kg; defaults to ⁹Be⁺.
    #[serde(default = "be9")]
    pub mass: f64,
    pub voltage: Option<f64>,
    pub geometry_factor: Option<f64>,
    pub r0: Option<f64>,
    pub z0: Option<f64>,
    pub axial_hz: Option<f64>,
    pub rotation_hz: Option<f64>,
    pub plasma: Option<PlasmaBlock>,
}

fn one() -> f64 {
    1.0
}

fn be9() -> f64 {
    BE9_ION_MASS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlasmaBlock {
    /// Number density, cm⁻³.
    pub density_cm3: f64,
    /// Temperature, K.
    pub temperature: f64,
}

pub enum Axial {
    Electrodes(ionspin::TrapConfig64),
    Frequency { cyclotron: f64, axial: f64 },
}

impl TrapBlock {
    pub fn build(&self) -> Result<Axial> {
        let field = self.field.ok_or_else(|| missing("field", "magnetic field B0 in tesla"))?;
        let charge = self.charge_e * ELEMENTARY_CHARGE;
        if let Some(hz) = self.axial_hz {
            if self.voltage.is_some() {
                return Err(Error::InvalidParameter {
                    name: "axial_hz",
                    reason: "give either axial_hz or voltage, not both".into(),
                });
            }
            if !(hz > 0.0) || !hz.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "axial_hz",
                    reason: "must be positive".into(),
                });
            }
            // placeholder voltage and geometry; only charge, mass and field matter
            let cfg = ionspin::TrapConfig64::with_geometry_factor(charge, self.mass, field, 1.0, 1.0)?;
            return Ok(Axial::Frequency {
                cyclotron: cfg.cyclotron_frequency(),
                axial: std::f64::consts::TAU * hz,
            });
        }
        let voltage = self.voltage.ok_or_else(|| missing("voltage", "ring to end-cap voltage, or axial_hz"))?;
        let cfg = match (self.geometry_factor, self.r0, self.z0) {
            (Some(g), None, None) => ionspin::TrapConfig64::with_geometry_factor(charge, self.mass, field, voltage, g)?,
            (None, Some(r0), Some(z0)) => {
                ionspin::TrapConfig64::from_electrodes(charge, self.mass, field, voltage, r0, z0)?
            }
            _ => return Err(missing("geometry_factor", "geometry_factor, or both r0 and z0")),
        };
        Ok(Axial::Electrodes(cfg))
    }
}

/// Inline spectrum, or a two-column table file with an optional strength.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpectrumBlock {
    Table {
        table: PathBuf,
        #[serde(default)]
        strength: Option<f64>,
    },
    Inline(NoiseSpectrum<f64>),
}

impl SpectrumBlock {
    pub fn build(&self) -> Result<NoiseSpectrum<f64>> {
        match self {
            SpectrumBlock::Inline(s) => {
                s.validate()?;
                Ok(s.clone())
            }
            SpectrumBlock::Table { table, strength } => {
                let file = File::open(table).map_err(|e| Error::InvalidParameter {
                    name: "table",
                    reason: format!("{}: {e}", table.display()),
                })?;
                let spec: NoiseSpectrum<f64> = read_spectrum_table(BufReader::new(file))?;
                let spec = spec.with_strength(strength.unwrap_or(1.0));
                spec.validate()?;
                Ok(spec)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ramsey,
    Cpmg,
    Udd,
    Custom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceBlock {
    pub family: Family,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub positions: Option<Vec<f64>>,
    /// π-pulse width, s.
    #[serde(default)]
    pub pulse_width: f64,
    #[serde(default)]
    pub label: Option<String>,
}

impl SequenceBlock {
    pub fn build(&self, index: usize) -> Result<(String, PulseSequence<f64>)> {
        let need_n = || self.n.ok_or_else(|| missing("n", "pulse count"));
        let (default_label, seq) = match self.family {
            Family::Ramsey => ("ramsey".to_string(), PulseSequence::ramsey()),
            Family::Cpmg => {
                let n = need_n()?;
                (format!("cpmg{n}"), PulseSequence::cpmg(n)?)
            }
            Family::Udd => {
                let n = need_n()?;
                (format!("udd{n}"), PulseSequence::udd(n)?)
            }
            Family::Custom => {
                let p = self
                    .positions
                    .clone()
                    .ok_or_else(|| missing("positions", "normalized pulse positions"))?;
                (format!("custom{index}"), PulseSequence::custom(p, 0.0)?)
            }
        };
        let seq = seq.with_pulse_width(self.pulse_width)?;
        let label = self.label.clone().unwrap_or(default_label);
        if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::InvalidParameter {
                name: "label",
                reason: format!("`{label}` must be non-empty ASCII letters, digits, '_' or '-'"),
            });
        }
        Ok((label, seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridBlock {
    Explicit {
        tau: Vec<f64>,
    },
    Range {
        min: f64,
        max: f64,
        points: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl GridBlock {
    pub fn build(&self) -> Result<Vec<f64>> {
        let taus = match self {
            GridBlock::Explicit { tau } => tau.clone(),
            GridBlock::Range {
                min,
                max,
                points,
                spacing,
            } => {
                if *points < 2 || !(*min > 0.0) || !(max > min) {
                    return Err(Error::InvalidParameter {
                        name: "grid",
                        reason: "need 0 < min < max and at least two points".into(),
                    });
                }
                let k = (*points - 1) as f64;
                (0..*points)
                    .map(|i| match spacing {
                        Spacing::Linear => min + (max - min) * i as f64 / k,
                        Spacing::Log => min * (max / min).powf(i as f64 / k),
                    })
                    .collect()
            }
        };
        if taus.is_empty() {
            return Err(missing("tau", "at least one duration"));
        }
        for (i, t) in taus.iter().enumerate() {
            if !(*t > 0.0) || !t.is_finite() || (i > 0 && !(*t > taus[i - 1])) {
                return Err(Error::InvalidParameter {
                    name: "tau",
                    reason: "durations must be positive and strictly ascending".into(),
                });
            }
        }
        Ok(taus)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    pub shots: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub trace_len: Option<usize>,
    #[serde(default)]
    pub batches: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbBlock {
    pub lengths: Vec<usize>,
    pub runs: usize,
    pub error: ErrorModel<f64>,
    #[serde(default)]
    pub gate_gap: Option<f64>,
    #[serde(default)]
    pub tau_pi: Option<f64>,
    #[serde(default)]
    pub measurements: Option<u32>,
}

impl RbBlock {
    pub fn build(&self, seed: u64) -> Result<RbExperiment<f64>> {
        let exp = RbExperiment {
            lengths: self.lengths.clone(),
            runs: self.runs,
            seed,
            error: self.error.clone(),
            gate_gap: self.gate_gap.unwrap_or(DEFAULT_GATE_GAP),
            tau_pi: self.tau_pi.unwrap_or(DEFAULT_TAU_PI),
            measurements: self.measurements,
        };
        exp.validate()?;
        Ok(exp)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeBlock {
    pub n: usize,
    pub tau: f64,
    #[serde(default)]
    pub pulse_width: f64,
    #[serde(default)]
    pub start: Option<SequenceBlock>,
    #[serde(default)]
    pub margin: f64,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max_sweeps: Option<usize>,
    #[serde(default)]
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    /// Sample interval, s.
    pub dt: f64,
    /// Samples per trace (power of two).
    pub len: usize,
    /// Welch segment length.
    pub segment: usize,
    /// Number of traces averaged into the estimate.
    #[serde(default = "one_usize")]
    pub traces: usize,
    /// Band, rad/s, over which the log-log slope and RMS error are reported.
    #[serde(default)]
    pub fit_band: Option<(f64, f64)>,
    #[serde(default)]
    pub write_trace: bool,
}

fn one_usize() -> usize {
    1
}
