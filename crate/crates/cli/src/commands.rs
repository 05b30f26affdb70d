// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! Subcommand bodies. Each one validates and computes everything in memory
//! and returns the files to write, so a failure never leaves partial output.

use std::fmt::Write as _;

use ionspin::filter::{coherence_curve, ChiOptions};
use ionspin::noise::io::write_trace_csv;
use ionspin::noise::{log_log_slope, relative_rms_error, stream_rng, table, NoiseTrace, TraceSynthesizer, WelchEstimator};
use ionspin::optimizer::{optimize, OptimizationProblem};
use ionspin::oracle::{simulate_ensemble, Ensemble};
use ionspin::rb::{simulate, write_runs_csv};
use ionspin::trap::{
    coupling_constant, mode_frequencies, radial_frequencies, rotation_frequency_valid, ModeFrequencies, PlasmaState,
};
use ionspin::{Error, Result};
use serde_json::{json, Value};

use crate::config::{Axial, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A file to be written into the output directory.
pub struct Output {
    pub name: String,
    pub body: String,
    /// CSV bodies receive the manifest-reference comment line.
    pub csv: bool,
}

impl Output {
    fn csv(name: impl Into<String>, body: String) -> Self {
        Output {
            name: name.into(),
            body,
            csv: true,
        }
    }

    fn json(name: impl Into<String>, value: &Value) -> Self {
        Output {
            name: name.into(),
            body: serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n",
            csv: false,
        }
    }
}

/// Everything a command produced, plus the named seeds it consumed.
pub struct Report {
    pub outputs: Vec<Output>,
    pub seeds: Vec<(&'static str, u64)>,
    pub summary: Value,
}

/// Independent seed for the named consumer of the global seed.
pub fn sub_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a over the name, then a splitmix64 finalizer
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn io(e: std::io::Error) -> Error {
    Error::Parse {
        line: 0,
        reason: e.to_string(),
    }
}

fn utf8(buf: Vec<u8>) -> String {
    String::from_utf8(buf).expect("writers emit UTF-8")
}

fn modes_json(m: &ModeFrequencies<f64>) -> Value {
    let hz = m.in_hz();
    json!({
        "cyclotron": {"rad_per_s": m.cyclotron, "hz": hz[0]},
        "axial": {"rad_per_s": m.axial, "hz": hz[1]},
        "modified_cyclotron": {"rad_per_s": m.modified_cyclotron, "hz": hz[2]},
        "magnetron": {"rad_per_s": m.magnetron, "hz": hz[3]},
        "omega_1": {"rad_per_s": m.omega_1, "hz": hz[4]},
    })
}

pub fn trap(cfg: &RunConfig, format: Format) -> Result<Report> {
    let block = cfg.trap.as_ref().ok_or_else(|| Error::InvalidParameter {
        name: "trap",
        reason: "missing (trap block)".into(),
    })?;
    let axial = block.build()?;
    let plasma = match &block.plasma {
        Some(p) => Some(PlasmaState::new(p.density_cm3 * 1e6, p.temperature)?),
        None => None,
    };
    if let Some(r) = block.rotation_hz {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rotation_hz",
                reason: "must be finite and non-negative".into(),
            });
        }
    }

    let modes = match axial {
        Axial::Electrodes(c) => mode_frequencies(&c)?,
        Axial::Frequency { cyclotron, axial } => {
            let c = ionspin::TrapConfig64::with_geometry_factor(
                block.charge_e * ionspin::constants::ELEMENTARY_CHARGE,
                block.mass,
                block.field.unwrap_or_default(),
                1.0,
                1.0,
            )?;
            debug_assert!((c.cyclotron_frequency() - cyclotron).abs() <= 1e-9 * cyclotron);
            radial_frequencies(&c, axial)?
        }
    };
    let coupling = plasma.map(|p| coupling_constant(&p));
    let rotation = block
        .rotation_hz
        .map(|hz| rotation_frequency_valid(std::f64::consts::TAU * hz, &modes));

    let mut summary = json!({ "modes": modes_json(&modes) });
    if let Some(c) = coupling {
        summary["coupling"] = json!({"gamma": c.gamma, "crystallized": c.crystallized});
    }
    if let Some(v) = rotation {
        summary["rotation_valid"] = json!(v);
    }
    let outputs = match format {
        Format::Json => vec![Output::json("trap.json", &summary)],
        Format::Csv => {
            let mut s = String::from("quantity,rad_per_s,hz\n");
            let hz = modes.in_hz();
            let rows = [
                ("cyclotron", modes.cyclotron, hz[0]),
                ("axial", modes.axial, hz[1]),
                ("modified_cyclotron", modes.modified_cyclotron, hz[2]),
                ("magnetron", modes.magnetron, hz[3]),
                ("omega_1", modes.omega_1, hz[4]),
            ];
            for (name, w, f) in rows {
                writeln!(s, "{name},{w:.12e},{f:.12e}").unwrap();
            }
            let mut out = vec![Output::csv("trap_modes.csv", s)];
            if coupling.is_some() || rotation.is_some() {
                let mut p = String::from("quantity,value\n");
                if let Some(c) = coupling {
                    writeln!(p, "gamma,{:.12e}", c.gamma).unwrap();
                    writeln!(p, "crystallized,{}", c.crystallized).unwrap();
                }
                if let Some(v) = rotation {
                    writeln!(p, "rotation_valid,{v}").unwrap();
                }
                out.push(Output::csv("trap_plasma.csv", p));
            }
            out
        }
    };
    Ok(Report {
        outputs,
        seeds: Vec::new(),
        summary,
    })
}

pub fn coherence(cfg: &RunConfig, seed: u64, format: Format) -> Result<Report> {
    let spectrum = cfg.spectrum()?;
    let sequences = cfg.sequences()?;
    let taus = cfg.taus()?;
    for (_, s) in &sequences {
        for t in &taus {
            s.check_fits(*t)?;
        }
    }
    let oracle_seed = sub_seed(seed, "oracle");
    let ensemble = match &cfg.oracle {
        Some(o) => {
            let mut e = Ensemble::new(spectrum.clone(), o.shots, oracle_seed);
            e.dt = o.dt;
            e.trace_len = o.trace_len;
            if let Some(b) = o.batches {
                e.batches = b;
            }
            if e.shots == 0 || e.batches < 2 || e.batches > e.shots {
                return Err(Error::InvalidParameter {
                    name: "oracle",
                    reason: "need shots ≥ 1 and 2 ≤ batches ≤ shots".into(),
                });
            }
            let sampling = e.sampling(sequences.iter().map(|s| &s.1), taus[0], taus[taus.len() - 1])?;
            TraceSynthesizer::new(&spectrum, sampling.dt, sampling.len)?;
            Some(e)
        }
        None => None,
    };

    let opts = ChiOptions::default();
    let analytic = sequences
        .iter()
        .map(|(_, s)| coherence_curve(s, &taus, &spectrum, &opts))
        .collect::<Result<Vec<_>>>()?;
    let mc = match &ensemble {
        Some(e) => {
            let jobs: Vec<_> = sequences.iter().map(|(_, s)| (s, taus.as_slice())).collect();
            Some(simulate_ensemble(e, &jobs)?)
        }
        None => None,
    };

    let mut curves = Vec::new();
    let mut outputs = Vec::new();
    for (i, (label, seq)) in sequences.iter().enumerate() {
        let a = &analytic[i];
        let m = mc.as_ref().map(|v| &v[i]);
        let t_coh = a.coherence_time().ok();
        curves.push(json!({
            "label": label,
            "record": seq.to_record(),
            "tau": a.tau,
            "chi": a.chi,
            "w": a.w,
            "w_mc": m.map(|c| c.w.clone()),
            "w_mc_se": m.and_then(|c| c.uncertainty.clone()),
            "coherence_time": t_coh,
        }));
        if format == Format::Csv {
            let mut s = String::from("tau,chi,W,half_one_minus_W");
            if m.is_some() {
                s.push_str(",W_mc,W_mc_se");
            }
            s.push('\n');
            let half = a.plotted();
            for k in 0..a.len() {
                write!(s, "{:.12e},{:.12e},{:.12e},{:.12e}", a.tau[k], a.chi[k], a.w[k], half[k]).unwrap();
                if let Some(c) = m {
                    let se = c.uncertainty.as_ref().map_or(f64::NAN, |u| u[k]);
                    write!(s, ",{:.12e},{:.12e}", c.w[k], se).unwrap();
                }
                s.push('\n');
            }
            outputs.push(Output::csv(format!("coherence_{label}.csv"), s));
        }
    }
    let summary = json!({ "curves": curves });
    if format == Format::Json {
        outputs.push(Output::json("coherence.json", &summary));
    }
    Ok(Report {
        outputs,
        seeds: if ensemble.is_some() { vec![("oracle", oracle_seed)] } else { Vec::new() },
        summary,
    })
}

pub fn rb(cfg: &RunConfig, seed: u64, format: Format) -> Result<Report> {
    let block = cfg.rb.as_ref().ok_or_else(|| Error::InvalidParameter {
        name: "rb",
        reason: "missing (benchmarking block)".into(),
    })?;
    let rb_seed = sub_seed(seed, "rb");
    let exp = block.build(rb_seed)?;
    let result = simulate(&exp)?;
    let fit = &result.fit;
    let summary = json!({
        "error_per_gate": fit.error_per_gate,
        "ci": fit.ci,
        "amplitude": fit.amplitude,
        "reduced_chi2": fit.reduced_chi2,
        "residual_rms": fit.residual_rms,
        "seed": rb_seed,
    });
    let outputs = match format {
        Format::Json => {
            let mut all = summary.clone();
            all["lengths"] = json!(result.data.lengths);
            all["mean"] = json!(result.data.mean);
            all["se"] = json!(result.data.se);
            all["runs"] = json!(result.data.records);
            vec![Output::json("rb.json", &all)]
        }
        Format::Csv => {
            let mut runs = Vec::new();
            write_runs_csv(&result.data, &mut runs).map_err(io)?;
            let mut means = String::from("l,mean,se,fit\n");
            let q = 1.0 - 2.0 * fit.error_per_gate;
            for (i, l) in result.data.lengths.iter().enumerate() {
                let model = fit.amplitude * q.powf(*l as f64) + 0.5;
                writeln!(means, "{l},{:.12e},{:.12e},{:.12e}", result.data.mean[i], result.data.se[i], model).unwrap();
            }
            vec![
                Output::csv("rb_runs.csv", utf8(runs)),
                Output::csv("rb_means.csv", means),
                Output::json("rb_summary.json", &summary),
            ]
        }
    };
    Ok(Report {
        outputs,
        seeds: vec![("rb", rb_seed)],
        summary,
    })
}

pub fn optimize_cmd(cfg: &RunConfig, seed: u64, format: Format) -> Result<Report> {
    let block = cfg.optimize.as_ref().ok_or_else(|| Error::InvalidParameter {
        name: "optimize",
        reason: "missing (optimizer block)".into(),
    })?;
    let spectrum = cfg.spectrum()?;
    let opt_seed = sub_seed(seed, "optimize");
    let mut problem = OptimizationProblem::new(block.n, block.tau, spectrum.clone())
        .with_pulse_width(block.pulse_width)
        .with_restarts(block.restarts, opt_seed);
    problem.margin = block.margin;
    if let Some(t) = block.tolerance {
        problem.tolerance = t;
    }
    if let Some(m) = block.max_sweeps {
        problem.max_sweeps = m;
    }
    if let Some(s) = &block.start {
        problem.start = Some(s.build(0)?.1);
    }
    let r = optimize(&problem, &ChiOptions::default())?;
    let record = r.sequence.to_record();
    let summary = json!({
        "record": record,
        "positions": r.sequence.positions(),
        "chi": r.chi,
        "start_chi": r.start_chi,
        "trace": r.trace,
        "sweeps": r.sweeps,
        "converged": r.converged,
        "stalled_at_constraint": r.stalled_at_constraint,
        "evaluations": r.evaluations,
        "tau": block.tau,
        "spectrum": spectrum,
        "seed": opt_seed,
    });
    let outputs = match format {
        Format::Json => vec![Output::json("optimize.json", &summary)],
        Format::Csv => {
            let mut pos = String::from("j,delta\n");
            for (j, d) in r.sequence.positions().iter().enumerate() {
                writeln!(pos, "{},{d:.15e}", j + 1).unwrap();
            }
            let mut trace = String::from("sweep,chi\n");
            for (k, c) in r.trace.iter().enumerate() {
                writeln!(trace, "{k},{c:.15e}").unwrap();
            }
            vec![
                Output::csv("optimize_positions.csv", pos),
                Output::csv("optimize_trace.csv", trace),
                Output {
                    name: "optimized_sequence.txt".into(),
                    body: record + "\n",
                    csv: false,
                },
                Output::json("optimize_summary.json", &summary),
            ]
        }
    };
    Ok(Report {
        outputs,
        seeds: vec![("optimize", opt_seed)],
        summary,
    })
}

pub fn noise(cfg: &RunConfig, seed: u64, format: Format) -> Result<Report> {
    let block = cfg.noise.as_ref().ok_or_else(|| Error::InvalidParameter {
        name: "noise",
        reason: "missing (noise block)".into(),
    })?;
    let spectrum = cfg.spectrum()?;
    if block.traces == 0 {
        return Err(Error::InvalidParameter {
            name: "traces",
            reason: "must be at least 1".into(),
        });
    }
    let synth = TraceSynthesizer::new(&spectrum, block.dt, block.len)?;
    let mut welch = WelchEstimator::new(block.segment, block.dt)?;
    if block.segment > block.len {
        return Err(Error::SegmentTooLong {
            segment: block.segment,
            len: block.len,
        });
    }
    let noise_seed = sub_seed(seed, "noise");
    let mut rng = stream_rng(noise_seed, 0);
    let mut buf = Vec::new();
    let mut first: Option<Vec<f64>> = None;
    let mut done = 0;
    while done < block.traces {
        synth.fill_pair(&mut rng, &mut buf);
        let re: Vec<f64> = buf.iter().map(|z| z.re).collect();
        welch.push(&re)?;
        first.get_or_insert(re);
        done += 1;
        if done < block.traces {
            let im: Vec<f64> = buf.iter().map(|z| z.im).collect();
            welch.push(&im)?;
            done += 1;
        }
    }
    let estimate = welch.finish()?;
    let points = table(&estimate);
    let nyquist = std::f64::consts::PI / block.dt;
    let (lo, hi) = block.fit_band.unwrap_or((points.get(1).map_or(0.0, |p| p.0), nyquist));
    let slope = log_log_slope(points, lo, hi);
    let rms = relative_rms_error(points, &spectrum, lo, hi);
    let summary = json!({
        "slope": slope,
        "relative_rms_error": rms,
        "fit_band": [lo, hi],
        "traces": block.traces,
        "seed": noise_seed,
    });
    let mut outputs = Vec::new();
    match format {
        Format::Json => {
            let mut all = summary.clone();
            all["omega"] = json!(points.iter().map(|p| p.0).collect::<Vec<_>>());
            all["estimate"] = json!(points.iter().map(|p| p.1).collect::<Vec<_>>());
            all["model"] = json!(points.iter().map(|p| spectrum.evaluate(p.0)).collect::<Result<Vec<_>>>()?);
            outputs.push(Output::json("noise.json", &all));
        }
        Format::Csv => {
            let mut s = String::from("omega,S_estimate,S_model\n");
            for (w, e) in points {
                writeln!(s, "{w:.12e},{e:.12e},{:.12e}", spectrum.evaluate(*w)?).unwrap();
            }
            outputs.push(Output::csv("psd.csv", s));
            outputs.push(Output::json("noise_summary.json", &summary));
        }
    }
    if block.write_trace {
        let trace = NoiseTrace {
            dt: block.dt,
            samples: first.unwrap_or_default(),
            seed: noise_seed,
        };
        let mut t = Vec::new();
        write_trace_csv(&mut t, &trace).map_err(io)?;
        outputs.push(Output::csv("trace.csv", utf8(t)));
    }
    Ok(Report {
        outputs,
        seeds: vec![("noise", noise_seed)],
        summary,
    })
}
