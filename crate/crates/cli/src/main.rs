// Copyright 2026 The ionspin Authors
// SPDX-License-Identifier: Apache-2.0

//! `ionspin` command-line front end.
//!
//! Settings come from a JSON config file; `--seed`, `--out` and `--format`
//! override the corresponding config entries. Every run writes
//! `manifest.json` next to its outputs. The manifest is itself a valid
//! config, so `--config <out>/manifest.json` replays the run.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 when a computation
//! fails.

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use ionspin::Error;
use serde_json::json;

use commands::{Format, Report};
use config::RunConfig;

const DEFAULT_OUT: &str = "ionspin-out";

#[derive(Parser)]
#[command(name = "ionspin", version, about = "Trapped-ion spin-qubit dephasing and control toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Penning-trap mode frequencies and plasma coupling.
    Trap(Common),
    /// Analytic and Monte Carlo coherence curves.
    Coherence(Common),
    /// Randomized benchmarking.
    Rb(Common),
    /// Pulse-position optimization.
    Optimize(Common),
    /// Noise synthesis and spectrum estimation round trip.
    Noise(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Global seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Trap(c) => ("trap", c),
            Command::Coherence(c) => ("coherence", c),
            Command::Rb(c) => ("rb", c),
            Command::Optimize(c) => ("optimize", c),
            Command::Noise(c) => ("noise", c),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        2
    } else {
        3
    }
}

fn write_outputs(out: &Path, name: &str, seed: u64, cfg: &RunConfig, report: &Report) -> std::io::Result<()> {
    fs::create_dir_all(out)?;
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let header = format!("# manifest=manifest.json command={name} seed={seed} created={created}\n");
    for o in &report.outputs {
        let body = if o.csv { format!("{header}{}", o.body) } else { o.body.clone() };
        fs::write(out.join(&o.name), body)?;
    }
    let mut manifest = serde_json::to_value(cfg).expect("config serializes");
    manifest["manifest"] = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "created_unix": created,
        "seeds": report.seeds.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "outputs": report.outputs.iter().map(|o| o.name.clone()).collect::<Vec<_>>(),
    });
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )
}

fn run(command: &Command) -> Result<(), (u8, String)> {
    let (name, common) = command.parts();
    let fail = |e: Error| (exit_code(&e), format!("{}: {e}", e.kind()));
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(fail)?,
        None => RunConfig::default(),
    };
    cfg.manifest = None;
    if let Some(s) = common.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    let seed = cfg.seed.unwrap_or(0);
    cfg.seed = Some(seed);
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    cfg.out = Some(out.clone());

    let report = match command {
        Command::Trap(_) => commands::trap(&cfg, common.format),
        Command::Coherence(_) => commands::coherence(&cfg, seed, common.format),
        Command::Rb(_) => commands::rb(&cfg, seed, common.format),
        Command::Optimize(_) => commands::optimize_cmd(&cfg, seed, common.format),
        Command::Noise(_) => commands::noise(&cfg, seed, common.format),
    }
    .map_err(fail)?;
    write_outputs(&out, name, seed, &cfg, &report).map_err(|e| (3, format!("output: {}: {e}", out.display())))?;
    println!("{}", serde_json::to_string(&report.summary).expect("summary serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
