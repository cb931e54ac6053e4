//! Config-driven runner for the scattering experiments.
//!
//! `run` executes every experiment of a [`RunConfig`], writes
//! `manifest.json`, `timings.json`, the CSV tables, the SVG figures and
//! `report.md`, and returns the manifest. Wall-clock timings are kept out of
//! the manifest so that repeated runs produce identical bytes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod output;

use std::path::Path;
use std::time::Instant;

use anyhow::{Context as _, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use config::{ConfigError, Experiment, RunConfig, Tolerances};
pub use manifest::{Manifest, Probe, Record, Status};

/// Exit code for a run whose checks all passed.
pub const EXIT_PASS: i32 = 0;
/// Exit code when a probe is out of tolerance or an experiment failed.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub experiment: Experiment,
    pub seconds: f64,
}

/// Runs the experiments without writing the manifest.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<(Manifest, Vec<Timing>)> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut ctx = experiments::Context::new(cfg, out);
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for &e in &cfg.experiments {
        let t0 = Instant::now();
        let record = match experiments::run_experiment(&mut ctx, e) {
            Ok(o) => {
                let status = if o.probes.iter().all(|p| p.tolerance_pass) { Status::Pass } else { Status::Fail };
                Record { experiment: e, status, probes: o.probes, data: o.data, plots: o.plots, files: o.files, error: None }
            }
            Err(err) => Record {
                experiment: e,
                status: Status::Error,
                probes: Vec::new(),
                data: Value::Null,
                plots: Vec::new(),
                files: Vec::new(),
                error: Some(format!("{err:#}")),
            },
        };
        timings.push(Timing { experiment: e, seconds: t0.elapsed().as_secs_f64() });
        records.push(record);
    }
    let conditions = std::mem::take(&mut ctx.conditions);
    Ok((Manifest::new(cfg.clone(), records, conditions), timings))
}

/// Runs the config and writes every artefact into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    let (m, timings) = execute(cfg, out)?;
    write_file(&out.join("manifest.json"), &m.to_json())?;
    write_file(&out.join("timings.json"), &(serde_json::to_string_pretty(&timings)? + "\n"))?;
    output::emit_report(&m, out)?;
    Ok(m)
}

/// Re-renders report.md and the figures next to an existing manifest.
pub fn report(manifest_path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(manifest_path).with_context(|| format!("cannot read {}", manifest_path.display()))?;
    let m: Manifest = serde_json::from_str(&text).with_context(|| format!("{} is not a manifest", manifest_path.display()))?;
    let dir = manifest_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    output::emit_report(&m, dir)?;
    Ok(m)
}

pub fn exit_code(m: &Manifest) -> i32 {
    if m.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
