//! Acceptance run: the default config twice, one line per criterion.
//!
//! Bounds are pinned here rather than read from the config, so a loosened
//! tolerance in `configs/default.json` cannot turn a line green.

use std::io::Write;
use std::path::{Path, PathBuf};

use bscatter_cli::{Experiment, Manifest, RunConfig, Timing};

const MEXPAND_SLOPE: (f64, f64) = (1.8, 2.2);
const MEXPAND_NODES: u64 = 800;
const ROUTE_GAP: f64 = 1e-5;
const LAP_SLOPE: f64 = -2.7;
const A00_GAP: f64 = 1e-8;
const LOW_EXPONENT: f64 = 1.8;
const LOW_GROWTH: f64 = 2.0;
const NEGCTL_EXPONENT: f64 = 1.5;
const HIGH_EXPONENT: f64 = 2.7;
const SCHUR_RATIO: f64 = 0.75;
const OSC_SLOPE: f64 = -1.9;
const L2_BETA2: (f64, f64) = (-1.1, -0.9);
const L2_BETA1: (f64, f64) = (-0.6, -0.4);
const HILBERT_K: f64 = 30.0;
const HILBERT_REFINE: f64 = 0.1;
const DISP_SLOPE: (f64, f64) = (-0.8, -0.7);
const DISP_COLLAPSE: f64 = 0.02;
const FREE_LIMIT: f64 = 1e-6;
const ISOMETRY: f64 = 0.05;
const INTERTWINING: f64 = 5e-2;
const FIVE_MIN: f64 = 300.0;
const THIRTY_MIN: f64 = 1800.0;

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json")
}

struct Run {
    manifest: Manifest,
    bytes: Vec<u8>,
    timings: Vec<Timing>,
}

fn run_once(cfg: &RunConfig) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let manifest = bscatter_cli::run(cfg, out).expect("run completes");
    let bytes = std::fs::read(out.join("manifest.json")).unwrap();
    let timings = serde_json::from_slice(&std::fs::read(out.join("timings.json")).unwrap()).unwrap();
    Run { manifest, bytes, timings }
}

fn measured(m: &Manifest, probe: &str) -> f64 {
    m.probe(probe).unwrap_or_else(|| panic!("missing probe {probe}")).measured
}

fn seconds(t: &[Timing], e: Experiment) -> f64 {
    t.iter().find(|t| t.experiment == e).map(|t| t.seconds).unwrap_or(f64::INFINITY)
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

#[test]
fn acceptance() {
    let cfg = RunConfig::load(&default_config()).expect("default config loads");
    assert_eq!(cfg.experiments.len(), Experiment::ALL.len());
    let first = run_once(&cfg);
    let second = run_once(&cfg);
    let m = &first.manifest;
    let t = &first.timings;
    let mut lines: Vec<(usize, bool, String)> = Vec::new();

    let slope = measured(m, "m2_slope");
    let nodes = m.record(Experiment::Mexpand).and_then(|r| r.data["nodes"].as_u64()).unwrap_or(0);
    let secs = seconds(t, Experiment::Mexpand);
    lines.push((
        1,
        within(slope, MEXPAND_SLOPE) && nodes >= MEXPAND_NODES && secs < FIVE_MIN,
        format!("M₂ slope {slope:.4} on {nodes} nodes in {secs:.1} s"),
    ));

    let gaps: Vec<f64> = ["route_difference_0.05", "route_difference_0.7", "route_difference_2"].iter().map(|p| measured(m, p)).collect();
    lines.push((2, gaps.iter().all(|g| *g < ROUTE_GAP), format!("route differences {}", list(&gaps))));

    let lap = measured(m, "lap_slope");
    lines.push((3, lap <= LAP_SLOPE, format!("weighted resolvent slope {lap:.4}")));

    let a00 = measured(m, "a00_route_agreement");
    lines.push((4, a00 < A00_GAP, format!("A₀,₀ relative gap {a00:.2e}")));

    let exps: Vec<f64> = ["low_Q_exponent", "low_M1_exponent", "low_err_exponent"].iter().map(|p| measured(m, p)).collect();
    let growth: Vec<f64> =
        ["low_Q_constant_growth", "low_M1_constant_growth", "low_err_constant_growth"].iter().map(|p| measured(m, p)).collect();
    let negctl = measured(m, "low_negctl_exponent");
    lines.push((
        5,
        exps.iter().all(|e| *e >= LOW_EXPONENT) && growth.iter().all(|g| *g < LOW_GROWTH) && negctl < NEGCTL_EXPONENT,
        format!("exponents {exps:.3?}, constant growth {growth:.3?}, control {negctl:.3}"),
    ));

    let high = measured(m, "high_remainder_exponent");
    let schur = measured(m, "high_schur_saturation");
    lines.push((
        6,
        high >= HIGH_EXPONENT && schur < SCHUR_RATIO,
        format!("remainder exponent {high:.3}, Schur increment ratio {schur:.3}"),
    ));

    let osc: Vec<f64> =
        ["oscillatory_lambda", "oscillatory_lambda_squared", "oscillatory_lambda_exp"].iter().map(|p| measured(m, p)).collect();
    lines.push((7, osc.iter().all(|s| *s <= OSC_SLOPE), format!("oscillatory slopes {osc:.3?}")));

    let (b2, b1) = (measured(m, "l2_row_beta2"), measured(m, "l2_row_beta1"));
    lines.push((8, within(b2, L2_BETA2) && within(b1, L2_BETA1), format!("row slopes {b2:.4} (β = 2), {b1:.4} (β = 1)")));

    let geometry = measured(m, "hilbert_is_geometry") == 1.0;
    let kdom = measured(m, "hilbert_k_domination");
    let refine: Vec<f64> =
        ["hilbert_refinement_p4_3", "hilbert_refinement_p2", "hilbert_refinement_p4"].iter().map(|p| measured(m, p)).collect();
    lines.push((
        9,
        geometry && kdom <= HILBERT_K && refine.iter().all(|r| *r <= HILBERT_REFINE),
        format!("I_s geometry {geometry}, K-piece ratio {kdom:.3}, refinement changes {}", list(&refine)),
    ));

    let ds = measured(m, "dispersive_slope");
    let dc = measured(m, "dispersive_collapse");
    let secs = seconds(t, Experiment::Dispersive);
    lines.push((
        10,
        within(ds, DISP_SLOPE) && dc <= DISP_COLLAPSE && secs < FIVE_MIN,
        format!("dispersive slope {ds:.4}, collapse {dc:.1e}, {secs:.1} s"),
    ));

    let free = measured(m, "wave_free_limit");
    let iso = measured(m, "wave_isometry");
    let inter = measured(m, "wave_intertwining");
    let secs = seconds(t, Experiment::Waveapply);
    lines.push((
        11,
        free < FREE_LIMIT && iso <= ISOMETRY && inter < INTERTWINING && secs < THIRTY_MIN,
        format!("free limit {free:.1e}, isometry defect {iso:.1e}, intertwining {inter:.1e}, {secs:.1} s"),
    ));

    let same = first.bytes == second.bytes;
    lines.push((12, same, format!("manifests bit-identical across runs: {same} ({} bytes)", first.bytes.len())));

    let mut err = std::io::stderr().lock();
    for (k, ok, what) in &lines {
        writeln!(err, "criterion {k:>2}: {} {what}", if *ok { "PASS" } else { "FAIL" }).unwrap();
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
    assert!(m.pass, "manifest reports failures: {:?}", m.failures());
}
