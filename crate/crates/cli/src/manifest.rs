//! Records written to `manifest.json`.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Experiment, Range, RunConfig};

/// Expected relation between a measured value and its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum Expect {
    Below {
        bound: f64,
    },
    Above {
        bound: f64,
    },
    AtMost {
        bound: f64,
    },
    AtLeast {
        bound: f64,
    },
    Within {
        lo: f64,
        hi: f64,
    },
    /// measured is 1 for true, 0 for false
    Holds,
}

impl Expect {
    pub fn within(r: Range) -> Self {
        Expect::Within { lo: r.0, hi: r.1 }
    }

    pub fn accepts(&self, x: f64) -> bool {
        match *self {
            Expect::Below { bound } => x < bound,
            Expect::Above { bound } => x > bound,
            Expect::AtMost { bound } => x <= bound,
            Expect::AtLeast { bound } => x >= bound,
            Expect::Within { lo, hi } => x >= lo && x <= hi,
            Expect::Holds => x == 1.0,
        }
    }
}

/// Shortest round-trip form, in exponent notation outside [1e-3, 1e5).
fn num(v: f64) -> String {
    if v != 0.0 && !(1e-3..1e5).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Expect::Below { bound } => write!(f, "< {}", num(bound)),
            Expect::Above { bound } => write!(f, "> {}", num(bound)),
            Expect::AtMost { bound } => write!(f, "≤ {}", num(bound)),
            Expect::AtLeast { bound } => write!(f, "≥ {}", num(bound)),
            Expect::Within { lo, hi } => write!(f, "in [{}, {}]", num(lo), num(hi)),
            Expect::Holds => f.write_str("holds"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Fitted {
    pub slope: Option<f64>,
    pub constant: Option<f64>,
}

/// One tolerance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub probe: String,
    /// Plain-language statement of the property being checked.
    pub claim: String,
    pub params: Value,
    pub fitted: Fitted,
    pub measured: f64,
    pub expected: Expect,
    pub tolerance_pass: bool,
}

impl Probe {
    pub fn new(probe: impl Into<String>, claim: impl Into<String>, measured: f64, expected: Expect) -> Self {
        Self {
            probe: probe.into(),
            claim: claim.into(),
            params: Value::Null,
            fitted: Fitted::default(),
            measured,
            tolerance_pass: expected.accepts(measured),
            expected,
        }
    }

    pub fn holds(probe: impl Into<String>, claim: impl Into<String>, ok: bool) -> Self {
        Self::new(probe, claim, if ok { 1.0 } else { 0.0 }, Expect::Holds)
    }

    pub fn params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    pub fn slope(mut self, slope: f64) -> Self {
        self.fitted.slope = Some(slope);
        self
    }

    pub fn constant(mut self, constant: f64) -> Self {
        self.fitted.constant = Some(constant);
        self
    }

    /// "probe: measured X, expected R".
    pub fn describe(&self) -> String {
        match self.expected {
            Expect::Holds => format!("{}: {}", self.probe, if self.tolerance_pass { "holds" } else { "does not hold" }),
            e => format!("{}: measured {:.6e}, expected {e}", self.probe, self.measured),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesStyle {
    Line,
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub style: SeriesStyle,
    /// Palette index, assigned by [`Plot::with`].
    #[serde(default)]
    pub color: usize,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn line(label: impl Into<String>, x: &[f64], y: &[f64]) -> Self {
        Self { label: label.into(), style: SeriesStyle::Line, color: 0, points: x.iter().copied().zip(y.iter().copied()).collect() }
    }

    pub fn points(label: impl Into<String>, x: &[f64], y: &[f64]) -> Self {
        Self { label: label.into(), style: SeriesStyle::Points, color: 0, points: x.iter().copied().zip(y.iter().copied()).collect() }
    }

    /// exp(intercept) · x^slope over the x-range of `x`.
    pub fn power_law(label: impl Into<String>, x: &[f64], slope: f64, intercept: f64) -> Self {
        let (lo, hi) = x.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        let y = |t: f64| (intercept + slope * t.ln()).exp();
        Self { label: label.into(), style: SeriesStyle::Line, color: 0, points: vec![(lo, y(lo)), (hi, y(hi))] }
    }
}

/// Stored plot data; the SVG is rendered from this alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plot {
    pub file: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub note: Option<String>,
}

impl Plot {
    pub fn loglog(file: &str, title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            file: file.into(),
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: true,
            log_y: true,
            series: Vec::new(),
            note: None,
        }
    }

    pub fn linear(file: &str, title: &str, x_label: &str, y_label: &str) -> Self {
        Self { log_x: false, log_y: false, ..Self::loglog(file, title, x_label, y_label) }
    }

    /// Adds a series in the next palette colour.
    pub fn with(mut self, mut s: Series) -> Self {
        s.color = self.series.iter().map(|s| s.color + 1).max().unwrap_or(0);
        self.series.push(s);
        self
    }

    /// Adds a fitted line in the colour of the previous series.
    pub fn with_fit(mut self, mut s: Series) -> Self {
        s.color = self.series.last().map_or(0, |p| p.color);
        self.series.push(s);
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub experiment: Experiment,
    pub status: Status,
    pub probes: Vec<Probe>,
    pub data: Value,
    pub plots: Vec<Plot>,
    /// Data files written next to the manifest.
    pub files: Vec<String>,
    pub error: Option<String>,
}

impl Record {
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self.probes.iter().filter(|p| !p.tolerance_pass).map(|p| p.describe()).collect();
        if let Some(e) = &self.error {
            out.push(format!("{}: {e}", self.experiment));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub lambda: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionLog {
    pub experiment: Experiment,
    pub matrix: String,
    pub entries: Vec<ConditionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub experiment: Experiment,
    pub probe: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub records: Vec<Record>,
    pub condition_numbers: Vec<ConditionLog>,
    pub checks: Vec<CheckSummary>,
    pub pass: bool,
}

impl Manifest {
    pub fn new(config: RunConfig, records: Vec<Record>, condition_numbers: Vec<ConditionLog>) -> Self {
        let checks: Vec<CheckSummary> = records
            .iter()
            .flat_map(|r| {
                r.probes.iter().map(|p| CheckSummary { experiment: r.experiment, probe: p.probe.clone(), pass: p.tolerance_pass })
            })
            .collect();
        let pass = records.iter().all(|r| r.status == Status::Pass);
        Self { tool: "bscatter".into(), version: env!("CARGO_PKG_VERSION").into(), config, records, condition_numbers, checks, pass }
    }

    pub fn record(&self, e: Experiment) -> Option<&Record> {
        self.records.iter().find(|r| r.experiment == e)
    }

    /// First probe of that name in any record.
    pub fn probe(&self, name: &str) -> Option<&Probe> {
        self.records.iter().flat_map(|r| r.probes.iter()).find(|p| p.probe == name)
    }

    pub fn failures(&self) -> Vec<String> {
        self.records.iter().flat_map(|r| r.failures()).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectations() {
        assert!(Expect::Below { bound: 1e-5 }.accepts(2e-7));
        assert!(!Expect::Below { bound: 1.5 }.accepts(1.5));
        assert!(Expect::AtMost { bound: -2.7 }.accepts(-3.0));
        assert!(Expect::within(Range(1.8, 2.2)).accepts(2.07));
        assert!(!Expect::within(Range(1.99, 2.01)).accepts(2.07));
        assert!(!Expect::Holds.accepts(0.0));
        assert!(!Expect::AtLeast { bound: 1.8 }.accepts(f64::NAN));
    }

    #[test]
    fn failing_probe_names_values() {
        let p = Probe::new("m2_slope", "x", 2.072, Expect::within(Range(1.99, 2.01)));
        assert!(!p.tolerance_pass);
        assert_eq!(p.describe(), "m2_slope: measured 2.072000e0, expected in [1.99, 2.01]");
        assert_eq!(Expect::Below { bound: 1e-8 }.to_string(), "< 1e-8");
    }
}
