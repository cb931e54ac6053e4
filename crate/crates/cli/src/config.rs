//! Run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bscatter_core::m_matrix::Lambda0Policy;
use bscatter_core::Potential;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Mexpand,
    Regularity,
    ResolventXcheck,
    Lowkernels,
    Highkernels,
    A00,
    Hilbert,
    Bounds,
    Dispersive,
    Waveapply,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Mexpand,
        Experiment::Regularity,
        Experiment::ResolventXcheck,
        Experiment::Lowkernels,
        Experiment::Highkernels,
        Experiment::A00,
        Experiment::Hilbert,
        Experiment::Bounds,
        Experiment::Dispersive,
        Experiment::Waveapply,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Mexpand => "mexpand",
            Experiment::Regularity => "regularity",
            Experiment::ResolventXcheck => "resolvent_xcheck",
            Experiment::Lowkernels => "lowkernels",
            Experiment::Highkernels => "highkernels",
            Experiment::A00 => "a00",
            Experiment::Hilbert => "hilbert",
            Experiment::Bounds => "bounds",
            Experiment::Dispersive => "dispersive",
            Experiment::Waveapply => "waveapply",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownExperiment(pub String);

impl fmt::Display for UnknownExperiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown experiment: {}", self.0)
    }
}

impl std::error::Error for UnknownExperiment {}

impl FromStr for Experiment {
    type Err = UnknownExperiment;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| UnknownExperiment(s.to_string()))
    }
}

impl Serialize for Experiment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Experiment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub radius: f64,
    pub resolution: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { radius: 6.0, resolution: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    #[serde(default)]
    pub lambda0: Lambda0Policy,
}

/// Closed interval [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range(pub f64, pub f64);

impl Range {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.0 && x <= self.1
    }
}

/// Acceptance tolerances; every field can be overridden from the config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub mexpand_slope: Range,
    pub resolvent_xcheck: f64,
    pub lap_slope: f64,
    pub a00_agreement: f64,
    pub low_exponent: f64,
    pub low_negative_control: f64,
    pub constant_growth: f64,
    pub high_exponent: f64,
    pub high_integrand_slope: f64,
    pub born_cauchy_slope: f64,
    pub oscillatory_slope: f64,
    pub l2_slope_beta2: Range,
    pub l2_slope_beta1: Range,
    pub hilbert_refinement: f64,
    pub dispersive_slope: Range,
    pub dispersive_collapse: f64,
    pub unitarity: f64,
    pub free_limit: f64,
    pub isometry: f64,
    pub intertwining: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mexpand_slope: Range(1.8, 2.2),
            resolvent_xcheck: 1e-5,
            lap_slope: -2.7,
            a00_agreement: 1e-8,
            low_exponent: 1.8,
            low_negative_control: 1.5,
            constant_growth: 2.0,
            high_exponent: 2.7,
            high_integrand_slope: -3.7,
            born_cauchy_slope: -0.8,
            oscillatory_slope: -1.9,
            l2_slope_beta2: Range(-1.1, -0.9),
            l2_slope_beta1: Range(-0.6, -0.4),
            hilbert_refinement: 0.1,
            dispersive_slope: Range(-0.8, -0.7),
            dispersive_collapse: 0.02,
            unitarity: 1e-3,
            free_limit: 1e-6,
            isometry: 0.05,
            intertwining: 5e-2,
        }
    }
}

/// Sizes of the sweeps; the defaults reproduce the reference run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Ball-grid resolution for the low-energy kernels.
    pub low_resolution: usize,
    /// Radii per low-energy sweep.
    pub low_points: usize,
    /// Directions per radius in the low-energy sweep.
    pub low_directions: usize,
    /// Inputs drawn for the Hilbert suite.
    pub hilbert_inputs: usize,
    /// Upper end of the high-energy λ-integration.
    pub lambda_max: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { low_resolution: 2, low_points: 10, low_directions: 6, hilbert_inputs: 50, lambda_max: 40.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Potential,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub cutoff: CutoffSpec,
    pub experiments: Vec<Experiment>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub sweeps: SweepSpec,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("bscatter-out")
}

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Parse(String),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(p, e) => write!(f, "cannot read {}: {e}", p.display()),
            ConfigError::Parse(m) | ConfigError::Invalid(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            // serde_json appends the position; keep the validation message first
            let msg = e.to_string();
            match msg.find("unknown experiment: ") {
                Some(i) => ConfigError::Parse(msg[i..].split(" at line").next().unwrap_or(&msg[i..]).to_string()),
                None => ConfigError::Parse(format!("config: {msg}")),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.potential.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.grid.radius > 0.0) || self.grid.resolution == 0 {
            return Err(ConfigError::Invalid("grid needs a positive radius and resolution".into()));
        }
        if let Lambda0Policy::Fixed(l) = self.cutoff.lambda0 {
            if !(l > 0.0) || !l.is_finite() {
                return Err(ConfigError::Invalid(format!("lambda0 must be positive, got {l}")));
            }
        }
        let s = &self.sweeps;
        if s.low_resolution == 0 || s.low_points < 6 || s.low_directions == 0 || s.hilbert_inputs == 0 || !(s.lambda_max > 1.0) {
            return Err(ConfigError::Invalid("sweeps: need low_points ≥ 6 and positive sizes".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert_eq!("fourier".parse::<Experiment>().unwrap_err().to_string(), "unknown experiment: fourier");
    }

    #[test]
    fn minimal_config_parses() {
        let c = RunConfig::from_json(r#"{"potential": {"name": "gaussian_well", "params": {"c": 0.1}}, "experiments": ["regularity"]}"#)
            .unwrap();
        assert_eq!(c.experiments, vec![Experiment::Regularity]);
        assert_eq!(c.cutoff.lambda0, Lambda0Policy::default());
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn unknown_experiment_is_named() {
        let e = RunConfig::from_json(r#"{"potential": {"name": "gaussian_well", "params": {"c": 0.1}}, "experiments": ["fourier"]}"#)
            .unwrap_err();
        assert_eq!(e.to_string(), "unknown experiment: fourier");
    }

    #[test]
    fn fixed_cutoff_and_overrides() {
        let c = RunConfig::from_json(
            r#"{"potential": {"name": "bump", "params": {"c": 1.0}}, "experiments": [], "cutoff": {"lambda0": 0.05},
                "tolerances": {"mexpand_slope": [1.99, 2.01]}}"#,
        )
        .unwrap();
        assert_eq!(c.cutoff.lambda0, Lambda0Policy::Fixed(0.05));
        assert_eq!(c.tolerances.mexpand_slope, Range(1.99, 2.01));
        assert_eq!(c.tolerances.lap_slope, -2.7);
    }
}
