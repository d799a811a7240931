//! Experiment configuration: a versioned JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub system: SystemSpec,
    pub measure: MeasureSpec,
    pub query: QuerySpec,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub expect: Option<Expectation>,
    /// Overrides the default `3/√n` verdict threshold.
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    CircleRotationFlow {
        #[serde(default = "one")]
        omega: f64,
    },
    ShiftSuspension {
        #[serde(default = "default_radius")]
        radius: u8,
        #[serde(default = "one")]
        height: f64,
    },
    ToralSuspension {
        #[serde(default = "cat")]
        matrix: [[i64; 2]; 2],
        #[serde(default = "one")]
        height: f64,
    },
    IrrationalRotationSuspension {
        /// Defaults to the golden rotation number.
        #[serde(default)]
        angle: Option<f64>,
        #[serde(default = "one")]
        height: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_radius() -> u8 {
    20
}

fn cat() -> [[i64; 2]; 2] {
    [[2, 1], [1, 1]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// Bernoulli(`p`) symbols; shift systems only.
    Bernoulli {
        atoms: usize,
        #[serde(default = "half")]
        p: f64,
        #[serde(default = "default_sub_atoms")]
        sub_atoms: usize,
    },
    /// Reference measure of the base (grid on the circle, uniform on the torus, Bernoulli(½) on
    /// the shift), suspended with `sub_atoms` per fiber.
    Lebesgue {
        atoms: usize,
        #[serde(default = "default_sub_atoms")]
        sub_atoms: usize,
    },
    /// Base reference measure placed on the section `X × {0}`.
    Section { atoms: usize },
    /// Equal atoms along one orbit segment starting at the first reference atom.
    OrbitSegment { atoms: usize, length: f64 },
    /// Atom table on the flow's space.
    AtomsFile {
        path: PathBuf,
        #[serde(default)]
        format: AtomFormat,
    },
}

fn half() -> f64 {
    0.5
}

fn default_sub_atoms() -> usize {
    8
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub delta_grid: Vec<f64>,
    pub horizon: f64,
    pub grid_step: f64,
    #[serde(default = "default_centers")]
    pub centers: usize,
    /// Sampled pairs for the inclusion checks.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Time `T` of the time-`T` map checks.
    #[serde(default = "default_times")]
    pub map_times: Vec<f64>,
    /// Periods for the aperiodicity check.
    #[serde(default = "default_periods")]
    pub periods: Vec<f64>,
    /// Orbit segment half-length for the orbit-tube check.
    #[serde(default = "default_orbit_horizon")]
    pub orbit_horizon: f64,
}

fn default_centers() -> usize {
    100
}

fn default_pairs() -> usize {
    1000
}

fn default_times() -> Vec<f64> {
    vec![1.0, -1.0]
}

fn default_periods() -> Vec<f64> {
    vec![1.0, 2.0]
}

fn default_orbit_horizon() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Expansivity-constant search, compared with `expect`.
    Expansivity,
    A1,
    A2,
    A4,
    General2,
    General3,
    ThmA2,
    Lele,
    Suspension1,
    C1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub verdict: ExpectedVerdict,
    #[serde(default)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedVerdict {
    Expansive,
    NotExpansive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_csv")]
    pub csv: String,
}

fn default_report() -> String {
    "report.json".into()
}

fn default_csv() -> String {
    "per_delta.csv".into()
}

/// A parsed config with the hash of its source bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub hash: String,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
    let mut loaded = parse(&bytes)?;
    loaded.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(loaded)
}

pub fn parse(bytes: &[u8]) -> Result<LoadedConfig, ConfigError> {
    let config: ExperimentConfig = serde_json::from_slice(bytes).map_err(|e| ConfigError::new(&field_of(&e), e.to_string()))?;
    config.validate()?;
    Ok(LoadedConfig { config, hash: hex::encode(Sha256::digest(bytes)), base_dir: PathBuf::new() })
}

/// Best-effort name of the field a serde error points at.
fn field_of(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["missing field `", "unknown field `", "unknown variant `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    "config".into()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        let q = &self.query;
        if q.delta_grid.is_empty() {
            return Err(ConfigError::new("query.delta_grid", "must not be empty"));
        }
        if q.delta_grid.iter().any(|d| !d.is_finite()) || q.delta_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ConfigError::new("query.delta_grid", "must be finite and strictly ascending"));
        }
        let (floor, diameter) = self.system.radius_bounds();
        if q.delta_grid[0] < floor || *q.delta_grid.last().expect("nonempty") > diameter {
            return Err(ConfigError::new("query.delta_grid", format!("entries must lie in [{floor}, {diameter}]")));
        }
        if !(q.horizon > 0.0 && q.horizon.is_finite()) {
            return Err(ConfigError::new("query.horizon", "must be positive"));
        }
        if !(q.grid_step > 0.0) || ((q.horizon / q.grid_step) - (q.horizon / q.grid_step).round()).abs() > 1e-9 {
            return Err(ConfigError::new("query.grid_step", "must be positive and divide query.horizon"));
        }
        if q.centers == 0 {
            return Err(ConfigError::new("query.centers", "must be at least 1"));
        }
        if q.map_times.iter().any(|t| *t == 0.0 || !t.is_finite()) {
            return Err(ConfigError::new("query.map_times", "times must be finite and nonzero"));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(ConfigError::new("epsilon", "must lie in (0, 1)"));
            }
        }
        self.measure.validate(&self.system)?;
        if self.checks.contains(&CheckKind::Expansivity) && self.expect.is_none() {
            return Err(ConfigError::new("expect", "required when the expansivity check is requested"));
        }
        Ok(())
    }
}

impl SystemSpec {
    /// Smallest admissible radius and the space diameter.
    pub fn radius_bounds(&self) -> (f64, f64) {
        match self {
            SystemSpec::CircleRotationFlow { .. } => (0.0, 0.5),
            SystemSpec::ShiftSuspension { radius, .. } => (2f64.powi(-i32::from(*radius)), 1.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn is_suspension(&self) -> bool {
        !matches!(self, SystemSpec::CircleRotationFlow { .. })
    }
}

impl MeasureSpec {
    fn validate(&self, system: &SystemSpec) -> Result<(), ConfigError> {
        let atoms = match self {
            MeasureSpec::Bernoulli { atoms, p, sub_atoms } => {
                if !matches!(system, SystemSpec::ShiftSuspension { .. }) {
                    return Err(ConfigError::new("measure.kind", "bernoulli needs a shift system"));
                }
                if !(0.0..=1.0).contains(p) {
                    return Err(ConfigError::new("measure.p", "must lie in [0, 1]"));
                }
                check_sub_atoms(*sub_atoms)?;
                *atoms
            }
            MeasureSpec::Lebesgue { atoms, sub_atoms } => {
                check_sub_atoms(*sub_atoms)?;
                *atoms
            }
            MeasureSpec::Section { atoms } => {
                if !system.is_suspension() {
                    return Err(ConfigError::new("measure.kind", "section measures need a suspension system"));
                }
                *atoms
            }
            MeasureSpec::OrbitSegment { atoms, length } => {
                if !(*length > 0.0) {
                    return Err(ConfigError::new("measure.length", "must be positive"));
                }
                *atoms
            }
            MeasureSpec::AtomsFile { .. } => 1,
        };
        if atoms == 0 {
            return Err(ConfigError::new("measure.atoms", "must be at least 1"));
        }
        Ok(())
    }
}

fn check_sub_atoms(m: usize) -> Result<(), ConfigError> {
    if m == 0 {
        return Err(ConfigError::new("measure.sub_atoms", "must be at least 1"));
    }
    Ok(())
}
