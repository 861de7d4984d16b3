//! JSON scenario files. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Family, ModelSpec};

pub const DEFAULT_STEPS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Seed for randomized checks; trajectories themselves are deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub capacity: Option<CapacityConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Window length in units of `1/λ`; model-dependent default when absent.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { t_max: None, steps: DEFAULT_STEPS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    /// File stem; defaults to the model label.
    #[serde(default)]
    pub name: Option<String>,
    /// Append one `p_k` column per battery level.
    #[serde(default)]
    pub populations: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_dir(), name: None, populations: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative gap below which battery eigenvalues merge into one level.
    #[serde(default = "default_level_tol")]
    pub level_rel_tol: f64,
    /// Largest population allowed in the top two Fock levels.
    #[serde(default = "default_leak")]
    pub fock_leak: f64,
}

fn default_level_tol() -> f64 {
    crate::numerics::DEFAULT_LEVEL_TOL
}

fn default_leak() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { level_rel_tol: default_level_tol(), fock_leak: default_leak() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    #[serde(default = "default_beta_min")]
    pub beta_min: f64,
    #[serde(default = "default_beta_max")]
    pub beta_max: f64,
    #[serde(default = "default_beta_points")]
    pub points: usize,
    /// Entropies in bits at which to report `E_min`, `E_max` and `C(S)`.
    #[serde(default)]
    pub s_targets: Vec<f64>,
}

fn default_beta_min() -> f64 {
    -10.0
}
fn default_beta_max() -> f64 {
    10.0
}
fn default_beta_points() -> usize {
    201
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self { beta_min: default_beta_min(), beta_max: default_beta_max(), points: default_beta_points(), s_targets: vec![] }
    }
}

/// Default window in units of `1/λ`.
pub fn default_t_max(family: &Family) -> f64 {
    match family {
        Family::Parallel | Family::Global | Family::Hybrid { .. } => 1.2 * std::f64::consts::FRAC_PI_2,
        Family::JwChain(_) => 10.0,
        Family::Lmg { .. } => 6.0,
        Family::Dicke { .. } => 3.0,
    }
}

impl ScenarioConfig {
    pub fn new(model: ModelSpec) -> Self {
        Self {
            model,
            time: TimeConfig::default(),
            sweep: None,
            outputs: OutputConfig::default(),
            seed: 0,
            tolerances: Tolerances::default(),
            capacity: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.time.steps < 2 {
            return Err(Error::Config(format!("time.steps must be at least 2, got {}", self.time.steps)));
        }
        if let Some(t) = self.time.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("time.t_max must be positive, got {t}")));
            }
        }
        if let Some(s) = &self.sweep {
            if s.n_values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("sweep.n_values must be strictly increasing".into()));
            }
            if s.n_values.len() < 4 {
                return Err(Error::Config("sweep.n_values needs at least 4 entries".into()));
            }
        }
        if !(self.tolerances.level_rel_tol >= 0.0) || !(self.tolerances.fock_leak > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        self.model.validate().map_err(|e| Error::Config(format!("model: {e}")))
    }

    /// Window length in absolute time units.
    pub fn t_max_abs(&self) -> f64 {
        self.time.t_max.unwrap_or_else(|| default_t_max(&self.model.family)) / self.model.lambda
    }

    pub fn with_n(&self, n: usize) -> Self {
        let mut c = self.clone();
        c.model.n = n;
        c
    }

    pub fn stem(&self) -> String {
        self.outputs.name.clone().unwrap_or_else(|| format!("{}_N{}", self.model.family.label(), self.model.n))
    }
}
