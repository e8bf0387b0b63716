//! Run configuration: a TOML file, a named preset, or a preset overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};

use rip_zeno::{
    build_multispin_model, build_toy_model, EquationVariant, MultispinModelParams, RipModel64, StepScheme,
    ToyModelParams,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Toy(ToyModelParams<f64>),
    Multispin(MultispinModelParams<f64>),
}

impl ModelConfig {
    pub fn build(&self) -> Result<RipModel64, ConfigError> {
        match self {
            Self::Toy(p) => build_toy_model(p),
            Self::Multispin(p) => build_multispin_model(p),
        }
        .map_err(|e| ConfigError::field("model", e.to_string()))
    }
}

/// Either an explicit list or `points` logarithmically spaced values in `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Log(LogGrid),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self, field: &str) -> Result<Vec<f64>, ConfigError> {
        let v = match self {
            Self::Values(v) => v.clone(),
            Self::Log(g) => {
                if !(g.min > 0.0 && g.max > g.min && g.points >= 2) {
                    return Err(ConfigError::field(field, "log grid needs 0 < min < max and points >= 2"));
                }
                let (a, b) = (g.min.ln(), g.max.ln());
                (0..g.points)
                    .map(|i| {
                        if i + 1 == g.points {
                            g.max
                        } else {
                            (a + (b - a) * i as f64 / (g.points - 1) as f64).exp()
                        }
                    })
                    .collect()
            }
        };
        if v.is_empty() {
            return Err(ConfigError::field(field, "grid is empty"));
        }
        if v.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(ConfigError::field(field, "values must be finite and non-negative"));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::field(field, "values must be strictly increasing"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Normalised singlet projector (pure `|S⟩` for the toy model).
    #[default]
    Singlet,
    Triplet,
    /// `I/d`; density-matrix commands only.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub k_grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateConfig {
    /// Total rates to run; defaults to the model's own `k_S + k_T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_values: Option<Vec<f64>>,
    pub t_max: f64,
    #[serde(default = "default_samples")]
    pub n_out: usize,
    #[serde(default = "default_dt_hint")]
    pub dt_hint: f64,
    #[serde(default)]
    pub initial: InitialState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoriesConfig {
    pub t_max: f64,
    pub dt: f64,
    #[serde(default = "default_samples")]
    pub n_out: usize,
    pub n_traj: usize,
    #[serde(default)]
    pub scheme: StepScheme,
    #[serde(default)]
    pub initial: InitialState,
    /// Write per-trajectory files for the first `dump` members.
    #[serde(default)]
    pub dump: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    pub tau_grid: Grid,
    pub t_burn: f64,
    pub t_window: f64,
    pub dt: f64,
    pub n_traj: usize,
    #[serde(default)]
    pub scheme: StepScheme,
    #[serde(default = "triplet")]
    pub initial: InitialState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub k_grid: Grid,
    /// Rates used for the proportionality fit; defaults to `[10, 100]`.
    #[serde(default = "default_fit_range")]
    pub fit_range: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "kominis")]
    pub variant: EquationVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propagate: Option<PropagateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectoriesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn kominis() -> EquationVariant {
    EquationVariant::Kominis
}

fn triplet() -> InitialState {
    InitialState::Triplet
}

fn default_samples() -> usize {
    1001
}

fn default_dt_hint() -> f64 {
    0.01
}

fn default_fit_range() -> [f64; 2] {
    [10.0, 100.0]
}

/// A problem with the configuration, tied to the offending field when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: Some(field.into()), message: message.into() }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self { field: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "{field}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::general(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError::general(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always representable as TOML")
    }

    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or_else(|| ConfigError::field("seed", "required for stochastic commands (set it or pass --seed)"))
    }
}

pub fn require_positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::field(field, format!("must be positive and finite, got {v}")))
    }
}
