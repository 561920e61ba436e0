//! Experiment configuration: one JSON document per run.
//!
//! Parsing is strict. Unknown keys are rejected and every error carries the
//! line of the offending key when it can be located.

use std::fmt;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use erosion_core::dynamics::LipschitzEstimator;
use erosion_core::gap_bound::DEFAULT_EPSILON;
use erosion_core::geometry::ConvexObstacle;
use erosion_core::montecarlo::{InputSampler, ScaleSchedule};
use erosion_core::verifier::{ErosionSchedule, InitialSet};

/// Error with a source position.
#[derive(Debug)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{l}:{c}: {}", self.origin, self.message),
            (Some(l), None) => write!(f, "{}:{l}: {}", self.origin, self.message),
            _ => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Model selection; `name` picks a registry entry, the remaining keys are
/// that entry's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    #[serde(flatten)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    Gaussian {
        variance: f64,
        #[serde(default)]
        step_scale: Option<ScaleSchedule>,
    },
    UniformBall {
        radius: f64,
        #[serde(default)]
        step_scale: Option<ScaleSchedule>,
    },
    ScaledRademacher {
        scale: f64,
        #[serde(default)]
        step_scale: Option<ScaleSchedule>,
    },
    /// Uniform on the sphere of `radius`, a bounded zero-mean law.
    SphereSurface {
        radius: f64,
        #[serde(default)]
        step_scale: Option<ScaleSchedule>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafeSetConfig {
    #[serde(default)]
    pub obstacles: Vec<ConvexObstacle>,
    /// Coordinates the obstacles live on; all coordinates when absent.
    #[serde(default)]
    pub spatial_coords: Option<Vec<usize>>,
    /// Shortcut for `C = [-R, R]` on a one-dimensional state.
    #[serde(default)]
    pub interval_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_inflation")]
    pub inflation: f64,
    #[serde(default)]
    pub seed: u64,
    /// Added to the tube radius to size the sampling region.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_samples() -> usize {
    2000
}

fn default_inflation() -> f64 {
    LipschitzEstimator::default().inflation
}

fn default_margin() -> f64 {
    erosion_core::benchmarks::UNICYCLE_REGION_MARGIN
}

impl EstimateConfig {
    pub fn estimator(&self) -> LipschitzEstimator {
        LipschitzEstimator {
            samples: self.samples,
            inflation: self.inflation,
            seed: self.seed,
        }
    }
}

/// Where `L_t` comes from when the model has no analytic gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LipschitzConfig {
    Constant(f64),
    PerStep(Vec<f64>),
    Estimate { estimate: EstimateConfig },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    #[default]
    ReachTube,
    Barrier,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierConfig {
    /// Registered candidate name.
    pub candidate: String,
    /// Radius of `{h ≥ 0}` for interval candidates; defaults to just inside
    /// `R - r_m`.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub spacing: Option<f64>,
    #[serde(default)]
    pub region: Option<BoxConfig>,
    #[serde(default)]
    pub input_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Explicit values or an inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl GridConfig {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridConfig::Values(v) => v.clone(),
            GridConfig::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Vec::new();
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + step * i as f64).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    /// Defaults to the model's own noise when it has one.
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub safe_set: SafeSetConfig,
    /// Defaults to the origin.
    #[serde(default)]
    pub initial_set: Option<InitialSet>,
    pub horizon: usize,
    pub delta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Force the general constants even for `n = 1`.
    #[serde(default)]
    pub scalar_mode: Option<bool>,
    #[serde(default)]
    pub epsilon1: Option<f64>,
    #[serde(default)]
    pub epsilon2: Option<f64>,
    #[serde(default)]
    pub lipschitz: Option<LipschitzConfig>,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub erosion: ErosionSchedule,
    #[serde(default)]
    pub barrier: Option<BarrierConfig>,
    #[serde(default)]
    pub nominal_input: Option<Vec<f64>>,
    #[serde(default = "default_inputs")]
    pub inputs: InputSampler,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Safe radii for failure sweeps and threshold tables.
    #[serde(default)]
    pub r_grid: Option<GridConfig>,
    /// Add a Monte Carlo column to the threshold table.
    #[serde(default)]
    pub simulate_threshold: bool,
    /// Paired trajectories written by `simulate`.
    #[serde(default)]
    pub trajectories: usize,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_inputs() -> InputSampler {
    InputSampler::Uniform
}

fn default_trials() -> usize {
    100_000
}

fn default_confidence() -> f64 {
    0.95
}

/// Line and column of the first `"key":` in `text`, 1-based.
pub fn locate_key(text: &str, key: &str) -> Option<(usize, usize)> {
    let quoted = format!("\"{key}\"");
    let mut from = 0;
    while let Some(pos) = text[from..].find(&quoted) {
        let at = from + pos;
        let rest = text[at + quoted.len()..].trim_start();
        if rest.starts_with(':') {
            let line = text[..at].matches('\n').count() + 1;
            let col = at - text[..at].rfind('\n').map_or(0, |i| i + 1) + 1;
            return Some((line, col));
        }
        from = at + quoted.len();
    }
    None
}

/// A parsed config with the text it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub text: String,
    pub origin: String,
}

impl LoadedConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            origin: origin.to_string(),
            line: Some(e.line()).filter(|l| *l > 0),
            column: Some(e.column()).filter(|c| *c > 0),
            message: e.to_string(),
        })?;
        let loaded = Self {
            config,
            text: text.to_string(),
            origin: origin.to_string(),
        };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Self::parse(&text, &path.display().to_string())?)
    }

    /// Error pointing at `key`.
    pub fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let pos = locate_key(&self.text, key);
        ConfigError {
            origin: self.origin.clone(),
            line: pos.map(|p| p.0),
            column: pos.map(|p| p.1),
            message: format!("`{key}`: {}", message.into()),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        if c.horizon == 0 {
            return Err(self.error("horizon", "must be at least 1"));
        }
        if !(c.delta > 0.0 && c.delta <= 1.0) {
            return Err(self.error("delta", format!("{} is outside (0, 1]", c.delta)));
        }
        if !(c.epsilon > 0.0 && c.epsilon < 1.0) {
            return Err(self.error("epsilon", format!("{} is outside (0, 1)", c.epsilon)));
        }
        if c.epsilon1.is_some() != c.epsilon2.is_some() {
            return Err(self.error(
                if c.epsilon1.is_some() { "epsilon1" } else { "epsilon2" },
                "epsilon1 and epsilon2 must be overridden together",
            ));
        }
        if c.trials == 0 {
            return Err(self.error("trials", "must be at least 1"));
        }
        if !(c.confidence > 0.0 && c.confidence < 1.0) {
            return Err(self.error("confidence", "must lie in (0, 1)"));
        }
        if let Some(r) = c.safe_set.interval_radius {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(self.error("interval_radius", "must be finite and nonnegative"));
            }
            if !c.safe_set.obstacles.is_empty() {
                return Err(self.error("interval_radius", "cannot be combined with obstacles"));
            }
        }
        if let Some(grid) = &c.r_grid {
            let v = grid.values();
            if v.is_empty() {
                return Err(self.error("r_grid", "must contain at least one radius"));
            }
            if v.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
                return Err(self.error("r_grid", "radii must be finite and nonnegative"));
            }
        }
        if c.method == MethodConfig::Barrier && c.barrier.is_none() {
            return Err(self.error("method", "barrier method needs a `barrier` section"));
        }
        if let Some(init) = &c.initial_set {
            init.validate().map_err(|e| self.error("initial_set", e.to_string()))?;
        }
        Ok(())
    }

    /// Applies command-line overrides and revalidates.
    pub fn with_overrides(mut self, seed: Option<u64>, trials: Option<usize>) -> Result<Self, ConfigError> {
        if let Some(s) = seed {
            self.config.seed = s;
        }
        if let Some(t) = trials {
            if t == 0 {
                return Err(ConfigError {
                    origin: "--trials".into(),
                    line: None,
                    column: None,
                    message: "must be at least 1".into(),
                });
            }
            self.config.trials = t;
        }
        Ok(self)
    }

    /// Canonical JSON of the resolved config.
    pub fn resolved_json(&self) -> String {
        serde_json::to_string(&self.config).expect("config serializes")
    }
}
