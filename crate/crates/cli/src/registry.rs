//! Compiled-in models and barrier candidates, selected by name.

use std::collections::BTreeMap;

use anyhow::{bail, Context};
use serde::Deserialize;
use serde_json::{Map, Value};

use erosion_core::benchmarks;
use erosion_core::dynamics::{InputSet, LinearMatrix, SystemModel, UnicycleConfig};
use erosion_core::montecarlo::NoiseFamily;
use erosion_core::verifier::{BarrierCandidate, BarrierKind};

use crate::config::{BarrierConfig, EstimateConfig};

/// A model plus the defaults it brings along.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: SystemModel,
    /// Used when the config has no `noise` section.
    pub default_noise: Option<NoiseFamily>,
    /// Used when the model has no analytic gain and the config no `lipschitz`.
    pub default_estimate: Option<EstimateConfig>,
}

pub type ModelBuilder = fn(&Map<String, Value>) -> anyhow::Result<BuiltModel>;

/// What a barrier builder may depend on.
#[derive(Debug, Clone, Copy)]
pub struct BarrierRequest<'a> {
    pub config: &'a BarrierConfig,
    pub model: &'a SystemModel,
    /// `R` of an interval safe set, if that is what the config describes.
    pub interval_radius: Option<f64>,
    /// `r_m`.
    pub max_erosion: f64,
}

pub type BarrierBuilder = fn(&BarrierRequest<'_>) -> anyhow::Result<BarrierCandidate>;

#[derive(Debug, Clone)]
pub struct Registry {
    models: BTreeMap<String, ModelBuilder>,
    barriers: BTreeMap<String, BarrierBuilder>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            models: BTreeMap::new(),
            barriers: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register_model("linear_scalar", linear_scalar);
        r.register_model("linear_matrix", linear_matrix);
        r.register_model("unicycle", unicycle);
        r.register_barrier("scalar_interval", scalar_interval);
        r
    }

    pub fn register_model(&mut self, name: &str, builder: ModelBuilder) {
        self.models.insert(name.to_string(), builder);
    }

    pub fn register_barrier(&mut self, name: &str, builder: BarrierBuilder) {
        self.barriers.insert(name.to_string(), builder);
    }

    pub fn model_names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    pub fn build_model(&self, name: &str, params: &Map<String, Value>) -> anyhow::Result<BuiltModel> {
        let Some(builder) = self.models.get(name) else {
            bail!(
                "unknown model `{name}`; available: {}",
                self.model_names().collect::<Vec<_>>().join(", ")
            );
        };
        builder(params).with_context(|| format!("model `{name}`"))
    }

    pub fn build_barrier(&self, req: &BarrierRequest<'_>) -> anyhow::Result<BarrierCandidate> {
        let name = req.config.candidate.as_str();
        let Some(builder) = self.barriers.get(name) else {
            bail!(
                "unknown barrier candidate `{name}`; available: {}",
                self.barriers.keys().cloned().collect::<Vec<_>>().join(", ")
            );
        };
        builder(req).with_context(|| format!("barrier candidate `{name}`"))
    }
}

fn params<T: for<'de> Deserialize<'de>>(p: &Map<String, Value>) -> anyhow::Result<T> {
    Ok(serde_json::from_value(Value::Object(p.clone()))?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalarParams {
    a: f64,
}

fn linear_scalar(p: &Map<String, Value>) -> anyhow::Result<BuiltModel> {
    let ScalarParams { a } = params(p)?;
    if !a.is_finite() {
        bail!("gain a = {a} must be finite");
    }
    Ok(BuiltModel {
        model: SystemModel::linear_scalar(a),
        default_noise: None,
        default_estimate: None,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixParams {
    a: Vec<Vec<f64>>,
    #[serde(default)]
    b: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    input_set: Option<InputSet>,
}

fn linear_matrix(p: &Map<String, Value>) -> anyhow::Result<BuiltModel> {
    let MatrixParams { a, b, input_set } = params(p)?;
    let lin = LinearMatrix::from_rows(&a, b.as_deref())?;
    let input_set = input_set.unwrap_or(InputSet::Empty);
    Ok(BuiltModel {
        model: SystemModel::linear_matrix(lin, input_set)?,
        default_noise: None,
        default_estimate: None,
    })
}

fn unicycle(p: &Map<String, Value>) -> anyhow::Result<BuiltModel> {
    let cfg: UnicycleConfig = params(p)?;
    let model = SystemModel::unicycle(cfg)?;
    let noise = NoiseFamily::gaussian(cfg.noise_variance, 3)?.scaled(cfg.noise_scale())?;
    let est = benchmarks::unicycle_estimator();
    Ok(BuiltModel {
        model,
        default_noise: Some(noise),
        default_estimate: Some(EstimateConfig {
            samples: est.samples,
            inflation: est.inflation,
            seed: est.seed,
            margin: benchmarks::UNICYCLE_REGION_MARGIN,
        }),
    })
}

/// `h = ρ² - x²` with `γ = 1 - a²` on a scalar linear model.
fn scalar_interval(req: &BarrierRequest<'_>) -> anyhow::Result<BarrierCandidate> {
    if req.model.dim() != 1 {
        bail!("needs a one-dimensional model, got dimension {}", req.model.dim());
    }
    let a = req.model.lipschitz_schedule(1)?[0];
    let rho = match (req.config.rho, req.interval_radius) {
        (Some(rho), _) => rho,
        // just inside R - r_m, so the boundary survives rounding
        (None, Some(r)) => (r - req.max_erosion) * (1.0 - 1e-9),
        (None, None) => bail!("`rho` is required without `safe_set.interval_radius`"),
    };
    if !(rho > 0.0) {
        bail!("eroded radius {rho} is not positive; the eroded interval is empty");
    }
    let mut cand = BarrierCandidate::scalar_interval(rho, a);
    if let Some(gamma) = req.config.gamma {
        cand.kind = BarrierKind::Exponential { gamma };
    }
    Ok(cand)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn builtin_models() {
        let r = Registry::builtin();
        assert_eq!(r.model_names().collect::<Vec<_>>(), ["linear_matrix", "linear_scalar", "unicycle"]);
        let m = r.build_model("linear_scalar", &obj(json!({"a": 0.99}))).unwrap();
        assert_eq!(m.model.lipschitz_schedule(2).unwrap(), vec![0.99, 0.99]);
        let m = r
            .build_model(
                "linear_matrix",
                &obj(json!({"a": [[2.0, 0.0], [0.0, 1.0]], "b": [[1.0], [0.0]],
                    "input_set": {"type": "axis_box", "lower": [-1.0], "upper": [1.0]}})),
            )
            .unwrap();
        assert!((m.model.lipschitz_schedule(1).unwrap()[0] - 2.0).abs() < 1e-12);
        let u = r.build_model("unicycle", &obj(json!({"eta": 0.01}))).unwrap();
        assert!((u.default_noise.unwrap().variance_proxy(0) - 1e-4).abs() < 1e-18);
        assert!(u.model.lipschitz_x().is_none());
    }

    #[test]
    fn bad_parameters() {
        let r = Registry::builtin();
        assert!(r.build_model("linear_scalar", &obj(json!({"a": 0.99, "b": 1}))).is_err());
        assert!(r.build_model("unicycle", &obj(json!({"eta": -1.0}))).is_err());
        assert!(r.build_model("unicycle", &obj(json!({"speed": 1.0}))).is_err());
        let e = r.build_model("pendulum", &Map::new()).unwrap_err();
        assert!(e.to_string().contains("available"));
    }

    #[test]
    fn interval_candidate() {
        let r = Registry::builtin();
        let model = SystemModel::linear_scalar(0.99);
        let cfg = BarrierConfig {
            candidate: "scalar_interval".into(),
            rho: None,
            gamma: None,
            spacing: None,
            region: None,
            input_samples: None,
        };
        let req = BarrierRequest {
            config: &cfg,
            model: &model,
            interval_radius: Some(1.0),
            max_erosion: 0.8,
        };
        let c = r.build_barrier(&req).unwrap();
        assert!(((c.h)(&[0.0], 0) - 0.04).abs() < 1e-9);
        let req = BarrierRequest { max_erosion: 1.2, ..req };
        assert!(r.build_barrier(&req).is_err());
    }
}
