use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Draws one zero-mean vector of the requested dimension with support in the
/// unit ball; it is scaled by the family's support radius.
pub type BoundedSampler = Arc<dyn Fn(&mut dyn RngCore, usize) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum NoiseKind {
    /// `N(0, variance·I)`.
    Gaussian { variance: f64 },
    /// Uniform on the ball of the given radius.
    UniformBall { radius: f64 },
    /// Independent `±scale` coordinates.
    ScaledRademacher { scale: f64 },
    /// Any zero-mean law supported in a ball of `support_radius`.
    CustomBounded {
        support_radius: f64,
        sampler: BoundedSampler,
    },
}

impl fmt::Debug for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::Gaussian { variance } => write!(f, "Gaussian({variance})"),
            NoiseKind::UniformBall { radius } => write!(f, "UniformBall({radius})"),
            NoiseKind::ScaledRademacher { scale } => write!(f, "ScaledRademacher({scale})"),
            NoiseKind::CustomBounded { support_radius, .. } => {
                write!(f, "CustomBounded({support_radius})")
            }
        }
    }
}

impl NoiseKind {
    /// Variance proxy of one unscaled draw. A zero-mean law supported in a
    /// ball of radius `ρ` has every projection in `[-ρ, ρ]`, hence proxy `ρ²`.
    pub fn variance_proxy(&self) -> f64 {
        match self {
            NoiseKind::Gaussian { variance } => *variance,
            NoiseKind::UniformBall { radius } => radius * radius,
            NoiseKind::ScaledRademacher { scale } => scale * scale,
            NoiseKind::CustomBounded { support_radius, .. } => support_radius * support_radius,
        }
    }

    fn parameter(&self) -> (&'static str, f64) {
        match self {
            NoiseKind::Gaussian { variance } => ("variance", *variance),
            NoiseKind::UniformBall { radius } => ("radius", *radius),
            NoiseKind::ScaledRademacher { scale } => ("scale", *scale),
            NoiseKind::CustomBounded { support_radius, .. } => ("support_radius", *support_radius),
        }
    }
}

/// Per-step multiplier applied to every draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleSchedule {
    Constant(f64),
    PerStep(Vec<f64>),
}

impl ScaleSchedule {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            ScaleSchedule::Constant(s) => *s,
            ScaleSchedule::PerStep(v) => v.get(t).copied().unwrap_or(0.0),
        }
    }
}

/// Sub-Gaussian disturbance `w_t = s_t · ξ_t` with `ξ_t` drawn from `kind`.
#[derive(Debug, Clone)]
pub struct NoiseFamily {
    kind: NoiseKind,
    dim: usize,
    scale: ScaleSchedule,
}

impl NoiseFamily {
    pub fn new(kind: NoiseKind, dim: usize, scale: ScaleSchedule) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("noise dimension", 0.0, "must be positive"));
        }
        let (name, value) = kind.parameter();
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::domain(name, value, "must be finite and nonnegative"));
        }
        let scales: Vec<f64> = match &scale {
            ScaleSchedule::Constant(s) => vec![*s],
            ScaleSchedule::PerStep(v) => v.clone(),
        };
        if let Some(s) = scales.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::domain("noise scale", *s, "must be finite and nonnegative"));
        }
        Ok(Self { kind, dim, scale })
    }

    pub fn gaussian(variance: f64, dim: usize) -> Result<Self> {
        Self::new(NoiseKind::Gaussian { variance }, dim, ScaleSchedule::Constant(1.0))
    }

    /// Replaces the scale schedule by a constant multiplier.
    pub fn scaled(mut self, scale: f64) -> Result<Self> {
        self.scale = ScaleSchedule::Constant(scale);
        Self::new(self.kind, self.dim, self.scale)
    }

    /// Zero-mean law uniform on the sphere of `radius`.
    pub fn sphere_surface(radius: f64, dim: usize) -> Result<Self> {
        let sampler: BoundedSampler = Arc::new(|rng: &mut dyn RngCore, n: usize| {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let len = v.iter().map(|x: &f64| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|x| x / len).collect()
        });
        Self::new(
            NoiseKind::CustomBounded {
                support_radius: radius,
                sampler,
            },
            dim,
            ScaleSchedule::Constant(1.0),
        )
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> &ScaleSchedule {
        &self.scale
    }

    /// `σ_t² = s_t² · proxy(ξ)`.
    pub fn variance_proxy(&self, t: usize) -> f64 {
        let s = self.scale.at(t);
        s * s * self.kind.variance_proxy()
    }

    /// `[σ_0², ..., σ_{T-1}²]`.
    pub fn variance_schedule(&self, horizon: usize) -> Vec<f64> {
        (0..horizon).map(|t| self.variance_proxy(t)).collect()
    }

    /// One draw of `w_t`.
    pub fn sample<R: Rng>(&self, t: usize, rng: &mut R) -> Vec<f64> {
        let s = self.scale.at(t);
        let n = self.dim;
        let raw: Vec<f64> = match &self.kind {
            NoiseKind::Gaussian { variance } => {
                if *variance == 0.0 {
                    return vec![0.0; n];
                }
                let normal = Normal::new(0.0, variance.sqrt()).expect("finite variance");
                (0..n).map(|_| normal.sample(rng)).collect()
            }
            NoiseKind::UniformBall { radius } => {
                let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let len = dir.iter().map(|x: &f64| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / n as f64);
                dir.into_iter().map(|x| r * x / len).collect()
            }
            NoiseKind::ScaledRademacher { scale } => (0..n)
                .map(|_| if rng.random::<bool>() { *scale } else { -*scale })
                .collect(),
            NoiseKind::CustomBounded {
                support_radius,
                sampler,
            } => sampler(rng, n).into_iter().map(|x| support_radius * x).collect(),
        };
        raw.into_iter().map(|x| s * x).collect()
    }
}
