//! Deterministic verification on the eroded safe set.
//!
//! A stochastic system is safe with probability `1 - δ` over the horizon if
//! every deterministic trajectory from `X₀` stays in `C ⊖ B(r_{δ,t})` for all
//! `t ≤ T`. This module checks that deterministic condition with a
//! Lipschitz reach tube or with a barrier certificate, and provides the
//! closed-form threshold for the scalar interval benchmark.

mod barrier;
mod reach_tube;
mod threshold;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::SystemModel;
use crate::error::{check_dim, Error, Result};
use crate::gap_bound::{GapMethod, GapProfile};
use crate::geometry::{AxisBox, Ball, SafeSet};

pub use barrier::{verify_barrier, BarrierCandidate, BarrierKind, BarrierProbe, ClassK, ScalarField};
pub use reach_tube::{estimate_tube_lipschitz, verify_reach_tube, TubeOptions};
pub use threshold::{linear_interval_threshold, verify_interval_closed_form};

/// Initial configuration `X₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSet {
    Point { point: Vec<f64> },
    AxisBox { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl InitialSet {
    pub fn point(point: Vec<f64>) -> Self {
        InitialSet::Point { point }
    }

    pub fn axis_box(b: &AxisBox) -> Self {
        InitialSet::AxisBox {
            lower: b.lower().to_vec(),
            upper: b.upper().to_vec(),
        }
    }

    /// Rejects malformed boxes, negative radii and non-finite coordinates.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            InitialSet::Point { point } if point.is_empty() || !finite(point) => {
                Err(Error::InvalidSet("initial point must be finite and nonempty".into()))
            }
            InitialSet::AxisBox { lower, upper } => {
                let b = AxisBox::new(lower.clone(), upper.clone())?;
                if !b.is_bounded() {
                    return Err(Error::InvalidSet("initial box must be bounded".into()));
                }
                Ok(())
            }
            InitialSet::Ball { center, radius } => {
                if !finite(center) || !radius.is_finite() {
                    return Err(Error::InvalidSet("initial ball must be finite".into()));
                }
                Ball::new(center.clone(), *radius).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialSet::Point { point } => point.len(),
            InitialSet::AxisBox { lower, .. } => lower.len(),
            InitialSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            InitialSet::Point { point } => point.clone(),
            InitialSet::AxisBox { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect()
            }
            InitialSet::Ball { center, .. } => center.clone(),
        }
    }

    /// Radius of the smallest ball about [`center`](Self::center) containing the set.
    pub fn radius(&self) -> f64 {
        match self {
            InitialSet::Point { .. } => 0.0,
            InitialSet::AxisBox { lower, upper } => {
                0.5 * lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| (u - l) * (u - l))
                    .sum::<f64>()
                    .sqrt()
            }
            InitialSet::Ball { radius, .. } => *radius,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            InitialSet::Point { point } => point.as_slice() == x,
            InitialSet::AxisBox { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| v >= l && v <= u),
            InitialSet::Ball { center, radius } => {
                x.iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    <= *radius
            }
        }
    }

    /// Deterministic probe points: the center, box corners or the axis
    /// extremes of a ball, plus a coarse interior grid in low dimension.
    pub fn probes(&self) -> Vec<Vec<f64>> {
        let c = self.center();
        let mut out = vec![c.clone()];
        match self {
            InitialSet::Point { .. } => {}
            InitialSet::AxisBox { lower, upper } => {
                let b = AxisBox::new(lower.clone(), upper.clone()).expect("validated box");
                if b.dim() <= 12 {
                    out.extend(b.corners());
                }
                if b.dim() <= 3 {
                    out.extend(b.grid(5).expect("bounded box"));
                }
            }
            InitialSet::Ball { radius, .. } => {
                for k in 0..c.len() {
                    for s in [-1.0, 1.0] {
                        let mut p = c.clone();
                        p[k] += s * radius;
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    /// Uniform draw from the set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            InitialSet::Point { point } => point.clone(),
            InitialSet::AxisBox { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| if u > l { rng.random_range(*l..=*u) } else { *l })
                .collect(),
            InitialSet::Ball { center, radius } => {
                use rand_distr::{Distribution, StandardNormal};
                let n = center.len();
                let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let len = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / n as f64);
                center.iter().zip(&dir).map(|(c, d)| c + r * d / len).collect()
            }
        }
    }
}

/// Erosion radius applied at each step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErosionSchedule {
    /// `r_{δ,t}` at step `t` (zero at `t = 0`).
    #[default]
    PerStep,
    /// `r_m = max_t r_{δ,t}` at every step, for time-invariant certificates.
    Max,
}

#[derive(Debug, Clone)]
pub struct VerificationProblem {
    model: SystemModel,
    safe_set: SafeSet,
    initial_set: InitialSet,
    gap: GapProfile,
    erosion: ErosionSchedule,
    lipschitz_source: String,
}

impl VerificationProblem {
    /// Checks dimensions and probes `X₀ ⊆ C`; the horizon and `δ` are those
    /// of `gap`.
    pub fn new(model: SystemModel, safe_set: SafeSet, initial_set: InitialSet, gap: GapProfile) -> Result<Self> {
        initial_set.validate()?;
        check_dim(model.dim(), safe_set.ambient_dim())?;
        check_dim(model.dim(), initial_set.dim())?;
        for p in initial_set.probes() {
            let clearance = safe_set.min_obstacle_clearance(&p)?;
            if clearance < 0.0 {
                return Err(Error::InitialSetUnsafe { point: p, clearance });
            }
        }
        let lipschitz_source = if model.lipschitz_x().is_some() {
            "model".to_string()
        } else {
            "unspecified".to_string()
        };
        Ok(Self {
            model,
            safe_set,
            initial_set,
            gap,
            erosion: ErosionSchedule::PerStep,
            lipschitz_source,
        })
    }

    pub fn with_erosion(mut self, erosion: ErosionSchedule) -> Self {
        self.erosion = erosion;
        self
    }

    /// Free-form note on where the Lipschitz schedule came from.
    pub fn with_lipschitz_source(mut self, source: impl Into<String>) -> Self {
        self.lipschitz_source = source.into();
        self
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn safe_set(&self) -> &SafeSet {
        &self.safe_set
    }

    pub fn initial_set(&self) -> &InitialSet {
        &self.initial_set
    }

    pub fn gap(&self) -> &GapProfile {
        &self.gap
    }

    pub fn horizon(&self) -> usize {
        self.gap.horizon()
    }

    pub fn delta(&self) -> f64 {
        self.gap.delta()
    }

    pub fn erosion(&self) -> ErosionSchedule {
        self.erosion
    }

    /// Erosion radius at step `t ≤ T`.
    pub fn erosion_radius(&self, t: usize) -> f64 {
        match self.erosion {
            ErosionSchedule::PerStep => self.gap.radius(t),
            ErosionSchedule::Max => self.gap.max_radius(),
        }
    }

    /// Erosion radii for `t = 0..=T`.
    pub fn erosion_radii(&self) -> Vec<f64> {
        (0..=self.horizon()).map(|t| self.erosion_radius(t)).collect()
    }

    pub(crate) fn provenance(&self) -> Provenance {
        let c = self.gap.constants();
        Provenance {
            delta: self.delta(),
            horizon: self.horizon(),
            epsilon: c.epsilon,
            epsilon1: c.epsilon1,
            epsilon2: c.epsilon2,
            dimension: c.dimension,
            scalar_mode: c.scalar_mode,
            gap_method: Some(self.gap.method()),
            lipschitz_source: self.lipschitz_source.clone(),
            lipschitz: self.gap.schedule().lipschitz().to_vec(),
            variance_proxy: self.gap.schedule().variance_proxy().to_vec(),
            erosion: self.erosion,
            erosion_radii: self.erosion_radii(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Safe with `1 - δ` guarantee.
    Verified,
    /// The sound check did not succeed; nothing is claimed.
    Unverified,
    /// A concrete deterministic trajectory leaves the safe set.
    Falsified,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Verified => 0,
            Verdict::Unverified => 2,
            Verdict::Falsified => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ReachTube,
    BarrierRbf,
    BarrierEbf,
    ClosedFormInterval,
}

/// Constants and radii a verdict depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub delta: f64,
    pub horizon: usize,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub dimension: usize,
    pub scalar_mode: bool,
    pub gap_method: Option<GapMethod>,
    pub lipschitz_source: String,
    pub lipschitz: Vec<f64>,
    pub variance_proxy: Vec<f64>,
    pub erosion: ErosionSchedule,
    /// Radii for `t = 0..=T`.
    pub erosion_radii: Vec<f64>,
}

/// Why a check did not verify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Failure {
    /// Tube clearance fell below erosion plus tube radius.
    Margin { step: usize, margin: f64 },
    /// `X₀ ⊄ C̃_0` or `C̃_t ⊄ C ⊖ B(r_t)` at a probe.
    Inclusion { step: usize, point: Vec<f64>, detail: String },
    /// The barrier condition failed at a probe.
    Barrier {
        step: usize,
        point: Vec<f64>,
        input: Vec<f64>,
        residual: f64,
        slack: f64,
        condition: String,
    },
    /// `h ≥ 0` on the probe boundary, so `C̃_t` may extend past the grid.
    RegionTooSmall { step: usize, point: Vec<f64> },
    /// Closed-form threshold above the requested `δ`.
    Threshold { threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub method: Method,
    /// Per-step slack of the deciding check; all nonnegative iff verified.
    /// For the tube: `clearance(c_t) - ρ_t - r_t`, `t = 0..=T`. For barriers:
    /// worst residual minus grid slack, `t = 0..T`.
    pub per_step_margin: Vec<f64>,
    /// Deterministic trajectory leaving the safe set.
    pub witness: Option<Vec<Vec<f64>>>,
    pub failure: Option<Failure>,
    /// Tube radii `ρ_t`, when a tube was propagated.
    pub tube_radii: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl VerificationReport {
    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}
