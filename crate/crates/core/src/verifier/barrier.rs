//! Grid-based checking of time-varying barrier certificates.
//!
//! Conditions are evaluated at the nodes of a regular grid over a probe
//! region and at the vertices of `D` plus random admissible inputs. A node is
//! checked whenever its cell may meet `C̃_t = {h ≥ 0}`, that is when
//! `h(x,t) ≥ -L_h · cell_radius`, and every residual must exceed the slack
//! `μ = L_res · spacing · max(1, √n / 2)`, which covers the worst distance to
//! the nearest node.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Failure, Method, Verdict, VerificationProblem, VerificationReport};
use crate::error::{Error, Result};
use crate::geometry::{linspace, AxisBox};

/// `(x, t) ↦ value`.
pub type ScalarField = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;

/// Parametric extended class-K functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClassK {
    /// `c·s`.
    Linear { c: f64 },
    /// `c·sign(s)·|s|^p`.
    Power { c: f64, p: f64 },
}

impl ClassK {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            ClassK::Linear { c } => c * s,
            ClassK::Power { c, p } => c * s.signum() * s.abs().powf(p),
        }
    }

    /// Probes `α(0) = 0` and strict increase on `[0, s_max]`.
    pub fn check(&self, s_max: f64) -> Result<()> {
        if self.eval(0.0) != 0.0 {
            return Err(Error::MalformedCandidate(format!("{self:?} does not vanish at 0")));
        }
        let top = if s_max > 0.0 && s_max.is_finite() { s_max } else { 1.0 };
        let probes = linspace(0.0, top, 1001);
        for w in probes.windows(2) {
            let (a, b) = (self.eval(w[0]), self.eval(w[1]));
            if !(b > a) || !b.is_finite() {
                return Err(Error::MalformedCandidate(format!(
                    "{self:?} is not strictly increasing near s = {}",
                    w[1]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone)]
pub enum BarrierKind {
    /// `h(f(x,d,t), t+1) ≥ (1 - γ) h(x,t)`.
    Exponential { gamma: f64 },
    /// `1/α₁(h) ≤ B ≤ 1/α₂(h)` and `B(f(x,d,t), t+1) - B(x,t) ≤ α₃(h)`.
    Reciprocal {
        b: ScalarField,
        alpha1: ClassK,
        alpha2: ClassK,
        alpha3: ClassK,
    },
}

impl fmt::Debug for BarrierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BarrierKind::Exponential { gamma } => write!(f, "Exponential {{ gamma: {gamma} }}"),
            BarrierKind::Reciprocal { alpha1, alpha2, alpha3, .. } => {
                write!(f, "Reciprocal {{ {alpha1:?}, {alpha2:?}, {alpha3:?} }}")
            }
        }
    }
}

#[derive(Clone)]
pub struct BarrierCandidate {
    pub name: String,
    /// Defines `C̃_t = {x : h(x,t) ≥ 0}`.
    pub h: ScalarField,
    pub kind: BarrierKind,
    /// Lipschitz bound of `h` in `x`.
    pub h_lipschitz: f64,
    /// Lipschitz bound of the checked residual in `x`.
    pub residual_lipschitz: f64,
}

impl fmt::Debug for BarrierCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BarrierCandidate")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("h_lipschitz", &self.h_lipschitz)
            .field("residual_lipschitz", &self.residual_lipschitz)
            .finish()
    }
}

impl BarrierCandidate {
    /// `h(x) = ρ² - x²` on the line, with `γ = 1 - a²` for `x⁺ = a·x`.
    /// The residual `h(a·x) - a²·h(x) = (1 - a²)ρ²` is constant.
    pub fn scalar_interval(rho: f64, a: f64) -> Self {
        let h: ScalarField = Arc::new(move |x: &[f64], _| rho * rho - x[0] * x[0]);
        Self {
            name: format!("interval(rho={rho})"),
            h,
            kind: BarrierKind::Exponential { gamma: 1.0 - a * a },
            h_lipschitz: 2.0 * rho,
            residual_lipschitz: 0.0,
        }
    }

    fn validate(&self, h_max: f64) -> Result<()> {
        if !(self.h_lipschitz >= 0.0 && self.residual_lipschitz >= 0.0) {
            return Err(Error::MalformedCandidate("lipschitz bounds must be nonnegative".into()));
        }
        match &self.kind {
            BarrierKind::Exponential { gamma } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return Err(Error::MalformedCandidate(format!("gamma = {gamma} is outside (0, 1]")));
                }
            }
            BarrierKind::Reciprocal { alpha1, alpha2, alpha3, .. } => {
                for a in [alpha1, alpha2, alpha3] {
                    a.check(h_max)?;
                }
            }
        }
        Ok(())
    }

    fn method(&self) -> Method {
        match self.kind {
            BarrierKind::Exponential { .. } => Method::BarrierEbf,
            BarrierKind::Reciprocal { .. } => Method::BarrierRbf,
        }
    }
}

/// Where and how densely the certificate is probed.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierProbe {
    /// Must contain every `C̃_t`.
    pub region: AxisBox,
    /// Maximum grid spacing along each coordinate.
    pub spacing: f64,
    /// Random inputs drawn from `D` on top of its vertices.
    pub input_samples: usize,
    pub seed: u64,
}

impl BarrierProbe {
    pub const DEFAULT_SPACING: f64 = 1e-2;

    pub fn new(region: AxisBox) -> Self {
        Self {
            region,
            spacing: Self::DEFAULT_SPACING,
            input_samples: 8,
            seed: 0,
        }
    }
}

/// Worst finding at one step.
#[derive(Debug, Clone)]
struct StepOutcome {
    margin: f64,
    failure: Option<Failure>,
}

pub fn verify_barrier(
    p: &VerificationProblem,
    cand: &BarrierCandidate,
    probe: &BarrierProbe,
) -> Result<VerificationReport> {
    let model = p.model();
    let horizon = p.horizon();
    let n = model.dim();
    crate::error::check_dim(n, probe.region.dim())?;
    let grid = probe.region.grid_with_spacing(probe.spacing)?;
    let h = &cand.h;

    let h_max = (0..=horizon)
        .flat_map(|t| grid.iter().map(move |x| h(x, t)))
        .fold(0.0f64, f64::max);
    cand.validate(h_max)?;

    let spacing = probe.spacing;
    let cell_radius = 0.5 * spacing * (n as f64).sqrt();
    let slack = cand.residual_lipschitz * spacing * (1.0f64).max((n as f64).sqrt() / 2.0);
    let near = -cand.h_lipschitz * cell_radius;

    let mut report = VerificationReport {
        verdict: Verdict::Verified,
        method: cand.method(),
        per_step_margin: Vec::new(),
        witness: None,
        failure: None,
        tube_radii: None,
        provenance: p.provenance(),
    };

    // X₀ ⊆ C̃_0
    for x in p.initial_set().probes() {
        if !(h(&x, 0) >= 0.0) {
            report.verdict = Verdict::Unverified;
            report.failure = Some(Failure::Inclusion {
                step: 0,
                point: x,
                detail: "initial set is not inside {h >= 0}".into(),
            });
            return Ok(report);
        }
    }

    // C̃_t stays inside the probe region and inside C ⊖ B(r_t)
    let on_boundary = |x: &[f64]| {
        x.iter()
            .zip(probe.region.lower().iter().zip(probe.region.upper()))
            .any(|(v, (l, u))| v == l || v == u)
    };
    for t in 0..=horizon {
        let r = p.erosion_radius(t);
        let bad = grid
            .par_iter()
            .map(|x| -> Result<Option<Failure>> {
                let hx = h(x, t);
                if hx >= 0.0 && on_boundary(x) {
                    return Ok(Some(Failure::RegionTooSmall { step: t, point: x.clone() }));
                }
                if hx >= 0.0 && !p.safe_set().in_eroded_set(x, r)? {
                    return Ok(Some(Failure::Inclusion {
                        step: t,
                        point: x.clone(),
                        detail: format!("h >= 0 but clearance < erosion radius {r}"),
                    }));
                }
                Ok(None)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .next();
        if let Some(f) = bad {
            report.verdict = Verdict::Unverified;
            report.failure = Some(f);
            return Ok(report);
        }
    }

    let mut inputs = model.input_set().vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
    for _ in 0..probe.input_samples {
        if model.input_dim() > 0 {
            inputs.push(model.input_set().sample(&mut rng));
        }
    }

    let outcomes: Vec<StepOutcome> = (0..horizon)
        .into_par_iter()
        .map(|t| check_step(p, cand, &grid, &inputs, t, near, slack))
        .collect();
    for (t, o) in outcomes.into_iter().enumerate() {
        report.per_step_margin.push(o.margin);
        if report.failure.is_none() {
            if let Some(f) = o.failure {
                report.verdict = Verdict::Unverified;
                report.failure = Some(f);
            }
        }
        debug_assert!(t < horizon);
    }
    Ok(report)
}

fn check_step(
    p: &VerificationProblem,
    cand: &BarrierCandidate,
    grid: &[Vec<f64>],
    inputs: &[Vec<f64>],
    t: usize,
    near: f64,
    slack: f64,
) -> StepOutcome {
    let model = p.model();
    let h = &cand.h;
    let mut worst = StepOutcome {
        margin: f64::INFINITY,
        failure: None,
    };
    let mut record = |margin: f64, failure: Failure| {
        if margin < worst.margin {
            worst.margin = margin;
            worst.failure = if margin < 0.0 { Some(failure) } else { None };
        }
    };
    for x in grid {
        let hx = h(x, t);
        if !(hx >= near) {
            continue;
        }
        match &cand.kind {
            BarrierKind::Exponential { gamma } => {
                for d in inputs {
                    let next = model.dynamics().update(x, d, t);
                    let residual = h(&next, t + 1) - (1.0 - gamma) * hx;
                    record(
                        residual - slack,
                        Failure::Barrier {
                            step: t,
                            point: x.clone(),
                            input: d.clone(),
                            residual,
                            slack,
                            condition: "h(f(x,d,t),t+1) >= (1-gamma) h(x,t)".into(),
                        },
                    );
                }
            }
            BarrierKind::Reciprocal {
                b,
                alpha1,
                alpha2,
                alpha3,
            } => {
                // B is only defined where h > 0
                if !(hx > 0.0) {
                    continue;
                }
                let bx = b(x, t);
                let lower = 1.0 / alpha1.eval(hx);
                let upper = 1.0 / alpha2.eval(hx);
                let sandwich = (bx - lower).min(upper - bx);
                record(
                    sandwich,
                    Failure::Barrier {
                        step: t,
                        point: x.clone(),
                        input: Vec::new(),
                        residual: sandwich,
                        slack: 0.0,
                        condition: "1/alpha1(h) <= B <= 1/alpha2(h)".into(),
                    },
                );
                for d in inputs {
                    let next = model.dynamics().update(x, d, t);
                    let residual = alpha3.eval(hx) - (b(&next, t + 1) - bx);
                    record(
                        residual - slack,
                        Failure::Barrier {
                            step: t,
                            point: x.clone(),
                            input: d.clone(),
                            residual,
                            slack,
                            condition: "B(f(x,d,t),t+1) - B(x,t) <= alpha3(h)".into(),
                        },
                    );
                }
            }
        }
    }
    worst
}
