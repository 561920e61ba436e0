//! Unicycle driven to the origin by a polar-coordinate feedback law.
//!
//! State `(p_x, p_y, θ)`, update
//!
//! ```text
//! p_x ← p_x + η v cos θ
//! p_y ← p_y + η v sin θ
//! θ   ← wrap(θ + η (ω + d))
//! ```
//!
//! With `ρ = ‖p‖`, bearing to the goal `φ = atan2(-p_y, -p_x)`, heading error
//! `α = wrap(φ - θ)` and approach angle `β = wrap(φ)`:
//!
//! ```text
//! v = v_max · tanh(γ ρ / v_max) · cos α
//! ω = k α + γ cos α · (sin α / α) · (α + h β)
//! ```
//!
//! The speed saturation keeps the per-step gain in `x` close to one far from
//! the goal.

use serde::{Deserialize, Serialize};

use super::Dynamics;
use crate::error::{Error, Result};

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if a > -PI && a <= PI {
        return a;
    }
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnicycleConfig {
    /// Discretization step `η`.
    pub eta: f64,
    /// `γ`.
    pub speed_gain: f64,
    /// `k`.
    pub heading_gain: f64,
    /// `h`.
    pub approach_gain: f64,
    pub max_speed: f64,
    /// Bound on the angular-rate disturbance, `|d| ≤ d_bound`.
    pub d_bound: f64,
    /// Per-coordinate variance of the unscaled Gaussian noise; the model noise
    /// is `sqrt(η)·N(0, noise_variance·I)`.
    pub noise_variance: f64,
}

impl Default for UnicycleConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            speed_gain: 1.0,
            heading_gain: 5.0,
            approach_gain: 1.0,
            max_speed: 1.5,
            d_bound: 0.1,
            noise_variance: 0.01,
        }
    }
}

impl UnicycleConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta", self.eta),
            ("speed_gain", self.speed_gain),
            ("heading_gain", self.heading_gain),
            ("approach_gain", self.approach_gain),
            ("max_speed", self.max_speed),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(name, v, "must be positive"));
            }
        }
        if !(self.d_bound >= 0.0 && self.d_bound.is_finite()) {
            return Err(Error::domain("d_bound", self.d_bound, "must be nonnegative"));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::domain("noise_variance", self.noise_variance, "must be nonnegative"));
        }
        Ok(())
    }

    /// Noise scale `sqrt(η)`.
    pub fn noise_scale(&self) -> f64 {
        self.eta.sqrt()
    }

    /// Feedback `(v, ω)` at state `x`.
    pub fn controls(&self, x: &[f64]) -> (f64, f64) {
        let (px, py, theta) = (x[0], x[1], x[2]);
        let rho = px.hypot(py);
        if rho < 1e-12 {
            return (0.0, 0.0);
        }
        let bearing = (-py).atan2(-px);
        let alpha = wrap_angle(bearing - theta);
        let beta = wrap_angle(bearing);
        let vmax = self.max_speed;
        let v = vmax * (self.speed_gain * rho / vmax).tanh() * alpha.cos();
        let sinc = if alpha.abs() < 1e-8 { 1.0 } else { alpha.sin() / alpha };
        let omega = self.heading_gain * alpha
            + self.speed_gain * alpha.cos() * sinc * (alpha + self.approach_gain * beta);
        (v, omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unicycle {
    config: UnicycleConfig,
}

impl Unicycle {
    pub fn new(config: UnicycleConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &UnicycleConfig {
        &self.config
    }

    /// One step with explicit controls, bypassing the feedback law.
    pub fn advance(&self, x: &[f64], v: f64, omega: f64, d: f64) -> Vec<f64> {
        let eta = self.config.eta;
        vec![
            x[0] + eta * v * x[2].cos(),
            x[1] + eta * v * x[2].sin(),
            wrap_angle(x[2] + eta * (omega + d)),
        ]
    }
}

impl Dynamics for Unicycle {
    fn name(&self) -> &str {
        "unicycle"
    }

    fn dim(&self) -> usize {
        3
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn update(&self, x: &[f64], d: &[f64], _t: usize) -> Vec<f64> {
        let (v, omega) = self.config.controls(x);
        self.advance(x, v, omega, d[0])
    }

    fn difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        vec![a[0] - b[0], a[1] - b[1], wrap_angle(a[2] - b[2])]
    }

    fn state_labels(&self) -> Vec<String> {
        vec!["px".into(), "py".into(), "theta".into()]
    }

    fn normalize(&self, x: &mut [f64]) {
        x[2] = wrap_angle(x[2]);
    }
}
