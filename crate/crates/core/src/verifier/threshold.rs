//! Closed-form verdict for `x_{t+1} = L x_t + w_t` on `C = [-R, R]` from `x_0 = 0`.
//!
//! The deterministic trajectory stays at the origin, so the set-erosion
//! condition reduces to `R ≥ r_{δ,T}`. With the scalar constants this inverts
//! to the smallest certifiable failure probability
//! `δ̄ = T · exp(-(R² / (2 Ψ_T) - log 2))`, where
//! `Ψ_T = σ² (L^{2T} - 1) / (L² - 1)`.

use super::{Failure, Method, Provenance, Verdict, VerificationReport};
use crate::error::{Error, Result};
use crate::gap_bound::{ConcentrationConstants, GapMethod};
use crate::verifier::ErosionSchedule;

/// `Ψ_T` for constant gain and variance; `σ²T` at `L = 1`.
fn constant_psi(l: f64, sigma2: f64, horizon: usize) -> f64 {
    let log_l2 = 2.0 * l.ln();
    if log_l2 == 0.0 {
        return sigma2 * horizon as f64;
    }
    // (L^{2T} - 1)/(L² - 1) without cancellation near L = 1
    sigma2 * (log_l2 * horizon as f64).exp_m1() / log_l2.exp_m1()
}

/// Smallest `δ ∈ (0, 1]` for which `[-R, R]` is certified, clamped at 1.
pub fn linear_interval_threshold(l: f64, sigma2: f64, horizon: usize, radius: f64) -> Result<f64> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::domain("L", l, "must be positive and finite"));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::domain("sigma2", sigma2, "must be finite and nonnegative"));
    }
    if !(radius >= 0.0) {
        return Err(Error::domain("R", radius, "must be nonnegative"));
    }
    if horizon == 0 {
        return Err(Error::domain("T", 0.0, "must be positive"));
    }
    let psi = constant_psi(l, sigma2, horizon);
    if psi == 0.0 {
        // no noise: any R ≥ 0 is safe with certainty
        return Ok(if radius > 0.0 { f64::MIN_POSITIVE } else { 1.0 });
    }
    let exponent = radius * radius / (2.0 * psi) - std::f64::consts::LN_2;
    Ok((horizon as f64 * (-exponent).exp()).min(1.0))
}

/// Verified iff `δ̄(R) ≤ δ`.
pub fn verify_interval_closed_form(
    l: f64,
    sigma2: f64,
    horizon: usize,
    radius: f64,
    delta: f64,
) -> Result<VerificationReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain("delta", delta, "must lie in (0, 1]"));
    }
    let threshold = linear_interval_threshold(l, sigma2, horizon, radius)?;
    let c = ConcentrationConstants::scalar();
    let r_t = (constant_psi(l, sigma2, horizon) * c.multiplier(horizon, delta)?).sqrt();
    let verified = threshold <= delta;
    Ok(VerificationReport {
        verdict: if verified { Verdict::Verified } else { Verdict::Unverified },
        method: Method::ClosedFormInterval,
        per_step_margin: vec![radius - r_t],
        witness: None,
        failure: (!verified).then_some(Failure::Threshold { threshold }),
        tube_radii: None,
        provenance: Provenance {
            delta,
            horizon,
            epsilon: c.epsilon,
            epsilon1: c.epsilon1,
            epsilon2: c.epsilon2,
            dimension: 1,
            scalar_mode: true,
            gap_method: Some(GapMethod::Sharp),
            lipschitz_source: "closed form".into(),
            lipschitz: vec![l; horizon],
            variance_proxy: vec![sigma2; horizon],
            erosion: ErosionSchedule::Max,
            erosion_radii: vec![r_t],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gap_bound::{gap_radius, ScheduleSpec};
    use proptest::prelude::*;

    #[test]
    fn zero_radius_clamps() {
        assert_eq!(linear_interval_threshold(0.99, 1e-3, 100, 0.0).unwrap(), 1.0);
        assert!(linear_interval_threshold(0.99, -1.0, 100, 1.0).is_err());
        assert!(linear_interval_threshold(0.99, 1e-3, 100, -1.0).is_err());
        assert!(linear_interval_threshold(0.0, 1e-3, 100, 1.0).is_err());
    }

    /// Bisection on the unclamped expression as an independent root finder.
    fn bisect_unit_crossing(l: f64, sigma2: f64, horizon: usize) -> f64 {
        let raw = |r: f64| {
            let psi: f64 = (0..horizon).map(|k| sigma2 * l.powi(2 * (horizon - 1 - k) as i32)).sum();
            horizon as f64 * (-(r * r / (2.0 * psi) - 2f64.ln())).exp()
        };
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if raw(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn unit_crossing_matches_root_finding() {
        let (l, s2, t) = (0.99, 1e-3, 100);
        let psi = constant_psi(l, s2, t);
        let analytic = (2.0 * psi * (2.0 * t as f64).ln()).sqrt();
        let numeric = bisect_unit_crossing(l, s2, t);
        assert!((analytic - numeric).abs() < 1e-10, "{analytic} vs {numeric}");
        assert_eq!(linear_interval_threshold(l, s2, t, analytic * (1.0 - 1e-9)).unwrap(), 1.0);
        assert!(linear_interval_threshold(l, s2, t, analytic * (1.0 + 1e-6)).unwrap() < 1.0);
    }

    #[test]
    fn unit_gain_limit() {
        let a = linear_interval_threshold(1.0, 1e-3, 100, 1.0).unwrap();
        let b = linear_interval_threshold(1.0 + 1e-9, 1e-3, 100, 1.0).unwrap();
        assert!((a - b).abs() / a < 1e-6);
        assert!((constant_psi(1.0, 2e-3, 50) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn closed_form_verdicts() {
        let r = verify_interval_closed_form(0.99, 1e-3, 100, 0.01, 1e-4).unwrap();
        assert_eq!(r.verdict, Verdict::Unverified);
        let r = verify_interval_closed_form(0.99, 1e-3, 100, 2.0, 1e-4).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        assert!(r.per_step_margin[0] > 0.0);
    }

    proptest! {
        #[test]
        fn round_trip(delta in 1e-6f64..1.0, horizon in 1usize..400, l in 0.5f64..1.3, s2 in 1e-5f64..1e-2) {
            let s = ScheduleSpec::constant(horizon, l, s2).unwrap();
            let c = ConcentrationConstants::scalar();
            let r = gap_radius(&s, &c, delta, horizon).unwrap();
            let back = linear_interval_threshold(l, s2, horizon, r).unwrap();
            prop_assert!((back - delta).abs() / delta < 1e-10, "{} vs {}", back, delta);
        }

        #[test]
        fn decreasing_in_radius_and_increasing_in_horizon(r in 0.0f64..3.0, dr in 1e-3f64..1.0, t in 1usize..300) {
            let a = linear_interval_threshold(0.99, 1e-3, t, r).unwrap();
            let b = linear_interval_threshold(0.99, 1e-3, t, r + dr).unwrap();
            prop_assert!(b <= a);
            if a < 1.0 && b > f64::MIN_POSITIVE {
                prop_assert!(b < a);
            }
            let c = linear_interval_threshold(0.99, 1e-3, t + 1, r).unwrap();
            prop_assert!(c >= a);
        }
    }
}
