//! Probabilistic bounds on the stochastic trajectory gap.
//!
//! For `X_{t+1} = f(X_t, d_t, t) + w_t` with `f` being `L_t`-Lipschitz in the
//! state and `w_t ~ subG(σ_t²)`, the associated noise-free trajectory `x_t`
//! satisfies, with probability at least `1 - δ`,
//!
//! ```text
//! ‖X_t - x_t‖ ≤ r_{δ,t} = sqrt(Ψ_t · (ε₁·n + ε₂·log(T/δ)))   for all t ≤ T
//! ```
//!
//! where `Ψ_t` is the Lipschitz-weighted sum of variance proxies. The
//! worst-case alternative treats each `w_t` as a bounded input and propagates
//! the norm bound through the Lipschitz recursion; it is always at least as
//! large and is provided for comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default `ε` for the general concentration constants.
pub const DEFAULT_EPSILON: f64 = 1.0 / 16.0;

/// Per-step Lipschitz gains `L_0..L_{T-1}` and variance proxies `σ_0²..σ_{T-1}²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    lipschitz: Vec<f64>,
    variance_proxy: Vec<f64>,
}

impl ScheduleSpec {
    pub fn new(lipschitz: Vec<f64>, variance_proxy: Vec<f64>) -> Result<Self> {
        if lipschitz.is_empty() {
            return Err(Error::InvalidSchedule("horizon must be positive".into()));
        }
        if lipschitz.len() != variance_proxy.len() {
            return Err(Error::InvalidSchedule(format!(
                "{} lipschitz constants but {} variance proxies",
                lipschitz.len(),
                variance_proxy.len()
            )));
        }
        for (name, values) in [("lipschitz", &lipschitz), ("variance_proxy", &variance_proxy)] {
            if let Some((k, v)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || **v < 0.0)
            {
                return Err(Error::InvalidSchedule(format!(
                    "{name}[{k}] = {v} must be finite and nonnegative"
                )));
            }
        }
        Ok(Self {
            lipschitz,
            variance_proxy,
        })
    }

    /// Time-invariant schedule `L_t ≡ lipschitz`, `σ_t² ≡ variance_proxy`.
    pub fn constant(horizon: usize, lipschitz: f64, variance_proxy: f64) -> Result<Self> {
        Self::new(vec![lipschitz; horizon], vec![variance_proxy; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.lipschitz.len()
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn variance_proxy(&self) -> &[f64] {
        &self.variance_proxy
    }
}

/// Constants `(ε, ε₁, ε₂, n)` of the single-time deviation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConstants {
    pub epsilon: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub dimension: usize,
    pub scalar_mode: bool,
}

impl ConcentrationConstants {
    /// `ε₁ = 2·log(1 + 2/ε)/(1-ε)²`, `ε₂ = 2/(1-ε)²`.
    pub fn general(epsilon: f64, dimension: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::domain("epsilon", epsilon, "must lie in (0, 1)"));
        }
        if dimension == 0 {
            return Err(Error::domain("dimension", 0.0, "must be positive"));
        }
        let shrink = (1.0 - epsilon).powi(2);
        Ok(Self {
            epsilon,
            epsilon1: 2.0 * (1.0 + 2.0 / epsilon).ln() / shrink,
            epsilon2: 2.0 / shrink,
            dimension,
            scalar_mode: false,
        })
    }

    /// Hoeffding constants for scalar states: `ε₁ = 2·log 2`, `ε₂ = 2`.
    pub fn scalar() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            epsilon1: 2.0 * std::f64::consts::LN_2,
            epsilon2: 2.0,
            dimension: 1,
            scalar_mode: true,
        }
    }

    /// Scalar constants when `n = 1`, general constants otherwise.
    pub fn for_dimension(dimension: usize, epsilon: f64) -> Result<Self> {
        if dimension == 1 {
            let mut c = Self::scalar();
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(Error::domain("epsilon", epsilon, "must lie in (0, 1)"));
            }
            c.epsilon = epsilon;
            Ok(c)
        } else {
            Self::general(epsilon, dimension)
        }
    }

    /// Replaces `ε₁, ε₂` with caller-chosen values.
    pub fn with_overrides(mut self, epsilon1: f64, epsilon2: f64) -> Result<Self> {
        if !(epsilon1 > 0.0 && epsilon1.is_finite()) {
            return Err(Error::domain("epsilon1", epsilon1, "must be positive"));
        }
        if !(epsilon2 > 0.0 && epsilon2.is_finite()) {
            return Err(Error::domain("epsilon2", epsilon2, "must be positive"));
        }
        self.epsilon1 = epsilon1;
        self.epsilon2 = epsilon2;
        Ok(self)
    }

    /// `ε₁·n + ε₂·log(T/δ)`.
    pub fn multiplier(&self, horizon: usize, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        Ok(self.epsilon1 * self.dimension as f64 + self.epsilon2 * (horizon as f64 / delta).ln())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain("delta", delta, "must lie in (0, 1]"))
    }
}

/// `ψ_t = ∏_{k=0..t} L_k²`.
pub fn psi(schedule: &ScheduleSpec, t: usize) -> Result<f64> {
    if t >= schedule.horizon() {
        return Err(Error::StepOutOfRange {
            step: t,
            horizon: schedule.horizon() - 1,
        });
    }
    let gains = &schedule.lipschitz[..=t];
    if let Some(step) = gains.iter().position(|&l| l == 0.0) {
        return Err(Error::DegenerateSchedule { step });
    }
    Ok(gains.iter().map(|l| l * l).product())
}

/// `Ψ_t = ψ_{t-1} Σ_{k<t} σ_k² ψ_k⁻¹`, evaluated through
/// `Ψ_{k+1} = L_k² Ψ_k + σ_k²` with `Ψ_0 = 0`.
pub fn capital_psi(schedule: &ScheduleSpec, t: usize) -> Result<f64> {
    if t > schedule.horizon() {
        return Err(Error::StepOutOfRange {
            step: t,
            horizon: schedule.horizon(),
        });
    }
    Ok(schedule.lipschitz[..t]
        .iter()
        .zip(&schedule.variance_proxy[..t])
        .fold(0.0, |acc, (l, s2)| l * l * acc + s2))
}

/// `[Ψ_1, ..., Ψ_T]` in one pass.
pub fn capital_psi_profile(schedule: &ScheduleSpec) -> Vec<f64> {
    schedule
        .lipschitz
        .iter()
        .zip(&schedule.variance_proxy)
        .scan(0.0, |acc, (l, s2)| {
            *acc = l * l * *acc + s2;
            Some(*acc)
        })
        .collect()
}

/// `r_{δ,t} = sqrt(Ψ_t (ε₁ n + ε₂ log(T/δ)))`.
pub fn gap_radius(
    schedule: &ScheduleSpec,
    constants: &ConcentrationConstants,
    delta: f64,
    t: usize,
) -> Result<f64> {
    let m = constants.multiplier(schedule.horizon(), delta)?;
    Ok(capital_psi(schedule, t)?.sqrt() * m.sqrt())
}

/// Per-step norm bound `b` with `P(‖w_t‖ ≤ b, ∀t ≤ T) ≥ 1 - δ`.
pub fn noise_norm_bound(
    sigma2: f64,
    constants: &ConcentrationConstants,
    delta: f64,
    horizon: usize,
) -> Result<f64> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::domain("sigma2", sigma2, "must be finite and nonnegative"));
    }
    Ok(sigma2.sqrt() * constants.multiplier(horizon, delta)?.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMethod {
    Sharp,
    WorstCase,
}

/// Radii `r_{δ,1..T}` together with everything that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    radii: Vec<f64>,
    delta: f64,
    constants: ConcentrationConstants,
    schedule: ScheduleSpec,
    method: GapMethod,
}

impl GapProfile {
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Radius at step `t ∈ 0..=T`; the gap at `t = 0` is zero.
    pub fn radius(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.radii[t - 1]
        }
    }

    /// `r_m = max_{t ≤ T} r_{δ,t}`.
    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn constants(&self) -> &ConcentrationConstants {
        &self.constants
    }

    pub fn schedule(&self) -> &ScheduleSpec {
        &self.schedule
    }

    pub fn method(&self) -> GapMethod {
        self.method
    }

    pub fn horizon(&self) -> usize {
        self.radii.len()
    }
}

pub fn gap_profile(
    schedule: &ScheduleSpec,
    constants: &ConcentrationConstants,
    delta: f64,
    method: GapMethod,
) -> Result<GapProfile> {
    let root_m = constants.multiplier(schedule.horizon(), delta)?.sqrt();
    let radii = match method {
        GapMethod::Sharp => capital_psi_profile(schedule)
            .into_iter()
            .map(|psi| psi.sqrt() * root_m)
            .collect(),
        // Σ_k σ_k ∏_{j=k+1..t-1} L_j, accumulated as W_{k+1} = L_k W_k + σ_k.
        GapMethod::WorstCase => schedule
            .lipschitz
            .iter()
            .zip(&schedule.variance_proxy)
            .scan(0.0, |acc, (l, s2)| {
                *acc = l * *acc + s2.sqrt();
                Some(*acc * root_m)
            })
            .collect(),
    };
    Ok(GapProfile {
        radii,
        delta,
        constants: *constants,
        schedule: schedule.clone(),
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::{BigInt, BigRational, ToPrimitive};
    use proptest::prelude::*;

    fn ratio(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn psi_identity_gains() {
        let s = ScheduleSpec::constant(5, 1.0, 0.1).unwrap();
        assert_eq!(psi(&s, 3).unwrap(), 1.0);
    }

    #[test]
    fn psi_hand_product() {
        let s = ScheduleSpec::new(vec![2.0, 3.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(psi(&s, 1).unwrap(), 36.0);
    }

    #[test]
    fn psi_matches_exact_rational_product() {
        let s = ScheduleSpec::constant(100, 0.99, 1e-3).unwrap();
        let exact = (0..200).fold(ratio(1, 1), |acc, _| acc * ratio(99, 100));
        let expected = exact.to_f64().unwrap();
        assert!(rel_err(psi(&s, 99).unwrap(), expected) < 1e-13);
    }

    #[test]
    fn psi_rejects_zero_gain() {
        let s = ScheduleSpec::new(vec![1.0, 0.0, 2.0], vec![1.0; 3]).unwrap();
        assert_eq!(psi(&s, 0).unwrap(), 1.0);
        assert_eq!(psi(&s, 2), Err(Error::DegenerateSchedule { step: 1 }));
    }

    #[test]
    fn capital_psi_first_step_is_first_variance() {
        let s = ScheduleSpec::new(vec![3.0, 0.5], vec![0.25, 7.0]).unwrap();
        assert_eq!(capital_psi(&s, 1).unwrap(), 0.25);
    }

    #[test]
    fn capital_psi_matches_exact_rational_sum() {
        // Σ_{k=0}^{99} 10⁻³ · 0.99^{2(99-k)}, exactly.
        let s = ScheduleSpec::constant(100, 0.99, 1e-3).unwrap();
        let l2 = ratio(99, 100) * ratio(99, 100);
        let mut exact = ratio(0, 1);
        let mut weight = ratio(1, 1);
        for _ in 0..100 {
            exact += ratio(1, 1000) * &weight;
            weight *= &l2;
        }
        let expected = exact.to_f64().unwrap();
        assert!(rel_err(capital_psi(&s, 100).unwrap(), expected) < 1e-13);
    }

    #[test]
    fn capital_psi_defined_with_zero_gain() {
        let s = ScheduleSpec::new(vec![1.0, 0.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
        // the zero gain erases everything before it
        assert_eq!(capital_psi(&s, 3).unwrap(), 4.0 * 1.0 + 1.0);
    }

    #[test]
    fn capital_psi_constant_closed_form() {
        for &l in &[0.5, 0.99, 1.01, 1.2] {
            let s = ScheduleSpec::constant(300, l, 1e-3).unwrap();
            for t in [1, 10, 100, 300] {
                let closed = 1e-3 * (l.powi(2 * t as i32) - 1.0) / (l * l - 1.0);
                assert!(rel_err(capital_psi(&s, t).unwrap(), closed) < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_radius_formula() {
        let s = ScheduleSpec::constant(100, 0.99, 1e-3).unwrap();
        let c = ConcentrationConstants::for_dimension(1, DEFAULT_EPSILON).unwrap();
        assert!(c.scalar_mode);
        let psi_100: f64 = (0..100).map(|k| 1e-3 * 0.99f64.powi(2 * (99 - k))).sum();
        let expected = (psi_100 * (2.0 * 2f64.ln() + 2.0 * 1000f64.ln())).sqrt();
        assert!(rel_err(gap_radius(&s, &c, 0.1, 100).unwrap(), expected) < 1e-12);
    }

    #[test]
    fn zero_noise_gives_zero_radius() {
        let s = ScheduleSpec::constant(10, 1.3, 0.0).unwrap();
        let c = ConcentrationConstants::general(0.25, 2).unwrap();
        for t in 0..=10 {
            assert_eq!(gap_radius(&s, &c, 0.3, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn doubling_horizon_scales_radius() {
        let c = ConcentrationConstants::general(DEFAULT_EPSILON, 3).unwrap();
        let short = ScheduleSpec::constant(50, 1.01, 2e-3).unwrap();
        let long = ScheduleSpec::constant(100, 1.01, 2e-3).unwrap();
        let delta: f64 = 0.05;
        let base = c.epsilon1 * 3.0;
        let factor = ((base + c.epsilon2 * (100.0 / delta).ln())
            / (base + c.epsilon2 * (50.0 / delta).ln()))
        .sqrt();
        for t in [1, 17, 50] {
            let a = gap_radius(&short, &c, delta, t).unwrap();
            let b = gap_radius(&long, &c, delta, t).unwrap();
            assert!(rel_err(b, a * factor) < 1e-13);
        }
    }

    #[test]
    fn delta_domain() {
        let s = ScheduleSpec::constant(3, 1.0, 1.0).unwrap();
        let c = ConcentrationConstants::scalar();
        for bad in [0.0, -0.1, 1.0 + 1e-12, f64::NAN] {
            assert!(matches!(
                gap_radius(&s, &c, bad, 1),
                Err(Error::Domain { name: "delta", .. })
            ));
        }
        assert!(gap_radius(&s, &c, 1.0, 1).is_ok());
    }

    #[test]
    fn general_constants() {
        let c = ConcentrationConstants::general(1.0 / 16.0, 3).unwrap();
        let shrink = (15.0f64 / 16.0).powi(2);
        assert!(rel_err(c.epsilon1, 2.0 * 33f64.ln() / shrink) < 1e-15);
        assert!(rel_err(c.epsilon2, 2.0 / shrink) < 1e-15);
        assert!(ConcentrationConstants::general(1.0, 3).is_err());
        assert!(ConcentrationConstants::general(0.5, 0).is_err());
    }

    #[test]
    fn first_step_sharp_equals_worst() {
        let s = ScheduleSpec::new(vec![1.4, 0.7], vec![0.02, 0.03]).unwrap();
        let c = ConcentrationConstants::general(0.1, 2).unwrap();
        let sharp = gap_profile(&s, &c, 0.2, GapMethod::Sharp).unwrap();
        let worst = gap_profile(&s, &c, 0.2, GapMethod::WorstCase).unwrap();
        let expected = 0.02f64.sqrt() * c.multiplier(2, 0.2).unwrap().sqrt();
        assert_eq!(sharp.radius(1), worst.radius(1));
        assert!(rel_err(sharp.radius(1), expected) < 1e-15);
        assert!(worst.radius(2) > sharp.radius(2));
    }

    #[test]
    fn worst_case_constant_closed_form() {
        let (l, sigma) = (1.05f64, 0.03f64);
        let s = ScheduleSpec::constant(40, l, sigma * sigma).unwrap();
        let c = ConcentrationConstants::general(DEFAULT_EPSILON, 2).unwrap();
        let p = gap_profile(&s, &c, 0.01, GapMethod::WorstCase).unwrap();
        let root_m = c.multiplier(40, 0.01).unwrap().sqrt();
        for t in 1..=40 {
            let expected = sigma * (l.powi(t as i32) - 1.0) / (l - 1.0) * root_m;
            assert!(rel_err(p.radius(t), expected) < 1e-12);
        }
    }

    #[test]
    fn noise_norm_bound_matches_first_radius() {
        let c = ConcentrationConstants::general(DEFAULT_EPSILON, 3).unwrap();
        let s = ScheduleSpec::constant(500, 1.1, 1e-3).unwrap();
        let b = noise_norm_bound(1e-3, &c, 1e-4, 500).unwrap();
        assert_eq!(b, gap_radius(&s, &c, 1e-4, 1).unwrap());
        // direct evaluation of sqrt(σ² (ε₁ n + ε₂ log(T/δ)))
        let e: f64 = 1.0 / 16.0;
        let e1 = 2.0 * (1.0 + 2.0 / e).ln() / (1.0 - e).powi(2);
        let e2 = 2.0 / (1.0 - e).powi(2);
        let direct = (1e-3 * (e1 * 3.0 + e2 * (500.0 / 1e-4f64).ln())).sqrt();
        assert!(rel_err(b, direct) < 1e-14);
        assert_eq!(noise_norm_bound(0.0, &c, 0.5, 10).unwrap(), 0.0);
        assert!(noise_norm_bound(1.0, &c, 0.0, 10).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(ScheduleSpec::new(vec![], vec![]).is_err());
        assert!(ScheduleSpec::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(ScheduleSpec::new(vec![-1.0], vec![1.0]).is_err());
        assert!(ScheduleSpec::new(vec![1.0], vec![f64::INFINITY]).is_err());
    }

    fn schedule_strategy() -> impl Strategy<Value = ScheduleSpec> {
        (1usize..30).prop_flat_map(|t| {
            (
                prop::collection::vec(0.3f64..1.5, t),
                prop::collection::vec(0.0f64..0.01, t),
            )
                .prop_map(|(l, s)| ScheduleSpec::new(l, s).unwrap())
        })
    }

    proptest! {
        #[test]
        fn worst_case_dominates_sharp(s in schedule_strategy(), delta in 1e-4f64..1.0) {
            let c = ConcentrationConstants::general(DEFAULT_EPSILON, 2).unwrap();
            let sharp = gap_profile(&s, &c, delta, GapMethod::Sharp).unwrap();
            let worst = gap_profile(&s, &c, delta, GapMethod::WorstCase).unwrap();
            for (w, r) in worst.radii().iter().zip(sharp.radii()) {
                prop_assert!(*w >= r * (1.0 - 1e-12));
            }
        }

        #[test]
        fn radius_monotone_in_delta_and_horizon(
            s in schedule_strategy(),
            d1 in 1e-4f64..1.0,
            d2 in 1e-4f64..1.0,
        ) {
            let c = ConcentrationConstants::scalar();
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let mut longer = s.clone();
            longer.lipschitz.push(1.0);
            longer.variance_proxy.push(1e-3);
            for t in 1..=s.horizon() {
                prop_assert!(gap_radius(&s, &c, lo, t).unwrap() >= gap_radius(&s, &c, hi, t).unwrap());
                prop_assert!(gap_radius(&longer, &c, lo, t).unwrap() >= gap_radius(&s, &c, lo, t).unwrap());
            }
        }

        #[test]
        fn scalar_constants_are_tighter(eps in 1e-6f64..0.999999) {
            let g = ConcentrationConstants::general(eps, 1).unwrap();
            let s = ConcentrationConstants::scalar();
            prop_assert!(s.epsilon1 < g.epsilon1);
            prop_assert!(s.epsilon2 < g.epsilon2);
        }

        #[test]
        fn sharp_radius_monotone_with_positive_noise(
            l in prop::collection::vec(0.3f64..1.5, 20),
            s2 in prop::collection::vec(1e-6f64..0.01, 20),
        ) {
            // Ψ_{t+1} - Ψ_t = (L_t² - 1)Ψ_t + σ_t², which can go negative when L_t < 1;
            // monotonicity is only guaranteed for L_t ≥ 1.
            let l: Vec<f64> = l.into_iter().map(|v| v.max(1.0)).collect();
            let s = ScheduleSpec::new(l, s2).unwrap();
            let p = gap_profile(&s, &ConcentrationConstants::scalar(), 0.1, GapMethod::Sharp).unwrap();
            for w in p.radii().windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
        }
    }
}
