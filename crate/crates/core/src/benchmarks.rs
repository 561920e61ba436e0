//! The two case studies: a scalar linear system on an interval and a
//! unicycle steering around three discs.

use std::f64::consts::FRAC_PI_3;

use crate::dynamics::LipschitzEstimator;
use crate::error::Result;
use crate::geometry::{ConvexObstacle, SafeSet};
use crate::verifier::InitialSet;

/// Gain of the scalar benchmark `X_{t+1} = 0.99 X_t + w_t`.
pub const SCALAR_GAIN: f64 = 0.99;
/// Noise variance of the scalar benchmark.
pub const SCALAR_VARIANCE: f64 = 1e-3;

/// Failure probability targeted in the unicycle study.
pub const UNICYCLE_DELTA: f64 = 1e-4;
/// Distance added around the tube when estimating Lipschitz constants; it
/// must exceed the largest stochastic gap so the estimate covers noisy states.
pub const UNICYCLE_REGION_MARGIN: f64 = 1.0;

/// `C = [-R, R]`, written as the complement of two halfspaces.
pub fn interval_safe_set(radius: f64) -> Result<SafeSet> {
    SafeSet::new(
        vec![
            ConvexObstacle::polytope(vec![vec![-1.0]], vec![-radius])?,
            ConvexObstacle::polytope(vec![vec![1.0]], vec![-radius])?,
        ],
        1,
    )
}

/// Discs at (1.5, 3.5), (-0.5, 2) and (6.2, 0.7).
pub fn unicycle_obstacles() -> Vec<ConvexObstacle> {
    [([1.5, 3.5], 0.9), ([-0.5, 2.0], 0.72), ([6.2, 0.7], 0.75)]
        .into_iter()
        .map(|(c, r)| ConvexObstacle::ball(c.to_vec(), r).expect("valid disc"))
        .collect()
}

/// Obstacles in the plane, extended over the heading.
pub fn unicycle_safe_set() -> SafeSet {
    SafeSet::with_spatial_coords(unicycle_obstacles(), 3, vec![0, 1]).expect("planar obstacles")
}

/// `(5, 5, -π/3) ± 0.1`.
pub fn unicycle_initial_set() -> InitialSet {
    let c = [5.0, 5.0, -FRAC_PI_3];
    InitialSet::AxisBox {
        lower: c.iter().map(|v| v - 0.1).collect(),
        upper: c.iter().map(|v| v + 0.1).collect(),
    }
}

/// Sampling settings for the unicycle gains. The inflation is small
/// because it compounds over the horizon through the product of gains.
pub fn unicycle_estimator() -> LipschitzEstimator {
    LipschitzEstimator {
        samples: 2000,
        inflation: 1.001,
        seed: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clearance_at_start() {
        // min of the three signed distances from (5, 5)
        let s = unicycle_safe_set();
        let d1 = (3.5f64.powi(2) + 1.5f64.powi(2)).sqrt() - 0.9;
        let d2 = (5.5f64.powi(2) + 3.0f64.powi(2)).sqrt() - 0.72;
        let d3 = (1.2f64.powi(2) + 4.3f64.powi(2)).sqrt() - 0.75;
        let got = s.min_obstacle_clearance(&[5.0, 5.0, 0.3]).unwrap();
        assert!((got - d1.min(d2).min(d3)).abs() < 1e-12);
        assert!((got - d1).abs() < 1e-12);
    }

    #[test]
    fn interval_membership() {
        let s = interval_safe_set(0.5).unwrap();
        assert!(s.contains(&[0.5]).unwrap());
        assert!(s.contains(&[-0.5]).unwrap());
        assert!(!s.contains(&[0.5 + 1e-9]).unwrap());
        assert!((s.min_obstacle_clearance(&[0.2]).unwrap() - 0.3).abs() < 1e-12);
    }
}
