//! Deterministic update maps `x_{t+1} = f(x_t, d_t, t)` and their input sets.

mod linear;
mod unicycle;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::AxisBox;

pub use linear::{LinearMatrix, LinearScalar};
pub use unicycle::{wrap_angle, Unicycle, UnicycleConfig};

/// A noise-free discrete-time update map.
pub trait Dynamics: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn input_dim(&self) -> usize;

    fn update(&self, x: &[f64], d: &[f64], t: usize) -> Vec<f64>;

    /// `a - b` in the state space. Models with angular coordinates override
    /// this to return the shortest angular difference.
    fn difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    /// Column names for tabular output.
    fn state_labels(&self) -> Vec<String> {
        (0..self.dim()).map(|k| format!("x{k}")).collect()
    }

    /// Maps a perturbed state back to its canonical chart, e.g. wraps angles.
    fn normalize(&self, _x: &mut [f64]) {}
}

/// Admissible input set `D ⊂ ℝ^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputSet {
    /// `m = 0`.
    Empty,
    AxisBox(AxisBox),
    /// Convex hull of finitely many points.
    Vertices { points: Vec<Vec<f64>> },
}

const HULL_TOLERANCE: f64 = 1e-9;

impl InputSet {
    pub fn vertices_hull(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidSet("vertex list is empty".into()));
        };
        let m = first.len();
        for p in &points {
            check_dim(m, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSet("vertices must be finite".into()));
            }
        }
        Ok(InputSet::Vertices { points })
    }

    pub fn dim(&self) -> usize {
        match self {
            InputSet::Empty => 0,
            InputSet::AxisBox(b) => b.dim(),
            InputSet::Vertices { points } => points[0].len(),
        }
    }

    /// Extreme points; the single empty input for `m = 0`.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            InputSet::Empty => vec![Vec::new()],
            InputSet::AxisBox(b) => b.corners(),
            InputSet::Vertices { points } => points.clone(),
        }
    }

    pub fn contains(&self, d: &[f64]) -> bool {
        if d.len() != self.dim() {
            return false;
        }
        match self {
            InputSet::Empty => true,
            InputSet::AxisBox(b) => d
                .iter()
                .zip(b.lower().iter().zip(b.upper()))
                .all(|(v, (l, u))| *v >= l - HULL_TOLERANCE && *v <= u + HULL_TOLERANCE),
            InputSet::Vertices { points } => hull_distance(points, d) <= HULL_TOLERANCE,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            InputSet::Empty => Vec::new(),
            InputSet::AxisBox(b) => b
                .lower()
                .iter()
                .zip(b.upper())
                .map(|(l, u)| if u > l { rng.random_range(*l..=*u) } else { *l })
                .collect(),
            InputSet::Vertices { points } => {
                // flat Dirichlet weights
                let w: Vec<f64> = points.iter().map(|_| Exp1.sample(rng)).collect();
                let total: f64 = w.iter().sum();
                let mut d = vec![0.0; points[0].len()];
                for (p, wi) in points.iter().zip(&w) {
                    for (acc, v) in d.iter_mut().zip(p) {
                        *acc += wi / total * v;
                    }
                }
                d
            }
        }
    }

    /// Center of (approximately) the smallest enclosing ball; this is the
    /// nominal input that minimizes `max_{d ∈ D} ‖d - d*‖`.
    pub fn nominal_center(&self) -> Vec<f64> {
        match self {
            InputSet::Empty => Vec::new(),
            InputSet::AxisBox(b) => b.center(),
            InputSet::Vertices { points } => {
                // Bădoiu–Clarkson iteration
                let mut c = points[0].clone();
                for i in 1..2000 {
                    let far = points
                        .iter()
                        .max_by(|a, b| dist(a, &c).total_cmp(&dist(b, &c)))
                        .expect("nonempty");
                    let w = 1.0 / (i as f64 + 1.0);
                    for (ci, fi) in c.iter_mut().zip(far) {
                        *ci += w * (fi - *ci);
                    }
                }
                c
            }
        }
    }

    /// `max_{d ∈ D} ‖d - center‖`, attained at a vertex.
    pub fn radius_about(&self, center: &[f64]) -> f64 {
        self.vertices()
            .iter()
            .map(|v| dist(v, center))
            .fold(0.0, f64::max)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distance from `d` to the convex hull of `points` by Wolfe's minimum-norm
/// point algorithm, which terminates after finitely many corral updates.
fn hull_distance(points: &[Vec<f64>], d: &[f64]) -> f64 {
    let shifted: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(d).map(|(a, b)| a - b).collect())
        .collect();
    let scale = shifted.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(1.0);
    let combine = |corral: &[usize], weights: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; d.len()];
        for (&i, w) in corral.iter().zip(weights) {
            for (xk, pk) in x.iter_mut().zip(&shifted[i]) {
                *xk += w * pk;
            }
        }
        x
    };
    let first = (0..shifted.len())
        .min_by(|&a, &b| dot(&shifted[a], &shifted[a]).total_cmp(&dot(&shifted[b], &shifted[b])))
        .expect("nonempty");
    let mut corral = vec![first];
    let mut weights = vec![1.0];
    let mut x = shifted[first].clone();
    for _ in 0..1000 {
        let xx = dot(&x, &x);
        let (j, xj) = (0..shifted.len())
            .map(|j| (j, dot(&x, &shifted[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if xx - xj <= 1e-14 * scale || corral.contains(&j) {
            break;
        }
        corral.push(j);
        weights.push(0.0);
        loop {
            let alpha = affine_minimizer(&shifted, &corral);
            if alpha.iter().all(|&a| a > 1e-14) {
                weights = alpha;
                x = combine(&corral, &weights);
                break;
            }
            let theta = weights
                .iter()
                .zip(&alpha)
                .filter(|(_, a)| **a <= 1e-14)
                .map(|(w, a)| w / (w - a))
                .fold(1.0, f64::min);
            for (w, a) in weights.iter_mut().zip(&alpha) {
                *w += theta * (a - *w);
            }
            let keep: Vec<bool> = weights.iter().map(|w| *w > 1e-14).collect();
            let mut k = 0;
            corral.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            weights.retain(|w| *w > 1e-14);
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            x = combine(&corral, &weights);
            if corral.len() == 1 {
                break;
            }
        }
    }
    dot(&x, &x).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weights of the minimum-norm point of the affine hull of `corral`.
fn affine_minimizer(points: &[Vec<f64>], corral: &[usize]) -> Vec<f64> {
    let k = corral.len();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for (a, &i) in corral.iter().enumerate() {
        for (b, &j) in corral.iter().enumerate() {
            m[(a, b)] = dot(&points[i], &points[j]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    rhs[k] = 1.0;
    match m.clone().lu().solve(&rhs) {
        Some(sol) => sol.iter().take(k).copied().collect(),
        // affinely dependent corral: fall back to least squares
        None => {
            let svd = m.svd(true, true);
            let sol = svd.solve(&rhs, 1e-12).expect("svd solve");
            sol.iter().take(k).copied().collect()
        }
    }
}

/// Lipschitz gain of `f` in `x`: one constant or one value per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LipschitzSpec {
    Constant(f64),
    PerStep(Vec<f64>),
}

impl LipschitzSpec {
    pub fn at(&self, t: usize) -> Option<f64> {
        match self {
            LipschitzSpec::Constant(l) => Some(*l),
            LipschitzSpec::PerStep(v) => v.get(t).copied(),
        }
    }
}

/// Sampling-based Lipschitz estimation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimator {
    pub samples: usize,
    pub inflation: f64,
    pub seed: u64,
}

impl Default for LipschitzEstimator {
    fn default() -> Self {
        Self {
            samples: 1000,
            inflation: 1.05,
            seed: 0,
        }
    }
}

/// Deterministic system `x_{t+1} = f(x_t, d_t, t)` with `d_t ∈ D`.
#[derive(Debug, Clone)]
pub struct SystemModel {
    dynamics: Arc<dyn Dynamics>,
    input_set: InputSet,
    lipschitz_x: Option<LipschitzSpec>,
    lipschitz_d: Option<f64>,
}

impl SystemModel {
    pub fn new(dynamics: Arc<dyn Dynamics>, input_set: InputSet) -> Result<Self> {
        if dynamics.dim() == 0 {
            return Err(Error::InvalidSet("state dimension must be positive".into()));
        }
        check_dim(dynamics.input_dim(), input_set.dim())?;
        Ok(Self {
            dynamics,
            input_set,
            lipschitz_x: None,
            lipschitz_d: None,
        })
    }

    pub fn with_lipschitz_x(mut self, spec: LipschitzSpec) -> Result<Self> {
        let bad = match &spec {
            LipschitzSpec::Constant(l) => !(l.is_finite() && *l >= 0.0),
            LipschitzSpec::PerStep(v) => v.iter().any(|l| !(l.is_finite() && *l >= 0.0)),
        };
        if bad {
            return Err(Error::InvalidSchedule(format!(
                "lipschitz constants must be finite and nonnegative: {spec:?}"
            )));
        }
        self.lipschitz_x = Some(spec);
        Ok(self)
    }

    pub fn with_lipschitz_d(mut self, gain: f64) -> Result<Self> {
        if !(gain.is_finite() && gain >= 0.0) {
            return Err(Error::domain("lipschitz_d", gain, "must be finite and nonnegative"));
        }
        self.lipschitz_d = Some(gain);
        Ok(self)
    }

    /// `x_{t+1} = a·x_t`; the noise-free part of the scalar benchmark with `a = 0.99`.
    pub fn linear_scalar(a: f64) -> Self {
        Self::new(Arc::new(LinearScalar::new(a)), InputSet::Empty)
            .and_then(|m| m.with_lipschitz_x(LipschitzSpec::Constant(a.abs())))
            .and_then(|m| m.with_lipschitz_d(0.0))
            .expect("scalar model is well formed")
    }

    /// `x_{t+1} = A x_t + B d_t` with analytic gains `‖A‖₂`, `‖B‖₂`.
    pub fn linear_matrix(linear: LinearMatrix, input_set: InputSet) -> Result<Self> {
        let (lx, ld) = (linear.state_gain(), linear.input_gain());
        Self::new(Arc::new(linear), input_set)?
            .with_lipschitz_x(LipschitzSpec::Constant(lx))?
            .with_lipschitz_d(ld)
    }

    /// Unicycle with `|d| ≤ d_bound` on the angular rate. The gain in `x`
    /// has no closed form and must be estimated.
    pub fn unicycle(config: UnicycleConfig) -> Result<Self> {
        let input_set = InputSet::AxisBox(AxisBox::new(vec![-config.d_bound], vec![config.d_bound])?);
        let eta = config.eta;
        Self::new(Arc::new(Unicycle::new(config)?), input_set)?.with_lipschitz_d(eta)
    }

    pub fn dynamics(&self) -> &Arc<dyn Dynamics> {
        &self.dynamics
    }

    pub fn name(&self) -> &str {
        self.dynamics.name()
    }

    pub fn dim(&self) -> usize {
        self.dynamics.dim()
    }

    pub fn input_dim(&self) -> usize {
        self.dynamics.input_dim()
    }

    pub fn input_set(&self) -> &InputSet {
        &self.input_set
    }

    pub fn lipschitz_x(&self) -> Option<&LipschitzSpec> {
        self.lipschitz_x.as_ref()
    }

    pub fn lipschitz_d(&self) -> Option<f64> {
        self.lipschitz_d
    }

    /// `[L_0, ..., L_{T-1}]` from the configured gain.
    pub fn lipschitz_schedule(&self, horizon: usize) -> Result<Vec<f64>> {
        let spec = self
            .lipschitz_x
            .as_ref()
            .ok_or_else(|| Error::LipschitzUnavailable(self.name().to_string()))?;
        (0..horizon)
            .map(|t| {
                spec.at(t).ok_or_else(|| {
                    Error::InvalidSchedule(format!("no lipschitz constant for step {t}"))
                })
            })
            .collect()
    }

    pub fn difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.dynamics.difference(a, b)
    }

    /// `‖a - b‖` under the model's state difference.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.difference(a, b).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalize(&self, x: &mut [f64]) {
        self.dynamics.normalize(x)
    }

    /// Applies `f` without checking `d ∈ D`.
    pub(crate) fn step_unchecked(&self, x: &[f64], d: &[f64], t: usize) -> Vec<f64> {
        self.dynamics.update(x, d, t)
    }

    pub fn step(&self, x: &[f64], d: &[f64], t: usize) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        if !self.input_set.contains(d) {
            return Err(Error::InputOutsideSet {
                input: d.to_vec(),
                step: t,
            });
        }
        Ok(self.dynamics.update(x, d, t))
    }

    /// `(x_0, ..., x_T)` under `inputs[0..T]`.
    pub fn trajectory(&self, x0: &[f64], inputs: &[Vec<f64>], horizon: usize) -> Result<Vec<Vec<f64>>> {
        if inputs.len() < horizon {
            return Err(Error::Inconsistent(format!(
                "{} inputs supplied for horizon {horizon}",
                inputs.len()
            )));
        }
        let mut traj = Vec::with_capacity(horizon + 1);
        traj.push(x0.to_vec());
        for (t, d) in inputs.iter().take(horizon).enumerate() {
            let next = self.step(&traj[t], d, t)?;
            traj.push(next);
        }
        Ok(traj)
    }

    /// Largest observed `‖f(x,d,t) - f(y,d,t)‖ / ‖x - y‖` over random pairs in
    /// `region` and random admissible `d`, times `est.inflation`.
    ///
    /// Half of the pairs are drawn independently over the region and half
    /// are short-range pairs, which probe the local Jacobian. Draws for a
    /// given seed form a fixed sequence, so the estimate is nondecreasing in
    /// `est.samples`.
    pub fn estimate_lipschitz(&self, region: &AxisBox, t: usize, est: &LipschitzEstimator) -> Result<f64> {
        check_dim(self.dim(), region.dim())?;
        if est.samples < 2 {
            return Err(Error::domain("samples", est.samples as f64, "must be at least 2"));
        }
        if !(est.inflation >= 1.0 && est.inflation.is_finite()) {
            return Err(Error::domain("inflation", est.inflation, "must be finite and at least 1"));
        }
        if !region.is_bounded() || !region.has_volume() {
            return Err(Error::DegenerateRegion(format!(
                "region {:?}..{:?} has zero or infinite volume",
                region.lower(),
                region.upper()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(est.seed);
        rng.set_stream(t as u64);
        let scale = region.circumradius() * 1e-4;
        let uniform = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            region
                .lower()
                .iter()
                .zip(region.upper())
                .map(|(l, u)| rng.random_range(*l..*u))
                .collect()
        };
        let mut best = 0.0f64;
        for i in 0..est.samples {
            let x = uniform(&mut rng);
            let y: Vec<f64> = if i % 2 == 0 {
                uniform(&mut rng)
            } else {
                let dir: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                let len = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                x.iter().zip(&dir).map(|(xi, di)| xi + scale * di / len).collect()
            };
            let d = self.input_set.sample(&mut rng);
            let denom = self.distance(&x, &y);
            if denom == 0.0 {
                continue;
            }
            let fx = self.dynamics.update(&x, &d, t);
            let fy = self.dynamics.update(&y, &d, t);
            best = best.max(self.distance(&fx, &fy) / denom);
        }
        Ok(best * est.inflation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;

    fn exact(samples: usize) -> LipschitzEstimator {
        LipschitzEstimator {
            samples,
            inflation: 1.0,
            seed: 7,
        }
    }

    #[test]
    fn scalar_step() {
        let m = SystemModel::linear_scalar(0.99);
        assert_eq!(m.step(&[1.0], &[], 0).unwrap(), vec![0.99]);
        assert!(m.step(&[1.0, 2.0], &[], 0).is_err());
    }

    #[test]
    fn scalar_trajectory_from_origin_is_zero() {
        let m = SystemModel::linear_scalar(0.99);
        let traj = m.trajectory(&[0.0], &vec![vec![]; 100], 100).unwrap();
        assert_eq!(traj.len(), 101);
        assert!(traj.iter().all(|x| x[0] == 0.0));
        assert_eq!(m.trajectory(&[0.3], &[], 0).unwrap(), vec![vec![0.3]]);
    }

    #[test]
    fn identity_matrix_is_identity_map() {
        let m = SystemModel::linear_matrix(LinearMatrix::new(DMatrix::identity(3, 3), None).unwrap(), InputSet::Empty)
            .unwrap();
        assert_eq!(m.step(&[1.0, -2.0, 3.5], &[], 4).unwrap(), vec![1.0, -2.0, 3.5]);
        let region = AxisBox::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let l = m.estimate_lipschitz(&region, 0, &exact(50)).unwrap();
        assert!((l - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scalar_estimate_is_exact() {
        let m = SystemModel::linear_scalar(0.99);
        let region = AxisBox::new(vec![-2.0], vec![3.0]).unwrap();
        let l = m.estimate_lipschitz(&region, 5, &exact(2)).unwrap();
        assert!((l - 0.99).abs() < 1e-9);
        let inflated = m.estimate_lipschitz(&region, 5, &LipschitzEstimator::default()).unwrap();
        assert!((inflated - 0.99 * 1.05).abs() < 1e-9);
    }

    #[test]
    fn estimate_rejects_degenerate_region() {
        let m = SystemModel::linear_scalar(0.5);
        let flat = AxisBox::new(vec![1.0], vec![1.0]).unwrap();
        assert!(matches!(
            m.estimate_lipschitz(&flat, 0, &exact(10)),
            Err(Error::DegenerateRegion(_))
        ));
        let region = AxisBox::new(vec![0.0], vec![1.0]).unwrap();
        assert!(m.estimate_lipschitz(&region, 0, &exact(1)).is_err());
    }

    #[test]
    fn matrix_estimate_approaches_spectral_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let sigma_max = a.clone().svd(false, false).singular_values.max();
            let m = SystemModel::linear_matrix(LinearMatrix::new(a, None).unwrap(), InputSet::Empty).unwrap();
            let region = AxisBox::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
            let mut previous = 0.0;
            for samples in [10, 100, 1000, 10_000] {
                let l = m.estimate_lipschitz(&region, 0, &exact(samples)).unwrap();
                assert!(l <= sigma_max * (1.0 + 1e-9));
                assert!(l >= previous);
                previous = l;
            }
            assert!(previous > 0.98 * sigma_max, "{previous} vs {sigma_max}");
            if let Some(LipschitzSpec::Constant(analytic)) = m.lipschitz_x() {
                assert!((analytic - sigma_max).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn estimate_median_nondecreasing_in_samples() {
        let m = SystemModel::unicycle(UnicycleConfig::default()).unwrap();
        let region = AxisBox::around(&[4.0, 4.0, -1.0], 0.5).unwrap();
        let medians: Vec<f64> = [50, 100, 200, 400]
            .iter()
            .map(|&samples| {
                let mut v: Vec<f64> = (0..20)
                    .map(|seed| {
                        let est = LipschitzEstimator {
                            samples,
                            inflation: 1.0,
                            seed,
                        };
                        m.estimate_lipschitz(&region, 0, &est).unwrap()
                    })
                    .collect();
                v.sort_by(f64::total_cmp);
                0.5 * (v[9] + v[10])
            })
            .collect();
        for w in medians.windows(2) {
            assert!(w[1] >= w[0], "{medians:?}");
        }
    }

    #[test]
    fn input_set_membership() {
        let tri = InputSet::vertices_hull(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(tri.contains(&[0.2, 0.2]));
        assert!(tri.contains(&[0.5, 0.5]));
        assert!(tri.contains(&[1.0, 0.0]));
        assert!(!tri.contains(&[0.6, 0.6]));
        assert!(!tri.contains(&[-0.1, 0.5]));
        assert!(!tri.contains(&[0.1]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(tri.contains(&tri.sample(&mut rng)));
        }
        let b = InputSet::AxisBox(AxisBox::new(vec![-0.1], vec![0.1]).unwrap());
        assert!(b.contains(&[0.1]));
        assert!(!b.contains(&[0.11]));
        assert_eq!(b.nominal_center(), vec![0.0]);
        assert!((b.radius_about(&[0.0]) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn enclosing_center_of_vertices() {
        let seg = InputSet::vertices_hull(vec![vec![-1.0, 0.0], vec![3.0, 0.0], vec![1.0, 0.5]]).unwrap();
        let c = seg.nominal_center();
        assert!((c[0] - 1.0).abs() < 5e-3 && c[1].abs() < 5e-3, "{c:?}");
        assert!(seg.radius_about(&c) < 2.0 + 1e-2);
    }

    #[test]
    fn step_rejects_inputs_outside_set() {
        let m = SystemModel::unicycle(UnicycleConfig::default()).unwrap();
        assert!(matches!(
            m.step(&[1.0, 1.0, 0.0], &[0.5], 3),
            Err(Error::InputOutsideSet { step: 3, .. })
        ));
        assert!(m.lipschitz_schedule(3).is_err());
    }
}
