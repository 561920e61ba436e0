//! Safe sets given as complements of finite unions of convex obstacles.
//!
//! Eroding the safe set `C` by a ball of radius `r` is equivalent to inflating
//! every obstacle by `r`, so membership in `C ⊖ B(r)` reduces to a signed
//! distance query against each obstacle. All sets are closed: a point exactly
//! `r` away from the nearest obstacle is still inside the eroded set.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Convergence tolerance of the polytope projection.
pub const PROJECTION_TOLERANCE: f64 = 1e-9;
/// Sweep cap of the polytope projection.
pub const PROJECTION_MAX_SWEEPS: usize = 10_000;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    /// Allows `radius = 0` (a single point); obstacles require a positive radius.
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSet("ball center must be finite and nonempty".into()));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSet(format!("ball radius {radius} must be finite and nonnegative")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        distance(x, &self.center) <= self.radius
    }

    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        distance(x, &self.center) - self.radius
    }
}

/// Axis-aligned box `[lower, upper]`. Bounds may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AxisBoxRecord")]
pub struct AxisBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisBoxRecord {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<AxisBoxRecord> for AxisBox {
    type Error = Error;

    fn try_from(rec: AxisBoxRecord) -> Result<Self> {
        AxisBox::new(rec.lower, rec.upper)
    }
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidSet("box must have at least one dimension".into()));
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::InvalidSet(format!(
                    "box bounds [{lo}, {hi}] in coordinate {k} are not ordered"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Box of half-width `half_width` in every coordinate around `center`.
    pub fn around(center: &[f64], half_width: f64) -> Result<Self> {
        Self::new(
            center.iter().map(|c| c - half_width).collect(),
            center.iter().map(|c| c + half_width).collect(),
        )
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    /// Half the diagonal: radius of the smallest ball containing the box.
    pub fn circumradius(&self) -> f64 {
        0.5 * distance(&self.lower, &self.upper)
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn has_volume(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| u > l)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// All `2^n` corners, in binary order of the upper-bound selection.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|k| {
                        if mask & (1 << k) != 0 {
                            self.upper[k]
                        } else {
                            self.lower[k]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Exact signed distance.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let outside: f64 = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| {
                let gap = (l - v).max(v - u).max(0.0);
                gap * gap
            })
            .sum();
        if outside > 0.0 {
            return outside.sqrt();
        }
        let depth = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (v - l).min(u - v))
            .fold(f64::INFINITY, f64::min);
        -depth
    }

    /// Regular grid with `points_per_dim` nodes per coordinate, endpoints included.
    pub fn grid(&self, points_per_dim: usize) -> Result<Vec<Vec<f64>>> {
        if !self.is_bounded() {
            return Err(Error::InvalidSet("cannot grid an unbounded box".into()));
        }
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| linspace(*l, *u, points_per_dim))
            .collect();
        Ok(cartesian(&axes))
    }

    /// Grid with spacing at most `spacing` along each coordinate.
    pub fn grid_with_spacing(&self, spacing: f64) -> Result<Vec<Vec<f64>>> {
        if !(spacing > 0.0) || !self.is_bounded() {
            return Err(Error::InvalidSet(format!(
                "grid spacing {spacing} requires a bounded box and positive spacing"
            )));
        }
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| {
                let cells = ((u - l) / spacing).ceil().max(0.0) as usize;
                linspace(*l, *u, cells + 1)
            })
            .collect();
        Ok(cartesian(&axes))
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let step = (hi - lo) / (points - 1) as f64;
            (0..points)
                .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

/// Intersection of halfspaces `{x : ⟨a_i, x⟩ ≤ b_i}` with unit normals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polytope {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    bounded: bool,
}

impl Polytope {
    /// Normalizes each `(a_i, b_i)` pair and rejects empty intersections.
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        check_dim(normals.len(), offsets.len())?;
        let Some(first) = normals.first() else {
            return Err(Error::InvalidObstacle("polytope needs at least one halfspace".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidObstacle("polytope normals must be nonempty".into()));
        }
        let mut unit_normals = Vec::with_capacity(normals.len());
        let mut unit_offsets = Vec::with_capacity(offsets.len());
        for (a, b) in normals.into_iter().zip(offsets) {
            check_dim(dim, a.len())?;
            let len = norm(&a);
            if !(len > 0.0 && len.is_finite()) || !b.is_finite() {
                return Err(Error::InvalidObstacle(format!(
                    "halfspace with normal {a:?} and offset {b} is degenerate"
                )));
            }
            unit_normals.push(a.iter().map(|v| v / len).collect());
            unit_offsets.push(b / len);
        }
        let mut poly = Self {
            normals: unit_normals,
            offsets: unit_offsets,
            bounded: false,
        };
        let origin = vec![0.0; dim];
        let anchor = poly.project(&origin, &poly.offsets);
        if poly.max_violation(&anchor) > 1e-7 {
            return Err(Error::InvalidObstacle("polytope is empty".into()));
        }
        poly.bounded = poly.recession_cone_is_trivial();
        Ok(poly)
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    pub fn dim(&self) -> usize {
        self.normals[0].len()
    }

    fn margins<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(move |(a, b)| dot(a, x) - b)
    }

    fn max_violation(&self, x: &[f64]) -> f64 {
        self.margins(x).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.max_violation(x) <= 0.0
    }

    /// Dykstra's alternating projections onto `{⟨a_i, x⟩ ≤ offsets_i}`.
    fn project(&self, y: &[f64], offsets: &[f64]) -> Vec<f64> {
        let m = self.normals.len();
        let mut x = y.to_vec();
        let mut corrections = vec![vec![0.0; y.len()]; m];
        for _ in 0..PROJECTION_MAX_SWEEPS {
            let mut change = 0.0f64;
            for (i, (a, b)) in self.normals.iter().zip(offsets).enumerate() {
                let z: Vec<f64> = x.iter().zip(&corrections[i]).map(|(v, p)| v + p).collect();
                let excess = dot(a, &z) - b;
                let next: Vec<f64> = if excess > 0.0 {
                    z.iter().zip(a).map(|(v, ai)| v - excess * ai).collect()
                } else {
                    z.clone()
                };
                for ((p, zv), nv) in corrections[i].iter_mut().zip(&z).zip(&next) {
                    *p = zv - nv;
                }
                change = change.max(distance(&x, &next));
                x = next;
            }
            if change < PROJECTION_TOLERANCE {
                break;
            }
        }
        x
    }

    /// The polytope is bounded iff its recession cone `{d : ⟨a_i, d⟩ ≤ 0}` is
    /// `{0}`, i.e. every `±e_j` projects onto the cone at the origin.
    fn recession_cone_is_trivial(&self) -> bool {
        let n = self.dim();
        let zeros = vec![0.0; self.normals.len()];
        (0..n).all(|j| {
            [1.0, -1.0].iter().all(|s| {
                let mut e = vec![0.0; n];
                e[j] = *s;
                norm(&self.project(&e, &zeros)) < 1e-6
            })
        })
    }

    /// Euclidean distance outside; the largest halfspace margin (≤ 0) inside.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let worst = self.max_violation(x);
        if worst <= 0.0 {
            worst
        } else {
            distance(x, &self.project(x, &self.offsets))
        }
    }
}

#[derive(Deserialize)]
struct PolytopeRecord {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl<'de> Deserialize<'de> for Polytope {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rec = PolytopeRecord::deserialize(deserializer)?;
        Polytope::new(rec.normals, rec.offsets).map_err(serde::de::Error::custom)
    }
}

/// One convex component of the unsafe region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", try_from = "ObstacleRecord")]
pub enum ConvexObstacle {
    Ball { center: Vec<f64>, radius: f64 },
    AxisBox { lower: Vec<f64>, upper: Vec<f64> },
    HalfspacePolytope(Polytope),
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ObstacleRecord {
    Ball { center: Vec<f64>, radius: f64 },
    AxisBox { lower: Vec<f64>, upper: Vec<f64> },
    HalfspacePolytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
}

impl TryFrom<ObstacleRecord> for ConvexObstacle {
    type Error = Error;

    fn try_from(rec: ObstacleRecord) -> Result<Self> {
        match rec {
            ObstacleRecord::Ball { center, radius } => ConvexObstacle::ball(center, radius),
            ObstacleRecord::AxisBox { lower, upper } => ConvexObstacle::axis_box(lower, upper),
            ObstacleRecord::HalfspacePolytope { normals, offsets } => {
                ConvexObstacle::polytope(normals, offsets)
            }
        }
    }
}

impl ConvexObstacle {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidObstacle(format!("ball radius {radius} must be positive")));
        }
        let b = Ball::new(center, radius).map_err(|e| Error::InvalidObstacle(e.to_string()))?;
        Ok(ConvexObstacle::Ball {
            center: b.center,
            radius: b.radius,
        })
    }

    pub fn axis_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = AxisBox::new(lower, upper).map_err(|e| Error::InvalidObstacle(e.to_string()))?;
        if !b.has_volume() {
            return Err(Error::InvalidObstacle("box lower must be < upper componentwise".into()));
        }
        Ok(ConvexObstacle::AxisBox {
            lower: b.lower,
            upper: b.upper,
        })
    }

    pub fn polytope(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        Polytope::new(normals, offsets).map(ConvexObstacle::HalfspacePolytope)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexObstacle::Ball { center, .. } => center.len(),
            ConvexObstacle::AxisBox { lower, .. } => lower.len(),
            ConvexObstacle::HalfspacePolytope(p) => p.dim(),
        }
    }

    /// Signed distance from `x` to the obstacle; negative inside.
    pub fn signed_distance(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            ConvexObstacle::Ball { center, radius } => distance(x, center) - radius,
            ConvexObstacle::AxisBox { lower, upper } => AxisBox {
                lower: lower.clone(),
                upper: upper.clone(),
            }
            .signed_distance(x),
            ConvexObstacle::HalfspacePolytope(p) => p.signed_distance(x),
        })
    }
}

/// `C = ℝⁿ \ ∪ obstacles`, with obstacles living on `spatial_coords`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafeSet {
    obstacles: Vec<ConvexObstacle>,
    ambient_dim: usize,
    spatial_coords: Vec<usize>,
}

impl SafeSet {
    /// Obstacles defined on every coordinate.
    pub fn new(obstacles: Vec<ConvexObstacle>, ambient_dim: usize) -> Result<Self> {
        Self::with_spatial_coords(obstacles, ambient_dim, (0..ambient_dim).collect())
    }

    /// Obstacles defined on a subset of coordinates and extended cylindrically.
    pub fn with_spatial_coords(
        obstacles: Vec<ConvexObstacle>,
        ambient_dim: usize,
        spatial_coords: Vec<usize>,
    ) -> Result<Self> {
        if ambient_dim == 0 || spatial_coords.is_empty() {
            return Err(Error::InvalidSet("dimensions must be positive".into()));
        }
        if let Some(&k) = spatial_coords.iter().find(|&&k| k >= ambient_dim) {
            return Err(Error::InvalidSet(format!(
                "spatial coordinate {k} exceeds ambient dimension {ambient_dim}"
            )));
        }
        let mut seen = spatial_coords.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != spatial_coords.len() {
            return Err(Error::InvalidSet("spatial coordinates must be distinct".into()));
        }
        for o in &obstacles {
            check_dim(spatial_coords.len(), o.dim())?;
        }
        Ok(Self {
            obstacles,
            ambient_dim,
            spatial_coords,
        })
    }

    pub fn obstacles(&self) -> &[ConvexObstacle] {
        &self.obstacles
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn spatial_coords(&self) -> &[usize] {
        &self.spatial_coords
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.ambient_dim, x.len())?;
        Ok(self.spatial_coords.iter().map(|&k| x[k]).collect())
    }

    /// Smallest signed distance to any obstacle, `+∞` without obstacles.
    pub fn min_obstacle_clearance(&self, x: &[f64]) -> Result<f64> {
        let p = self.project(x)?;
        self.obstacles
            .iter()
            .try_fold(f64::INFINITY, |acc, o| Ok(acc.min(o.signed_distance(&p)?)))
    }

    /// `x ∈ C ⊖ B(r)`.
    pub fn in_eroded_set(&self, x: &[f64], r: f64) -> Result<bool> {
        if !(r >= 0.0) {
            return Err(Error::domain("erosion radius", r, "must be nonnegative"));
        }
        Ok(self.min_obstacle_clearance(x)? >= r)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.in_eroded_set(x, 0.0)
    }

    /// Searches a nested grid of `2^level + 1` points per coordinate of
    /// `probe` for a point of `C ⊖ B(r)`. `false` means no witness was found,
    /// not that the eroded set is empty. Grids at successive levels are
    /// nested, so refining never loses a witness.
    pub fn erosion_nonempty(&self, r: f64, probe: &AxisBox, level: u32) -> Result<bool> {
        check_dim(self.ambient_dim, probe.dim())?;
        if !probe.is_bounded() {
            return Err(Error::InvalidSet("probe box must be bounded".into()));
        }
        if self.obstacles.is_empty() {
            return Ok(true);
        }
        let per_dim = (1usize << level.min(20)) + 1;
        for x in probe.grid(per_dim)? {
            if self.in_eroded_set(&x, r)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}
