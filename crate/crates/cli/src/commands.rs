//! Subcommand implementations.

use anyhow::{bail, Context};

use erosion_core::benchmarks;
use erosion_core::dynamics::{LipschitzSpec, SystemModel};
use erosion_core::gap_bound::{gap_profile, ConcentrationConstants, GapMethod, GapProfile, ScheduleSpec};
use erosion_core::geometry::{AxisBox, ConvexObstacle, SafeSet};
use erosion_core::montecarlo::{
    estimate_failure, failure_sweep, sample_trajectories, validate_gap_profile, Experiment, NoiseFamily,
    NoiseKind, ScaleSchedule,
};
use erosion_core::verifier::{
    estimate_tube_lipschitz, linear_interval_threshold, verify_barrier, verify_interval_closed_form,
    verify_reach_tube, BarrierProbe, InitialSet, TubeOptions, VerificationProblem, VerificationReport,
};

use crate::config::{ExperimentConfig, LipschitzConfig, LoadedConfig, MethodConfig, NoiseConfig};
use crate::output::{Cell, OutDir, Provenance};
use crate::registry::{BarrierRequest, Registry};

/// Everything derived from a config before any command-specific work.
pub struct Setup {
    /// Carries the Lipschitz schedule actually used.
    pub model: SystemModel,
    pub lipschitz: Vec<f64>,
    pub lipschitz_source: String,
    pub noise: NoiseFamily,
    pub constants: ConcentrationConstants,
    pub safe_set: SafeSet,
    pub initial_set: InitialSet,
    pub sharp: GapProfile,
    pub worst: GapProfile,
}

fn build_noise(cfg: &NoiseConfig, dim: usize) -> anyhow::Result<NoiseFamily> {
    let (kind, step_scale) = match cfg {
        NoiseConfig::Gaussian { variance, step_scale } => (NoiseKind::Gaussian { variance: *variance }, step_scale),
        NoiseConfig::UniformBall { radius, step_scale } => (NoiseKind::UniformBall { radius: *radius }, step_scale),
        NoiseConfig::ScaledRademacher { scale, step_scale } => {
            (NoiseKind::ScaledRademacher { scale: *scale }, step_scale)
        }
        NoiseConfig::SphereSurface { radius, step_scale } => {
            let base = NoiseFamily::sphere_surface(*radius, dim)?;
            (base.kind().clone(), step_scale)
        }
    };
    let scale = step_scale.clone().unwrap_or(ScaleSchedule::Constant(1.0));
    Ok(NoiseFamily::new(kind, dim, scale)?)
}

impl Setup {
    pub fn new(loaded: &LoadedConfig, registry: &Registry) -> anyhow::Result<Self> {
        let c = &loaded.config;
        let built = registry
            .build_model(&c.model.name, &c.model.params)
            .map_err(|e| loaded.error("model", format!("{e:#}")))?;
        let n = built.model.dim();
        let horizon = c.horizon;

        let initial_set = c.initial_set.clone().unwrap_or_else(|| InitialSet::point(vec![0.0; n]));
        if initial_set.dim() != n {
            return Err(loaded
                .error("initial_set", format!("dimension {} differs from state dimension {n}", initial_set.dim()))
                .into());
        }

        let (lipschitz, lipschitz_source) = match (&c.lipschitz, built.model.lipschitz_x()) {
            (Some(LipschitzConfig::Constant(l)), _) => (vec![*l; horizon], "config".to_string()),
            (Some(LipschitzConfig::PerStep(v)), _) => {
                if v.len() < horizon {
                    return Err(loaded
                        .error("lipschitz", format!("{} values for horizon {horizon}", v.len()))
                        .into());
                }
                (v[..horizon].to_vec(), "config".to_string())
            }
            (Some(LipschitzConfig::Estimate { estimate }), _) => (
                estimate_tube_lipschitz(
                    &built.model,
                    &initial_set,
                    c.nominal_input.as_ref(),
                    horizon,
                    estimate.margin,
                    &estimate.estimator(),
                )?,
                format!("sampled ({} pairs, inflation {})", estimate.samples, estimate.inflation),
            ),
            (None, Some(_)) => (built.model.lipschitz_schedule(horizon)?, "analytic".to_string()),
            (None, None) => {
                let Some(estimate) = built.default_estimate else {
                    return Err(loaded
                        .error("model", "no analytic Lipschitz constant; set `lipschitz`")
                        .into());
                };
                (
                    estimate_tube_lipschitz(
                        &built.model,
                        &initial_set,
                        c.nominal_input.as_ref(),
                        horizon,
                        estimate.margin,
                        &estimate.estimator(),
                    )?,
                    format!("sampled ({} pairs, inflation {})", estimate.samples, estimate.inflation),
                )
            }
        };
        log::info!("lipschitz ({lipschitz_source}): max {:.6}", lipschitz.iter().cloned().fold(0.0, f64::max));
        let model = built
            .model
            .clone()
            .with_lipschitz_x(LipschitzSpec::PerStep(lipschitz.clone()))
            .map_err(|e| loaded.error("lipschitz", e.to_string()))?;

        let noise = match (&c.noise, built.default_noise) {
            (Some(cfg), _) => build_noise(cfg, n).map_err(|e| loaded.error("noise", format!("{e:#}")))?,
            (None, Some(noise)) => noise,
            (None, None) => return Err(loaded.error("model", "this model has no default noise; set `noise`").into()),
        };

        let scalar_mode = c.scalar_mode.unwrap_or(n == 1);
        if scalar_mode && n != 1 {
            return Err(loaded.error("scalar_mode", format!("needs a scalar state, got dimension {n}")).into());
        }
        let mut constants = if scalar_mode {
            ConcentrationConstants::for_dimension(1, c.epsilon)
        } else {
            ConcentrationConstants::general(c.epsilon, n)
        }
        .map_err(|e| loaded.error("epsilon", e.to_string()))?;
        if let (Some(e1), Some(e2)) = (c.epsilon1, c.epsilon2) {
            constants = constants
                .with_overrides(e1, e2)
                .map_err(|e| loaded.error("epsilon1", e.to_string()))?;
        }

        let safe_set = build_safe_set(c, n).map_err(|e| loaded.error("safe_set", format!("{e:#}")))?;

        let schedule = ScheduleSpec::new(lipschitz.clone(), noise.variance_schedule(horizon))?;
        let sharp = gap_profile(&schedule, &constants, c.delta, GapMethod::Sharp)?;
        let worst = gap_profile(&schedule, &constants, c.delta, GapMethod::WorstCase)?;
        log::info!("r_m = {:.6} (sharp), {:.6} (worst case)", sharp.max_radius(), worst.max_radius());

        Ok(Self {
            model,
            lipschitz,
            lipschitz_source,
            noise,
            constants,
            safe_set,
            initial_set,
            sharp,
            worst,
        })
    }

    fn experiment<'a>(&'a self, c: &'a ExperimentConfig) -> Experiment<'a> {
        Experiment {
            model: &self.model,
            noise: &self.noise,
            initial_set: &self.initial_set,
            inputs: &c.inputs,
            horizon: c.horizon,
        }
    }

    /// `(L, σ²)` when both are time-invariant.
    fn constant_schedule(&self) -> Option<(f64, f64)> {
        let l = self.lipschitz[0];
        let s = self.sharp.schedule().variance_proxy();
        let sigma2 = s[0];
        (self.lipschitz.iter().all(|v| *v == l) && s.iter().all(|v| *v == sigma2)).then_some((l, sigma2))
    }
}

fn build_safe_set(c: &ExperimentConfig, n: usize) -> anyhow::Result<SafeSet> {
    let s = &c.safe_set;
    if let Some(r) = s.interval_radius {
        if n != 1 {
            bail!("`interval_radius` needs a scalar state, got dimension {n}");
        }
        return Ok(benchmarks::interval_safe_set(r)?);
    }
    let coords = s.spatial_coords.clone().unwrap_or_else(|| (0..n).collect());
    Ok(SafeSet::with_spatial_coords(s.obstacles.clone(), n, coords)?)
}

/// Per-run context shared by all subcommands.
pub struct Run<'a> {
    pub loaded: &'a LoadedConfig,
    pub out: OutDir,
    pub registry: &'a Registry,
}

impl<'a> Run<'a> {
    pub fn new(loaded: &'a LoadedConfig, out_root: std::path::PathBuf, registry: &'a Registry) -> Self {
        let provenance = Provenance::new(&loaded.text, loaded.resolved_json());
        Self {
            loaded,
            out: OutDir::new(out_root, provenance),
            registry,
        }
    }

    fn config(&self) -> &ExperimentConfig {
        &self.loaded.config
    }

    /// Writes `gap_profile.csv` with one row per step `t = 1..=T`.
    pub fn bound(&self) -> anyhow::Result<i32> {
        let s = Setup::new(self.loaded, self.registry)?;
        let rows = (1..=self.config().horizon).map(|t| [t.into(), s.sharp.radius(t).into(), s.worst.radius(t).into()]);
        self.out.write_csv("gap_profile.csv", &["t", "r_sharp", "r_worst"], rows)?;
        println!(
            "r_m = {} (sharp), {} (worst case) over T = {}",
            s.sharp.max_radius(),
            s.worst.max_radius(),
            self.config().horizon
        );
        Ok(0)
    }

    /// Writes `report.json`; the exit code is the verdict's.
    pub fn verify(&self) -> anyhow::Result<i32> {
        let c = self.config();
        let s = Setup::new(self.loaded, self.registry)?;
        let report = match c.method {
            MethodConfig::ReachTube => {
                let p = self.problem(&s)?;
                verify_reach_tube(
                    &p,
                    &TubeOptions {
                        nominal_input: c.nominal_input.clone(),
                        search_witness: true,
                    },
                )?
            }
            MethodConfig::Barrier => self.verify_barrier(&s)?,
            MethodConfig::ClosedForm => self.verify_closed_form(&s)?,
        };
        self.out.write_json("report.json", "report", &report)?;
        let worst = report.per_step_margin.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("{:?} by {:?}: worst margin {worst}", report.verdict, report.method);
        Ok(report.exit_code())
    }

    fn problem(&self, s: &Setup) -> anyhow::Result<VerificationProblem> {
        Ok(VerificationProblem::new(
            s.model.clone(),
            s.safe_set.clone(),
            s.initial_set.clone(),
            s.sharp.clone(),
        )
        .map_err(|e| self.loaded.error("initial_set", e.to_string()))?
        .with_erosion(self.config().erosion)
        .with_lipschitz_source(s.lipschitz_source.clone()))
    }

    fn verify_barrier(&self, s: &Setup) -> anyhow::Result<VerificationReport> {
        let c = self.config();
        let bc = c.barrier.as_ref().context("barrier method needs a `barrier` section")?;
        let cand = self
            .registry
            .build_barrier(&BarrierRequest {
                config: bc,
                model: &s.model,
                interval_radius: c.safe_set.interval_radius,
                max_erosion: s.sharp.max_radius(),
            })
            .map_err(|e| self.loaded.error("barrier", format!("{e:#}")))?;
        let region = match (&bc.region, c.safe_set.interval_radius) {
            (Some(b), _) => AxisBox::new(b.lower.clone(), b.upper.clone())
                .map_err(|e| self.loaded.error("region", e.to_string()))?,
            // a little past C, so the boundary check sees h < 0
            (None, Some(r)) => AxisBox::around(&[0.0], 1.1 * r + 0.01)?,
            (None, None) => return Err(self.loaded.error("barrier", "`region` is required").into()),
        };
        let mut probe = BarrierProbe::new(region);
        probe.seed = c.seed;
        if let Some(h) = bc.spacing {
            probe.spacing = h;
        }
        if let Some(k) = bc.input_samples {
            probe.input_samples = k;
        }
        Ok(verify_barrier(&self.problem(s)?, &cand, &probe)?)
    }

    fn verify_closed_form(&self, s: &Setup) -> anyhow::Result<VerificationReport> {
        let c = self.config();
        let Some(r) = c.safe_set.interval_radius else {
            return Err(self.loaded.error("method", "closed_form needs `safe_set.interval_radius`").into());
        };
        if s.initial_set.radius() != 0.0 || s.initial_set.center() != [0.0] {
            return Err(self.loaded.error("method", "closed_form needs the initial state 0").into());
        }
        let Some((l, sigma2)) = s.constant_schedule() else {
            return Err(self.loaded.error("method", "closed_form needs a constant gain and variance").into());
        };
        Ok(verify_interval_closed_form(l, sigma2, c.horizon, r, c.delta)?)
    }

    /// Writes the failure summary, per-step gap statistics, the validation
    /// summary and, when configured, the radius sweep and sample trajectories.
    pub fn simulate(&self) -> anyhow::Result<i32> {
        let c = self.config();
        let s = Setup::new(self.loaded, self.registry)?;
        let exp = s.experiment(c);

        let sim = estimate_failure(&exp, &s.safe_set, c.trials, c.seed, c.confidence)?;
        self.out.write_csv(
            "failure_summary.csv",
            &["trials", "failures", "empirical_delta", "ci_low", "ci_high", "confidence", "seed"],
            [[
                sim.trials.into(),
                sim.failures.into(),
                sim.empirical_delta.into(),
                sim.interval.low.into(),
                sim.interval.high.into(),
                c.confidence.into(),
                sim.seed.into(),
            ]],
        )?;
        println!(
            "{} failures in {} trials (empirical delta {}, {}% CI [{}, {}])",
            sim.failures,
            sim.trials,
            sim.empirical_delta,
            100.0 * c.confidence,
            sim.interval.low,
            sim.interval.high
        );

        let val = validate_gap_profile(&exp, &s.sharp, c.trials, c.seed)?;
        let rows = val.gap_quantiles.iter().map(|q| {
            [
                q.t.into(),
                s.sharp.radius(q.t).into(),
                s.worst.radius(q.t).into(),
                q.q50.into(),
                q.q99.into(),
                q.q999.into(),
                val.per_step_exceed_frac[q.t].into(),
            ]
        });
        self.out.write_csv(
            "gap_stats.csv",
            &["t", "r_sharp", "r_worst", "q50", "q99", "q999", "exceed_frac"],
            rows,
        )?;
        self.out.write_csv(
            "gap_validation.csv",
            &["trials", "delta", "exceedances", "exceed_frac", "tolerance", "validated", "seed"],
            [[
                val.trials.into(),
                val.delta.into(),
                val.exceedances.into(),
                val.exceed_frac.into(),
                val.tolerance.into(),
                Cell::from(if val.validated { "true" } else { "false" }),
                val.seed.into(),
            ]],
        )?;
        println!(
            "gap exceeded r_t in {} trials (fraction {}, delta {})",
            val.exceedances, val.exceed_frac, val.delta
        );

        if let Some(grid) = &c.r_grid {
            let sweep = failure_sweep(&exp, &grid.values(), c.trials, c.seed, c.confidence)?;
            let rows = sweep.iter().map(|p| {
                [
                    p.radius.into(),
                    p.failures.into(),
                    p.empirical_delta.into(),
                    p.interval.low.into(),
                    p.interval.high.into(),
                ]
            });
            self.out.write_csv(
                "failure_sweep.csv",
                &["R", "failures", "empirical_delta", "ci_low", "ci_high"],
                rows,
            )?;
        }

        if c.trajectories > 0 {
            self.write_trajectories(&s, &exp)?;
        }
        Ok(0)
    }

    fn write_trajectories(&self, s: &Setup, exp: &Experiment<'_>) -> anyhow::Result<()> {
        let c = self.config();
        let pairs = sample_trajectories(exp, c.trajectories, c.seed)?;
        let labels = s.model.dynamics().state_labels();
        let mut header = vec!["kind", "traj", "t"];
        header.extend(labels.iter().map(String::as_str));
        let mut rows = Vec::new();
        for (k, pair) in pairs.iter().enumerate() {
            for (kind, traj) in [("stochastic", &pair.stochastic), ("deterministic", &pair.deterministic)] {
                for (t, x) in traj.iter().enumerate() {
                    let mut row: Vec<Cell> = vec![kind.into(), k.into(), t.into()];
                    row.extend(x.iter().map(|v| Cell::from(*v)));
                    rows.push(row);
                }
            }
        }
        self.out.write_csv("trajectories.csv", &header, rows)?;

        // only planar discs have a natural (center, radius) row
        let erosion = s.sharp.max_radius();
        let mut rows = Vec::new();
        for (k, o) in s.safe_set.obstacles().iter().enumerate() {
            match o {
                ConvexObstacle::Ball { center, radius } if center.len() == 2 => rows.push([
                    k.into(),
                    "ball".into(),
                    center[0].into(),
                    center[1].into(),
                    (*radius).into(),
                    erosion.into(),
                ]),
                _ => log::warn!("obstacle {k} is not a planar disc; left out of obstacles.csv"),
            }
        }
        self.out
            .write_csv("obstacles.csv", &["index", "type", "cx", "cy", "radius", "erosion"], rows)?;
        Ok(())
    }

    /// Writes `threshold.csv` with `(R, δ̄, simulated δ)` per grid radius.
    pub fn threshold(&self) -> anyhow::Result<i32> {
        let c = self.config();
        let Some(grid) = &c.r_grid else {
            return Err(self.loaded.error("horizon", "threshold needs an `r_grid`").into());
        };
        let s = Setup::new(self.loaded, self.registry)?;
        if s.model.dim() != 1 {
            return Err(self.loaded.error("model", "threshold needs a scalar model").into());
        }
        let Some((l, sigma2)) = s.constant_schedule() else {
            return Err(self.loaded.error("lipschitz", "threshold needs a constant gain and variance").into());
        };
        let radii = grid.values();
        let simulated = if c.simulate_threshold {
            let sweep = failure_sweep(&s.experiment(c), &radii, c.trials, c.seed, c.confidence)?;
            sweep.into_iter().map(|p| Some(p.empirical_delta)).collect()
        } else {
            vec![None; radii.len()]
        };
        let rows = radii
            .iter()
            .zip(simulated)
            .map(|(&r, sim)| -> anyhow::Result<[Cell; 3]> {
                Ok([r.into(), linear_interval_threshold(l, sigma2, c.horizon, r)?.into(), sim.into()])
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        self.out
            .write_csv("threshold.csv", &["R", "delta_ours", "delta_simulated"], rows)?;
        Ok(0)
    }
}

/// Built-in configurations run by `demo`, as `(name, config, commands)`.
pub const DEMOS: &[(&str, &str, &[&str])] = &[
    ("linear_T100", LINEAR_T100, &["threshold", "bound", "verify", "simulate"]),
    ("linear_T200", LINEAR_T200, &["threshold", "bound", "verify", "simulate"]),
    ("unicycle", UNICYCLE, &["bound", "verify", "simulate"]),
];

const LINEAR_T100: &str = r#"{
  "model": {"name": "linear_scalar", "a": 0.99},
  "noise": {"type": "gaussian", "variance": 0.001},
  "safe_set": {"interval_radius": 1.5},
  "horizon": 100,
  "delta": 0.0001,
  "trials": 100000,
  "seed": 7,
  "r_grid": {"start": 0.0, "stop": 2.0, "step": 0.02},
  "simulate_threshold": true
}
"#;

const LINEAR_T200: &str = r#"{
  "model": {"name": "linear_scalar", "a": 0.99},
  "noise": {"type": "gaussian", "variance": 0.001},
  "safe_set": {"interval_radius": 1.5},
  "horizon": 200,
  "delta": 0.0001,
  "trials": 100000,
  "seed": 7,
  "r_grid": {"start": 0.0, "stop": 2.0, "step": 0.02},
  "simulate_threshold": true
}
"#;

const UNICYCLE: &str = r#"{
  "model": {"name": "unicycle", "eta": 0.01},
  "safe_set": {
    "spatial_coords": [0, 1],
    "obstacles": [
      {"type": "ball", "center": [1.5, 3.5], "radius": 0.9},
      {"type": "ball", "center": [-0.5, 2.0], "radius": 0.72},
      {"type": "ball", "center": [6.2, 0.7], "radius": 0.75}
    ]
  },
  "initial_set": {"type": "axis_box", "lower": [4.9, 4.9, -1.147197551196598], "upper": [5.1, 5.1, -0.9471975511965979]},
  "horizon": 100,
  "delta": 0.0001,
  "erosion": "max",
  "trials": 20000,
  "seed": 7,
  "trajectories": 50
}
"#;
