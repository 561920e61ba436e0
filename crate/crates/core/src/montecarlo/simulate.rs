use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::NoiseFamily;
use super::rng::{stream, Lane};
use super::stats::{clopper_pearson, quantile_sorted, ConfidenceInterval};
use crate::dynamics::SystemModel;
use crate::error::{check_dim, Error, Result};
use crate::gap_bound::GapProfile;
use crate::geometry::SafeSet;
use crate::verifier::InitialSet;

/// How the input sequence `d_0, ..., d_{T-1}` of a trial is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSampler {
    /// The same input at every step.
    Constant { input: Vec<f64> },
    /// The center of the smallest ball enclosing `D` at every step.
    Nominal,
    /// Independent uniform draws from `D`.
    Uniform,
}

impl InputSampler {
    fn resolve(&self, model: &SystemModel) -> Result<Option<Vec<f64>>> {
        let fixed = match self {
            InputSampler::Constant { input } => input.clone(),
            InputSampler::Nominal => model.input_set().nominal_center(),
            InputSampler::Uniform => return Ok(None),
        };
        if !model.input_set().contains(&fixed) {
            return Err(Error::InputOutsideSet { input: fixed, step: 0 });
        }
        Ok(Some(fixed))
    }
}

/// Everything that defines one stochastic trial except its index.
#[derive(Debug, Clone, Copy)]
pub struct Experiment<'a> {
    pub model: &'a SystemModel,
    pub noise: &'a NoiseFamily,
    pub initial_set: &'a InitialSet,
    pub inputs: &'a InputSampler,
    pub horizon: usize,
}

impl Experiment<'_> {
    fn validate(&self) -> Result<Option<Vec<f64>>> {
        check_dim(self.model.dim(), self.noise.dim())?;
        check_dim(self.model.dim(), self.initial_set.dim())?;
        self.initial_set.validate()?;
        self.inputs.resolve(self.model)
    }

    fn inputs_for(&self, fixed: &Option<Vec<f64>>, seed: u64, trial: u64) -> Vec<Vec<f64>> {
        (0..self.horizon)
            .map(|t| match fixed {
                Some(d) => d.clone(),
                None => self
                    .model
                    .input_set()
                    .sample(&mut stream(seed, trial, t as u64, Lane::Input)),
            })
            .collect()
    }

    fn initial_state(&self, seed: u64, trial: u64) -> Vec<f64> {
        self.initial_set.sample(&mut stream(seed, trial, 0, Lane::Initial))
    }
}

/// A stochastic trajectory, its noise-free twin and their distance.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedTrajectory {
    pub stochastic: Vec<Vec<f64>>,
    pub deterministic: Vec<Vec<f64>>,
    /// `‖X_t - x_t‖` for `t = 0..=T`.
    pub gap: Vec<f64>,
}

/// `X_{t+1} = f(X_t, d_t, t) + w_t` and `x_{t+1} = f(x_t, d_t, t)` from the
/// same `x_0` and inputs. Noise for trial `trial` comes from its own stream.
pub fn simulate_pair(
    model: &SystemModel,
    noise: &NoiseFamily,
    x0: &[f64],
    inputs: &[Vec<f64>],
    horizon: usize,
    seed: u64,
    trial: u64,
) -> Result<PairedTrajectory> {
    check_dim(model.dim(), noise.dim())?;
    let deterministic = model.trajectory(x0, inputs, horizon)?;
    let mut stochastic = Vec::with_capacity(horizon + 1);
    stochastic.push(x0.to_vec());
    for t in 0..horizon {
        let next = noisy_step(model, noise, &stochastic[t], &inputs[t], t, seed, trial);
        stochastic.push(next);
    }
    let gap = stochastic
        .iter()
        .zip(&deterministic)
        .map(|(a, b)| model.distance(a, b))
        .collect();
    Ok(PairedTrajectory {
        stochastic,
        deterministic,
        gap,
    })
}

fn noisy_step(
    model: &SystemModel,
    noise: &NoiseFamily,
    x: &[f64],
    d: &[f64],
    t: usize,
    seed: u64,
    trial: u64,
) -> Vec<f64> {
    let mut next = model.step_unchecked(x, d, t);
    let w = noise.sample(t, &mut stream(seed, trial, t as u64, Lane::Noise));
    for (v, wi) in next.iter_mut().zip(w) {
        *v += wi;
    }
    model.normalize(&mut next);
    next
}

/// Paired trajectories of `count` trials, as used for plotting.
pub fn sample_trajectories(exp: &Experiment<'_>, count: usize, seed: u64) -> Result<Vec<PairedTrajectory>> {
    let fixed = exp.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|trial| {
            let inputs = exp.inputs_for(&fixed, seed, trial);
            simulate_pair(exp.model, exp.noise, &exp.initial_state(seed, trial), &inputs, exp.horizon, seed, trial)
        })
        .collect()
}

/// Per-trial summary, computed without storing trajectories.
struct TrialRecord {
    /// `X_t - x_t` for `t = 0..=T`.
    diffs: Vec<Vec<f64>>,
    left_safe_set: bool,
    sup_norm: f64,
}

fn run_trials(exp: &Experiment<'_>, safe_set: Option<&SafeSet>, trials: usize, seed: u64) -> Result<Vec<TrialRecord>> {
    if trials == 0 {
        return Err(Error::domain("trials", 0.0, "must be at least 1"));
    }
    if let Some(s) = safe_set {
        check_dim(exp.model.dim(), s.ambient_dim())?;
    }
    let fixed = exp.validate()?;
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let inputs = exp.inputs_for(&fixed, seed, trial);
            let x0 = exp.initial_state(seed, trial);
            let mut det = x0.clone();
            let mut sto = x0;
            let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut rec = TrialRecord {
                diffs: Vec::with_capacity(exp.horizon + 1),
                left_safe_set: false,
                sup_norm: norm(&sto),
            };
            rec.diffs.push(vec![0.0; det.len()]);
            if let Some(s) = safe_set {
                rec.left_safe_set |= !s.contains(&sto)?;
            }
            for (t, d) in inputs.iter().enumerate() {
                let next_sto = noisy_step(exp.model, exp.noise, &sto, d, t, seed, trial);
                det = exp.model.step_unchecked(&det, d, t);
                sto = next_sto;
                rec.diffs.push(exp.model.difference(&sto, &det));
                rec.sup_norm = rec.sup_norm.max(norm(&sto));
                if let Some(s) = safe_set {
                    rec.left_safe_set |= !s.contains(&sto)?;
                }
            }
            Ok(rec)
        })
        .collect()
}

/// Empirical quantiles of `‖X_t - x_t‖` at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapQuantiles {
    pub t: usize,
    pub q50: f64,
    pub q99: f64,
    pub q999: f64,
}

fn gap_norms(records: &[TrialRecord], t: usize) -> Vec<f64> {
    let mut g: Vec<f64> = records
        .iter()
        .map(|r| r.diffs[t].iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    g.sort_by(f64::total_cmp);
    g
}

fn quantiles(records: &[TrialRecord], horizon: usize) -> Vec<GapQuantiles> {
    (0..=horizon)
        .map(|t| {
            let g = gap_norms(records, t);
            GapQuantiles {
                t,
                q50: quantile_sorted(&g, 0.5),
                q99: quantile_sorted(&g, 0.99),
                q999: quantile_sorted(&g, 0.999),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub trials: usize,
    /// Trials with `X_t ∉ C` for some `t ≤ T`.
    pub failures: usize,
    pub empirical_delta: f64,
    pub interval: ConfidenceInterval,
    /// Steps `t = 0..=T`.
    pub gap_quantiles: Vec<GapQuantiles>,
    pub seed: u64,
}

/// Monte Carlo estimate of `P(∃ t ≤ T : X_t ∉ C)` with a Clopper–Pearson
/// interval at `confidence`.
pub fn estimate_failure(
    exp: &Experiment<'_>,
    safe_set: &SafeSet,
    trials: usize,
    seed: u64,
    confidence: f64,
) -> Result<SimulationResult> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::domain("confidence", confidence, "must lie in (0, 1)"));
    }
    let records = run_trials(exp, Some(safe_set), trials, seed)?;
    let failures = records.iter().filter(|r| r.left_safe_set).count();
    Ok(SimulationResult {
        trials,
        failures,
        empirical_delta: failures as f64 / trials as f64,
        interval: clopper_pearson(failures as u64, trials as u64, confidence),
        gap_quantiles: quantiles(&records, exp.horizon),
        seed,
    })
}

/// Empirical check of `P(‖X_t - x_t‖ ≤ r_t ∀ t ≤ T) ≥ 1 - δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapValidation {
    pub trials: usize,
    pub delta: f64,
    /// Trials whose gap exceeds the radius at some step.
    pub exceedances: usize,
    pub exceed_frac: f64,
    /// `3·sqrt(δ(1-δ)/trials)`.
    pub tolerance: f64,
    /// `exceed_frac ≤ δ + tolerance`.
    pub validated: bool,
    /// Fraction of trials exceeding `r_t` at step `t`, `t = 0..=T`.
    pub per_step_exceed_frac: Vec<f64>,
    pub gap_quantiles: Vec<GapQuantiles>,
    pub seed: u64,
}

pub fn validate_gap_profile(
    exp: &Experiment<'_>,
    profile: &GapProfile,
    trials: usize,
    seed: u64,
) -> Result<GapValidation> {
    if profile.horizon() != exp.horizon {
        return Err(Error::Inconsistent(format!(
            "profile horizon {} differs from simulation horizon {}",
            profile.horizon(),
            exp.horizon
        )));
    }
    let records = run_trials(exp, None, trials, seed)?;
    let radii: Vec<f64> = (0..=exp.horizon).map(|t| profile.radius(t)).collect();
    let mut per_step = vec![0usize; exp.horizon + 1];
    let mut exceedances = 0;
    for r in &records {
        let mut any = false;
        for (t, d) in r.diffs.iter().enumerate() {
            if d.iter().map(|v| v * v).sum::<f64>().sqrt() > radii[t] {
                per_step[t] += 1;
                any = true;
            }
        }
        exceedances += any as usize;
    }
    let delta = profile.delta();
    let n = trials as f64;
    let exceed_frac = exceedances as f64 / n;
    let tolerance = 3.0 * (delta * (1.0 - delta) / n).sqrt();
    Ok(GapValidation {
        trials,
        delta,
        exceedances,
        exceed_frac,
        tolerance,
        validated: exceed_frac <= delta + tolerance,
        per_step_exceed_frac: per_step.into_iter().map(|c| c as f64 / n).collect(),
        gap_quantiles: quantiles(&records, exp.horizon),
        seed,
    })
}

/// One point of a failure-probability sweep over the safe radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub radius: f64,
    pub failures: usize,
    pub empirical_delta: f64,
    pub interval: ConfidenceInterval,
}

/// Failure frequency for `C = {‖x‖ ≤ R}` at every `R` in `radii`, from one
/// shared set of trials; the curve is therefore exactly nonincreasing in `R`.
pub fn failure_sweep(
    exp: &Experiment<'_>,
    radii: &[f64],
    trials: usize,
    seed: u64,
    confidence: f64,
) -> Result<Vec<SweepPoint>> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::domain("confidence", confidence, "must lie in (0, 1)"));
    }
    let records = run_trials(exp, None, trials, seed)?;
    let mut sups: Vec<f64> = records.iter().map(|r| r.sup_norm).collect();
    sups.sort_by(f64::total_cmp);
    radii
        .iter()
        .map(|&radius| {
            if !(radius >= 0.0) {
                return Err(Error::domain("R", radius, "must be nonnegative"));
            }
            // the boundary is safe: failures are sup > R
            let failures = sups.len() - sups.partition_point(|s| *s <= radius);
            Ok(SweepPoint {
                radius,
                failures,
                empirical_delta: failures as f64 / trials as f64,
                interval: clopper_pearson(failures as u64, trials as u64, confidence),
            })
        })
        .collect()
}

/// Per-step sample mean and variance of each coordinate of `X_t - x_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapMoments {
    pub mean: Vec<Vec<f64>>,
    pub variance: Vec<Vec<f64>>,
}

pub fn gap_moments(exp: &Experiment<'_>, trials: usize, seed: u64) -> Result<GapMoments> {
    if trials < 2 {
        return Err(Error::domain("trials", trials as f64, "must be at least 2"));
    }
    let records = run_trials(exp, None, trials, seed)?;
    let n = exp.model.dim();
    let mut mean = vec![vec![0.0; n]; exp.horizon + 1];
    let mut variance = vec![vec![0.0; n]; exp.horizon + 1];
    for t in 0..=exp.horizon {
        for k in 0..n {
            let vals = records.iter().map(|r| r.diffs[t][k]);
            let m = vals.clone().sum::<f64>() / trials as f64;
            let v = vals.map(|x| (x - m) * (x - m)).sum::<f64>() / (trials - 1) as f64;
            mean[t][k] = m;
            variance[t][k] = v;
        }
    }
    Ok(GapMoments { mean, variance })
}
