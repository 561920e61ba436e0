//! Ball-shaped reach tubes propagated with Lipschitz constants.
//!
//! The center follows the nominal input; the radius absorbs both the spread
//! of `X₀` and every admissible input deviation:
//! `ρ_{t+1} = L_t ρ_t + L_d · max_{d ∈ D} ‖d - d*‖`.

use super::{Failure, InitialSet, Method, Verdict, VerificationProblem, VerificationReport};
use crate::dynamics::{LipschitzEstimator, SystemModel};
use crate::error::{Error, Result};
use crate::geometry::AxisBox;

#[derive(Debug, Clone, PartialEq)]
pub struct TubeOptions {
    /// Input driving the tube center. Defaults to the center of the smallest
    /// ball enclosing `D`, which minimizes the bloating term.
    pub nominal_input: Option<Vec<f64>>,
    /// When the tube check fails, simulate trajectories from probes of `X₀`
    /// under constant vertex inputs and report one that leaves `C`.
    pub search_witness: bool,
}

impl Default for TubeOptions {
    fn default() -> Self {
        Self {
            nominal_input: None,
            search_witness: true,
        }
    }
}

fn nominal_input(model: &SystemModel, requested: Option<&Vec<f64>>) -> Result<Vec<f64>> {
    let d = requested.cloned().unwrap_or_else(|| model.input_set().nominal_center());
    if !model.input_set().contains(&d) {
        return Err(Error::InputOutsideSet { input: d, step: 0 });
    }
    Ok(d)
}

fn lipschitz_d(model: &SystemModel) -> Result<f64> {
    match model.lipschitz_d() {
        Some(l) => Ok(l),
        None if model.input_dim() == 0 => Ok(0.0),
        None => Err(Error::LipschitzUnavailable(format!("{} (input gain)", model.name()))),
    }
}

/// Estimates `L_t` step by step along the tube: the region at step `t` is the
/// box of half-width `ρ_t + margin` around the tube center, and the estimate
/// feeds the next radius. `margin` should cover the stochastic gap so the
/// constants also hold around noisy states.
pub fn estimate_tube_lipschitz(
    model: &SystemModel,
    initial_set: &InitialSet,
    nominal: Option<&Vec<f64>>,
    horizon: usize,
    margin: f64,
    estimator: &LipschitzEstimator,
) -> Result<Vec<f64>> {
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::domain("region margin", margin, "must be positive and finite"));
    }
    initial_set.validate()?;
    let d_star = nominal_input(model, nominal)?;
    let bloat = lipschitz_d(model)? * model.input_set().radius_about(&d_star);
    let mut center = initial_set.center();
    let mut rho = initial_set.radius();
    let mut out = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let region = AxisBox::around(&center, rho + margin)?;
        let l = model.estimate_lipschitz(&region, t, estimator)?;
        out.push(l);
        center = model.step(&center, &d_star, t)?;
        rho = l * rho + bloat;
    }
    Ok(out)
}

/// Verdict from the ball tube: verified iff
/// `clearance(c_t) ≥ r_t + ρ_t` for every `t ≤ T`.
pub fn verify_reach_tube(p: &VerificationProblem, opts: &TubeOptions) -> Result<VerificationReport> {
    let model = p.model();
    let horizon = p.horizon();
    let lipschitz = model.lipschitz_schedule(horizon)?;
    let d_star = nominal_input(model, opts.nominal_input.as_ref())?;
    let bloat = lipschitz_d(model)? * model.input_set().radius_about(&d_star);

    let mut center = p.initial_set().center();
    let mut rho = p.initial_set().radius();
    let mut margins = Vec::with_capacity(horizon + 1);
    let mut radii = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let clearance = p.safe_set().min_obstacle_clearance(&center)?;
        margins.push(clearance - rho - p.erosion_radius(t));
        radii.push(rho);
        if t < horizon {
            center = model.step(&center, &d_star, t)?;
            rho = lipschitz[t] * rho + bloat;
        }
    }

    let first_bad = margins.iter().position(|m| !(*m >= 0.0));
    let mut report = VerificationReport {
        verdict: Verdict::Verified,
        method: Method::ReachTube,
        per_step_margin: margins,
        witness: None,
        failure: None,
        tube_radii: Some(radii),
        provenance: p.provenance(),
    };
    if let Some(step) = first_bad {
        report.verdict = Verdict::Unverified;
        report.failure = Some(Failure::Margin {
            step,
            margin: report.per_step_margin[step],
        });
        if opts.search_witness {
            if let Some(w) = find_exit(p, &d_star)? {
                report.verdict = Verdict::Falsified;
                report.witness = Some(w);
            }
        }
    }
    Ok(report)
}

/// A deterministic trajectory from a probe of `X₀` under a constant input
/// (nominal or a vertex of `D`) that leaves `C` itself.
fn find_exit(p: &VerificationProblem, d_star: &[f64]) -> Result<Option<Vec<Vec<f64>>>> {
    let model = p.model();
    let mut inputs = vec![d_star.to_vec()];
    inputs.extend(model.input_set().vertices());
    for x0 in p.initial_set().probes() {
        for d in &inputs {
            let mut traj = vec![x0.clone()];
            for t in 0..p.horizon() {
                let next = model.step_unchecked(&traj[t], d, t);
                traj.push(next);
                if p.safe_set().min_obstacle_clearance(&traj[t + 1])? < 0.0 {
                    return Ok(Some(traj));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{InputSet, LinearMatrix, LipschitzSpec, UnicycleConfig};
    use crate::gap_bound::{gap_profile, ConcentrationConstants, GapMethod, GapProfile, ScheduleSpec};
    use crate::geometry::{ConvexObstacle, SafeSet};
    use crate::verifier::ErosionSchedule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn interval(radius: f64) -> SafeSet {
        SafeSet::new(
            vec![
                ConvexObstacle::polytope(vec![vec![-1.0]], vec![-radius]).unwrap(),
                ConvexObstacle::polytope(vec![vec![1.0]], vec![-radius]).unwrap(),
            ],
            1,
        )
        .unwrap()
    }

    fn scalar_gap(horizon: usize, delta: f64) -> GapProfile {
        let s = ScheduleSpec::constant(horizon, 0.99, 1e-3).unwrap();
        gap_profile(&s, &ConcentrationConstants::scalar(), delta, GapMethod::Sharp).unwrap()
    }

    fn scalar_problem(radius: f64, delta: f64) -> VerificationProblem {
        VerificationProblem::new(
            SystemModel::linear_scalar(0.99),
            interval(radius),
            InitialSet::point(vec![0.0]),
            scalar_gap(100, delta),
        )
        .unwrap()
    }

    #[test]
    fn no_obstacles_verifies() {
        let p = VerificationProblem::new(
            SystemModel::linear_scalar(1.2),
            SafeSet::new(vec![], 1).unwrap(),
            InitialSet::point(vec![3.0]),
            scalar_gap(50, 0.01),
        )
        .unwrap();
        let r = verify_reach_tube(&p, &TubeOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Verified);
        assert!(r.per_step_margin.iter().all(|m| *m == f64::INFINITY));
    }

    #[test]
    fn scalar_interval_verdict_matches_final_radius() {
        let r_t = scalar_gap(100, 0.1).radius(100);
        for (radius, expect) in [
            (r_t * (1.0 + 1e-9), Verdict::Verified),
            (r_t * (1.0 - 1e-9), Verdict::Unverified),
            (0.01, Verdict::Unverified),
        ] {
            let rep = verify_reach_tube(&scalar_problem(radius, 0.1), &TubeOptions::default()).unwrap();
            assert_eq!(rep.verdict, expect, "R = {radius}");
            assert_eq!(rep.per_step_margin.len(), 101);
            assert_eq!(rep.verdict == Verdict::Verified, rep.per_step_margin.iter().all(|m| *m >= 0.0));
        }
    }

    #[test]
    fn leaving_the_safe_set_is_falsified() {
        // x_{t+1} = 1.1 x_t from x_0 = 1 exits [-2, 2] deterministically
        let p = VerificationProblem::new(
            SystemModel::linear_scalar(1.1),
            interval(2.0),
            InitialSet::point(vec![1.0]),
            gap_profile(
                &ScheduleSpec::constant(20, 1.1, 0.0).unwrap(),
                &ConcentrationConstants::scalar(),
                0.1,
                GapMethod::Sharp,
            )
            .unwrap(),
        )
        .unwrap();
        let rep = verify_reach_tube(&p, &TubeOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Falsified);
        let w = rep.witness.unwrap();
        assert!(w.iter().any(|x| !p.safe_set().contains(x).unwrap()));
        assert!(w.iter().any(|x| !p.safe_set().in_eroded_set(x, 0.0).unwrap()));
    }

    #[test]
    fn smaller_erosion_keeps_verdict() {
        let p = scalar_problem(1.0, 0.1);
        let fine = verify_reach_tube(&p, &TubeOptions::default()).unwrap();
        let coarse = verify_reach_tube(&p.clone().with_erosion(ErosionSchedule::Max), &TubeOptions::default()).unwrap();
        assert_eq!(coarse.verdict, Verdict::Verified);
        assert_eq!(fine.verdict, Verdict::Verified);
        for (a, b) in fine.per_step_margin.iter().zip(&coarse.per_step_margin) {
            assert!(a >= b);
        }
    }

    #[test]
    fn tube_contains_sampled_trajectories() {
        // 2-D linear system with a bounded input
        let lin = LinearMatrix::from_rows(
            &[vec![0.9, 0.2], vec![-0.1, 0.95]],
            Some(&[vec![1.0], vec![0.5]]),
        )
        .unwrap();
        let input = InputSet::AxisBox(AxisBox::new(vec![-0.05], vec![0.05]).unwrap());
        let model = SystemModel::linear_matrix(lin, input.clone()).unwrap();
        let l = model.lipschitz_schedule(1).unwrap()[0];
        let horizon = 30;
        let gap = gap_profile(
            &ScheduleSpec::constant(horizon, l, 1e-4).unwrap(),
            &ConcentrationConstants::general(1.0 / 16.0, 2).unwrap(),
            0.05,
            GapMethod::Sharp,
        )
        .unwrap();
        let safe = SafeSet::new(vec![ConvexObstacle::ball(vec![3.0, 0.0], 0.5).unwrap()], 2).unwrap();
        let x0 = InitialSet::AxisBox {
            lower: vec![0.9, 0.9],
            upper: vec![1.1, 1.1],
        };
        let p = VerificationProblem::new(model.clone(), safe.clone(), x0.clone(), gap.clone()).unwrap();
        let rep = verify_reach_tube(&p, &TubeOptions::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Verified);
        let radii = rep.tube_radii.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let x = x0.sample(&mut rng);
            let inputs: Vec<Vec<f64>> = (0..horizon).map(|_| input.sample(&mut rng)).collect();
            let traj = model.trajectory(&x, &inputs, horizon).unwrap();
            let mut c = x0.center();
            for (t, xt) in traj.iter().enumerate() {
                assert!(model.distance(xt, &c) <= radii[t] + 1e-12);
                assert!(safe.in_eroded_set(xt, gap.radius(t)).unwrap());
                if t < horizon {
                    c = model.step(&c, &[0.0], t).unwrap();
                }
            }
        }
    }

    #[test]
    fn unicycle_tube_lipschitz_is_near_one() {
        let model = SystemModel::unicycle(UnicycleConfig::default()).unwrap();
        let x0 = InitialSet::AxisBox {
            lower: vec![4.9, 4.9, -std::f64::consts::FRAC_PI_3 - 0.1],
            upper: vec![5.1, 5.1, -std::f64::consts::FRAC_PI_3 + 0.1],
        };
        let est = LipschitzEstimator {
            samples: 400,
            inflation: 1.001,
            seed: 7,
        };
        let l = estimate_tube_lipschitz(&model, &x0, None, 20, 1.0, &est).unwrap();
        assert_eq!(l.len(), 20);
        assert!(l.iter().all(|v| *v > 1.0 && *v < 1.01), "{l:?}");
        let with_l = model.with_lipschitz_x(LipschitzSpec::PerStep(l)).unwrap();
        assert_eq!(with_l.lipschitz_schedule(20).unwrap().len(), 20);
    }

    #[test]
    fn missing_lipschitz_is_an_error() {
        let model = SystemModel::unicycle(UnicycleConfig::default()).unwrap();
        let p = VerificationProblem::new(
            model,
            SafeSet::new(vec![], 3).unwrap(),
            InitialSet::point(vec![1.0, 1.0, 0.0]),
            scalar_gap(10, 0.1),
        )
        .unwrap();
        assert!(matches!(
            verify_reach_tube(&p, &TubeOptions::default()),
            Err(Error::LipschitzUnavailable(_))
        ));
    }
}
