use erosion_core::benchmarks::*;
use erosion_core::dynamics::{LipschitzSpec, SystemModel, UnicycleConfig};
use erosion_core::gap_bound::{gap_profile, ConcentrationConstants, GapMethod, ScheduleSpec, DEFAULT_EPSILON};
use erosion_core::montecarlo::{estimate_failure, Experiment, InputSampler, NoiseFamily};
use erosion_core::verifier::{
    estimate_tube_lipschitz, verify_reach_tube, ErosionSchedule, TubeOptions, Verdict, VerificationProblem,
};

#[test]
fn tube_verifies_and_simulation_avoids_obstacles() {
    let cfg = UnicycleConfig::default();
    let horizon = 100;
    let model = SystemModel::unicycle(cfg).unwrap();
    let x0 = unicycle_initial_set();
    let l = estimate_tube_lipschitz(&model, &x0, None, horizon, UNICYCLE_REGION_MARGIN, &unicycle_estimator()).unwrap();
    let noise = NoiseFamily::gaussian(cfg.noise_variance, 3).unwrap().scaled(cfg.noise_scale()).unwrap();
    let schedule = ScheduleSpec::new(l.clone(), noise.variance_schedule(horizon)).unwrap();
    let constants = ConcentrationConstants::general(DEFAULT_EPSILON, 3).unwrap();
    let gap = gap_profile(&schedule, &constants, UNICYCLE_DELTA, GapMethod::Sharp).unwrap();
    assert!(gap.max_radius() < UNICYCLE_REGION_MARGIN, "r_m = {}", gap.max_radius());

    let model = model.with_lipschitz_x(LipschitzSpec::PerStep(l)).unwrap();
    let p = VerificationProblem::new(model.clone(), unicycle_safe_set(), x0.clone(), gap.clone())
        .unwrap()
        .with_erosion(ErosionSchedule::Max);
    let rep = verify_reach_tube(&p, &TubeOptions::default()).unwrap();
    let worst = rep.per_step_margin.iter().cloned().fold(f64::INFINITY, f64::min);
    eprintln!("r_m = {:.4}, rho_T = {:.4}, worst margin = {worst:.4}", gap.max_radius(), rep.tube_radii.as_ref().unwrap()[horizon]);
    assert_eq!(rep.verdict, Verdict::Verified);

    let exp = Experiment {
        model: &model,
        noise: &noise,
        initial_set: &x0,
        inputs: &InputSampler::Uniform,
        horizon,
    };
    let sim = estimate_failure(&exp, &unicycle_safe_set(), 2000, 1, 0.95).unwrap();
    assert_eq!(sim.failures, 0);
}
