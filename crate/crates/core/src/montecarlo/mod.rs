//! Monte Carlo simulation of stochastic trajectories.
//!
//! Every random draw is addressed by `(seed, trial, step, lane)`, so results
//! are bitwise reproducible for a given seed regardless of how trials are
//! scheduled across threads.

mod noise;
pub mod rng;
mod simulate;
mod stats;

pub use noise::{BoundedSampler, NoiseFamily, NoiseKind, ScaleSchedule};
pub use simulate::{
    estimate_failure, failure_sweep, gap_moments, sample_trajectories, simulate_pair, validate_gap_profile,
    Experiment, GapMoments, GapQuantiles, GapValidation, InputSampler, PairedTrajectory, SimulationResult,
    SweepPoint,
};
pub use stats::{clopper_pearson, quantile_sorted, ConfidenceInterval, IntervalMethod};
