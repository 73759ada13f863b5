//! Fixtures shared by the benchmarks, sized like the full-scale study:
//! 3,961 agents on a BA(m = 3) network and 13,500 interactions per period.

use odcal::graph::generate_ba;
use odcal::survey::synth_dataset;
use odcal::{
    CalibrationProblem, ConcernThreshold, Model, OpinionProfile, ProblemOptions, SocialNetwork, TargetSeries,
};
use rand::Rng;

pub const AGENTS: usize = 3_961;
pub const STEPS_PER_PERIOD: usize = 13_500;

pub fn network() -> SocialNetwork {
    generate_ba(AGENTS, 3, 1).expect("valid BA parameters")
}

pub fn uniform_profile(n: usize, seed: u64) -> OpinionProfile {
    let mut rng = odcal::rng::stream(seed);
    OpinionProfile::new((0..n).map(|_| rng.random()).collect()).expect("values in [0, 1)")
}

/// Full-scale problem with 15 monthly targets, evaluated with `replicates`
/// Monte Carlo runs.
pub fn problem(model: Model, replicates: usize) -> CalibrationProblem {
    let survey = synth_dataset(AGENTS, [0.1, 0.08, 0.06], 2, "2023-01").expect("valid proportions");
    let targets = TargetSeries::new(
        (0..15).map(|p| (format!("p{p:02}"), Some(0.24 + 0.03 * (p as f64 * 0.9).sin()))).collect(),
    )
    .expect("targets in (0, 1]");
    CalibrationProblem::new(
        model,
        network(),
        survey,
        ConcernThreshold::new(0.9).expect("valid threshold"),
        targets,
        STEPS_PER_PERIOD,
        replicates,
        ProblemOptions::default(),
    )
    .expect("consistent problem")
}
