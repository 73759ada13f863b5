//! Agent-based opinion dynamics on scale-free networks, calibrated period by
//! period against an observed concern series with population-based optimizers.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: Barabási-Albert interaction network.
//! * [`survey`]: survey ingestion and opinion initialization.
//! * [`dynamics`]: FJ, DW and ATBCR fusion rules and period-structured runs.
//! * [`fitness`]: Monte Carlo averaged MAPE objective.
//! * [`evolve`]: DE, SHADE, L-SHADE and PSO over repaired, bounded genomes.
//! * [`calibrate`]: problem assembly, genome decoding and result persistence.

pub mod calibrate;
pub mod dynamics;
pub mod error;
pub mod evolve;
pub mod fitness;
pub mod graph;
pub mod rng;
pub mod survey;

pub use calibrate::{
    decode, encode, run_calibration, run_calibration_observed, CalibrationProblem, CalibrationResult,
    ProblemOptions,
};
pub use dynamics::{
    concern_proportion, simulate_horizon, simulate_period, ConcernSeries, FjUpdate, HorizonRun, Model,
    OpinionProfile, ParameterSchedule, PeriodParams,
};
pub use error::{Error, Result};
pub use evolve::{Algorithm, Bounds, ConvergenceLog, Generation, Objective, OptimizerConfig, Outcome};
pub use fitness::{evaluate, mape, simulate_replicates, FitnessValue, MapeNormalization};
pub use graph::SocialNetwork;
pub use survey::{ConcernThreshold, MentionRank, SurveyDataset, TargetSeries};
