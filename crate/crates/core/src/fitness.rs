//! Monte Carlo averaged MAPE between simulated and observed concern.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{decode, CalibrationProblem, NetworkPolicy};
use crate::dynamics::{simulate_horizon, HorizonRun, ParameterSchedule};
use crate::error::{Error, Result};
use crate::graph::{generate_ba, SocialNetwork};
use crate::rng::{self, splitmix64, stream_seed};
use crate::survey::{initialize_opinions, TargetSeries};

/// Divisor used when some targets are missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapeNormalization {
    /// Mean over periods that have a target.
    #[default]
    PresentCount,
    /// Sum over present periods divided by the full period count.
    AllPeriods,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessValue {
    pub mean_mape: f64,
    pub per_replicate: Vec<f64>,
    /// Mean over replicates of `100 |c - h| / h`; `None` where the target is missing.
    pub per_period_error: Vec<Option<f64>>,
    /// Mean simulated concern per period over replicates.
    pub mean_concern: Vec<f64>,
}

impl FitnessValue {
    /// Standard error of `mean_mape` over replicates.
    pub fn standard_error(&self) -> f64 {
        let n = self.per_replicate.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean_mape;
        let var = self.per_replicate.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

/// MAPE in percent over periods with a target, divided by their count.
pub fn mape(simulated: &[f64], targets: &TargetSeries) -> Result<f64> {
    mape_with(simulated, targets, MapeNormalization::PresentCount)
}

pub fn mape_with(simulated: &[f64], targets: &TargetSeries, normalization: MapeNormalization) -> Result<f64> {
    if simulated.len() != targets.len() {
        return Err(Error::InvalidParameter(format!(
            "simulated series has {} periods, targets have {}",
            simulated.len(),
            targets.len()
        )));
    }
    let mut sum = 0.0;
    let mut present = 0usize;
    for (period, (c, h)) in simulated.iter().zip(targets.values()).enumerate() {
        let Some(h) = h else { continue };
        if h == 0.0 {
            return Err(Error::UndefinedDenominator { period });
        }
        sum += (c - h).abs() / h;
        present += 1;
    }
    if present == 0 {
        return Err(Error::InvalidParameter("no observed targets".into()));
    }
    let divisor = match normalization {
        MapeNormalization::PresentCount => present,
        MapeNormalization::AllPeriods => targets.len(),
    };
    Ok(100.0 * sum / divisor as f64)
}

const NETWORK_SALT: u64 = 0x6E65_7477_6F72_6B00;

/// Seed of replicate `replicate` for the evaluation tagged `tag`.
pub fn replicate_seed(master_seed: u64, tag: u64, replicate: u64) -> u64 {
    stream_seed(master_seed, tag, replicate)
}

fn replicate_network_seed(master_seed: u64, tag: u64, replicate: u64) -> u64 {
    stream_seed(splitmix64(master_seed) ^ NETWORK_SALT, tag, replicate)
}

/// Runs `replicates` independent horizons of `schedule` on `problem`.
/// Replicate `r` draws both its initial opinions and its interactions from
/// [`replicate_seed`]`(master_seed, tag, r)`; results come back in replicate
/// order regardless of scheduling.
pub fn simulate_replicates(
    schedule: &ParameterSchedule,
    problem: &CalibrationProblem,
    replicates: usize,
    master_seed: u64,
    tag: u64,
    snapshot: bool,
) -> Result<Vec<HorizonRun>> {
    let options = &problem.options;
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let regenerated;
            let network: &SocialNetwork = match options.network {
                NetworkPolicy::Shared => &problem.network,
                NetworkPolicy::PerReplicate { edges_per_node } => {
                    regenerated = generate_ba(
                        problem.survey.len(),
                        edges_per_node,
                        replicate_network_seed(master_seed, tag, r),
                    )?;
                    &regenerated
                }
            };
            let mut rng = rng::stream(replicate_seed(master_seed, tag, r));
            let initial = initialize_opinions(&problem.survey, problem.threshold, &mut rng);
            Ok(simulate_horizon(
                schedule,
                &initial,
                network,
                problem.threshold.value(),
                options.fj_update,
                &mut rng,
                snapshot,
            ))
        })
        .collect()
}

/// Decodes `genome`, runs `replicates` independent horizons through
/// [`simulate_replicates`] and averages their MAPE.
pub fn evaluate(
    genome: &[f64],
    problem: &CalibrationProblem,
    replicates: usize,
    master_seed: u64,
    tag: u64,
) -> Result<FitnessValue> {
    if replicates == 0 {
        return Err(Error::InvalidParameter("at least one replicate is required".into()));
    }
    let schedule = decode(genome, problem.model, problem.targets.len(), problem.steps_per_period)?;
    let runs = simulate_replicates(&schedule, problem, replicates, master_seed, tag, false)?;

    let periods = problem.targets.len();
    let mut per_replicate = Vec::with_capacity(replicates);
    let mut concern_sum = vec![0.0; periods];
    let mut error_sum = vec![0.0; periods];
    for run in runs {
        let concern = run.concern.values();
        per_replicate.push(mape_with(concern, &problem.targets, problem.options.mape)?);
        for (p, c) in concern.iter().enumerate() {
            concern_sum[p] += c;
            if let Some(h) = problem.targets.get(p) {
                error_sum[p] += 100.0 * (c - h).abs() / h;
            }
        }
    }
    let count = replicates as f64;
    Ok(FitnessValue {
        mean_mape: per_replicate.iter().sum::<f64>() / count,
        per_replicate,
        per_period_error: (0..periods)
            .map(|p| problem.targets.get(p).map(|_| error_sum[p] / count))
            .collect(),
        mean_concern: concern_sum.into_iter().map(|s| s / count).collect(),
    })
}
