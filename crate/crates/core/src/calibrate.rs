//! Calibration tasks: one model, one survey, one target series, one optimizer.
//!
//! Genomes are period-major: the parameters of period `p` occupy dimensions
//! `[k p, k p + k)` where `k` is the model's parameter count, in the order of
//! [`Model::param_names`].

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{FjUpdate, Model, ParameterSchedule, PeriodParams};
use crate::error::{Error, Result};
use crate::evolve::{self, Bounds, ConvergenceLog, Objective, OptimizerConfig, PairConstraint};
use crate::fitness::{self, FitnessValue, MapeNormalization};
use crate::graph::SocialNetwork;
use crate::rng::stream_seed;
use crate::survey::{ConcernThreshold, SurveyDataset, TargetSeries};

/// Smallest convergence speed a genome may carry; the admissible range is
/// open at zero.
pub const MIN_CONVERGENCE_SPEED: f64 = 1e-6;

/// Evaluation tag reserved for the post-search re-evaluation.
pub const REEVALUATION_TAG: u64 = u64::MAX;
const OPTIMIZER_TAG: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkPolicy {
    /// One network for every replicate of every evaluation.
    #[default]
    Shared,
    /// A fresh BA network per replicate, for sensitivity checks.
    PerReplicate { edges_per_node: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProblemOptions {
    pub mape: MapeNormalization,
    pub fj_update: FjUpdate,
    pub network: NetworkPolicy,
}

/// Per-period admissible ranges for `model`, repeated over `periods`.
pub fn model_bounds(model: Model, periods: usize) -> Result<Bounds> {
    let (lo, hi): (&[f64], &[f64]) = match model {
        Model::Fj => (&[0.1], &[1.0]),
        Model::Dw => (&[MIN_CONVERGENCE_SPEED, 0.0], &[0.5, 0.5]),
        Model::Atbcr => (&[MIN_CONVERGENCE_SPEED, 0.0, 0.5], &[0.5, 0.5, 1.0]),
    };
    let mut bounds = Bounds::new(lo.repeat(periods), hi.repeat(periods))?;
    if model == Model::Atbcr {
        for p in 0..periods {
            bounds = bounds.with_pair(PairConstraint {
                lower_index: 3 * p + 1,
                upper_index: 3 * p + 2,
                min_gap: 0.1,
                max_gap: 0.9,
            })?;
        }
    }
    Ok(bounds)
}

pub fn decode(
    genome: &[f64],
    model: Model,
    periods: usize,
    steps_per_period: usize,
) -> Result<ParameterSchedule> {
    let k = model.params_per_period();
    if genome.len() != periods * k {
        return Err(Error::InvalidGenome { expected: periods * k, actual: genome.len() });
    }
    let params = genome
        .chunks_exact(k)
        .map(|chunk| PeriodParams::from_values(model, chunk))
        .collect::<Result<Vec<_>>>()?;
    ParameterSchedule::new(params, steps_per_period)
}

pub fn encode(schedule: &ParameterSchedule) -> Vec<f64> {
    schedule.periods().iter().flat_map(PeriodParams::values).collect()
}

#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    pub model: Model,
    pub network: SocialNetwork,
    pub survey: SurveyDataset,
    pub threshold: ConcernThreshold,
    pub targets: TargetSeries,
    pub steps_per_period: usize,
    pub replicates: usize,
    pub bounds: Bounds,
    pub options: ProblemOptions,
}

impl CalibrationProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: Model,
        network: SocialNetwork,
        survey: SurveyDataset,
        threshold: ConcernThreshold,
        targets: TargetSeries,
        steps_per_period: usize,
        replicates: usize,
        options: ProblemOptions,
    ) -> Result<Self> {
        if network.node_count() != survey.len() {
            return Err(Error::Config(format!(
                "network has {} nodes but the survey has {} respondents",
                network.node_count(),
                survey.len()
            )));
        }
        if steps_per_period == 0 {
            return Err(Error::Config("steps per period must be positive".into()));
        }
        if replicates == 0 {
            return Err(Error::Config("at least one replicate is required".into()));
        }
        if let FjUpdate::Synchronous { steps_per_sweep: 0 } = options.fj_update {
            return Err(Error::Config("steps per sweep must be positive".into()));
        }
        let bounds = model_bounds(model, targets.len())?;
        Ok(Self { model, network, survey, threshold, targets, steps_per_period, replicates, bounds, options })
    }

    pub fn periods(&self) -> usize {
        self.targets.len()
    }

    pub fn dimension(&self) -> usize {
        self.periods() * self.model.params_per_period()
    }

    pub fn decode(&self, genome: &[f64]) -> Result<ParameterSchedule> {
        decode(genome, self.model, self.periods(), self.steps_per_period)
    }

    /// [`fitness::evaluate`] with the problem's replicate count.
    pub fn evaluate(&self, genome: &[f64], master_seed: u64, tag: u64) -> Result<FitnessValue> {
        fitness::evaluate(genome, self, self.replicates, master_seed, tag)
    }

    /// Objective whose `index`-th call is evaluated under tag `index`.
    pub fn objective(&self, master_seed: u64) -> CalibrationObjective<'_> {
        CalibrationObjective { problem: self, master_seed, observer: None }
    }
}

/// Callback shown every genome before it is evaluated.
pub type GenomeObserver<'a> = &'a (dyn Fn(&[f64]) + Sync);

pub struct CalibrationObjective<'a> {
    problem: &'a CalibrationProblem,
    master_seed: u64,
    observer: Option<GenomeObserver<'a>>,
}

impl Objective for CalibrationObjective<'_> {
    fn evaluate(&self, genome: &[f64], index: u64) -> f64 {
        if let Some(observe) = self.observer {
            observe(genome);
        }
        self.problem
            .evaluate(genome, self.master_seed, index)
            .expect("optimizer genomes match the problem dimension")
            .mean_mape
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub model: Model,
    pub optimizer: OptimizerConfig,
    pub master_seed: u64,
    pub best_genome: Vec<f64>,
    pub schedule: ParameterSchedule,
    /// Fitness of the best genome as seen during the search.
    pub search_fitness: f64,
    /// Fitness of the best genome on fresh replicate streams.
    pub reevaluated: FitnessValue,
    pub log: ConvergenceLog,
}

impl CalibrationResult {
    /// Mean simulated concern of the best genome over the fresh replicates.
    pub fn simulated_concern(&self) -> &[f64] {
        &self.reevaluated.mean_concern
    }

    /// Whether the re-evaluated fitness lies within `k` standard errors of
    /// the in-search fitness.
    pub fn reevaluation_within(&self, k: f64) -> bool {
        (self.reevaluated.mean_mape - self.search_fitness).abs() <= k * self.reevaluated.standard_error()
    }

    /// Writes `best_params.csv`, `concern.csv` and `convergence.csv`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>, targets: &TargetSeries) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        write_params_csv(dir.join("best_params.csv"), &self.schedule, targets.labels())?;
        write_concern_csv(dir.join("concern.csv"), self.simulated_concern(), targets)?;
        self.log.write_csv(dir.join("convergence.csv"))?;
        Ok(())
    }
}

pub fn run_calibration(
    problem: &CalibrationProblem,
    config: &OptimizerConfig,
    master_seed: u64,
) -> Result<CalibrationResult> {
    calibrate_with(problem, config, master_seed, None)
}

/// As [`run_calibration`], calling `observer` with every genome before it is
/// evaluated during the search.
pub fn run_calibration_observed(
    problem: &CalibrationProblem,
    config: &OptimizerConfig,
    master_seed: u64,
    observer: &(dyn Fn(&[f64]) + Sync),
) -> Result<CalibrationResult> {
    calibrate_with(problem, config, master_seed, Some(observer))
}

fn calibrate_with(
    problem: &CalibrationProblem,
    config: &OptimizerConfig,
    master_seed: u64,
    observer: Option<GenomeObserver<'_>>,
) -> Result<CalibrationResult> {
    let objective = CalibrationObjective { problem, master_seed, observer };
    let search_seed = stream_seed(master_seed, OPTIMIZER_TAG, 0);
    let outcome = evolve::run(&objective, &problem.bounds, config, search_seed)?;
    let reevaluated = problem.evaluate(&outcome.best, master_seed, REEVALUATION_TAG)?;
    Ok(CalibrationResult {
        model: problem.model,
        optimizer: config.clone(),
        master_seed,
        schedule: problem.decode(&outcome.best)?,
        best_genome: outcome.best,
        search_fitness: outcome.best_fitness,
        reevaluated,
        log: outcome.log,
    })
}

/// Writes `period,param,value` rows, one per period and parameter.
pub fn write_params_csv<'a>(
    path: impl AsRef<Path>,
    schedule: &ParameterSchedule,
    labels: impl IntoIterator<Item = &'a str>,
) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["period", "param", "value"])?;
    let names = schedule.model().param_names();
    for (label, params) in labels.into_iter().zip(schedule.periods()) {
        for (name, value) in names.iter().zip(params.values()) {
            out.write_record([label, name, &value.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a `period,param,value` file back into a schedule. Periods keep
/// their order of first appearance; every period must name each parameter
/// of `model` exactly once.
pub fn read_params_csv(
    path: impl AsRef<Path>,
    model: Model,
    steps_per_period: usize,
) -> Result<(Vec<String>, ParameterSchedule)> {
    let path = path.as_ref();
    let file = fs::File::open(path)
        .map_err(|e| Error::Input { path: path.to_path_buf(), message: e.to_string() })?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers()?;
    if header.iter().map(str::trim).ne(["period", "param", "value"]) {
        return Err(Error::parse(path, 1, "expected header \"period,param,value\""));
    }

    let names = model.param_names();
    let mut labels: Vec<String> = Vec::new();
    let mut values: Vec<Vec<Option<f64>>> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let (label, name, raw) = (record[0].trim(), record[1].trim(), record[2].trim());
        let slot = names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::parse(path, line, format!("{model} has no parameter {name:?}")))?;
        let value: f64 =
            raw.parse().map_err(|_| Error::parse(path, line, format!("not a number: {raw:?}")))?;
        let period = *index.entry(label.to_owned()).or_insert_with(|| {
            labels.push(label.to_owned());
            values.push(vec![None; names.len()]);
            labels.len() - 1
        });
        if values[period][slot].replace(value).is_some() {
            return Err(Error::parse(path, line, format!("{name} repeated for period {label}")));
        }
    }
    let params = values
        .iter()
        .zip(&labels)
        .map(|(vals, label)| {
            let vals: Option<Vec<f64>> = vals.iter().copied().collect();
            let vals = vals.ok_or_else(|| Error::Input {
                path: path.to_path_buf(),
                message: format!("period {label} is missing parameters of {model}"),
            })?;
            PeriodParams::from_values(model, &vals)
        })
        .collect::<Result<Vec<_>>>()?;
    if params.is_empty() {
        return Err(Error::Input { path: path.to_path_buf(), message: "no parameters".into() });
    }
    Ok((labels, ParameterSchedule::new(params, steps_per_period)?))
}

/// Writes `period,simulated,target` rows; missing targets stay empty.
pub fn write_concern_csv(path: impl AsRef<Path>, simulated: &[f64], targets: &TargetSeries) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "period,simulated,target")?;
    for (p, c) in simulated.iter().enumerate() {
        match targets.get(p) {
            Some(h) => writeln!(out, "{},{c},{h}", targets.label(p))?,
            None => writeln!(out, "{},{c},", targets.label(p))?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::Algorithm;
    use crate::graph::generate_ba;
    use crate::survey::synth_dataset;
    use proptest::prelude::*;

    #[test]
    fn genome_dimensions_per_model() {
        for (model, dim) in [(Model::Fj, 15), (Model::Dw, 30), (Model::Atbcr, 45)] {
            assert_eq!(model_bounds(model, 15).unwrap().dim(), dim);
        }
    }

    #[test]
    fn decodes_period_major_layout() {
        let mut genome = vec![0.15, 0.07, 0.85];
        genome.extend([0.01, 0.27, 0.65].repeat(14));
        let schedule = decode(&genome, Model::Atbcr, 15, 13_500).unwrap();
        assert_eq!(schedule.len(), 15);
        assert_eq!(schedule.periods()[0], PeriodParams::Atbcr { mu: 0.15, eps: 0.07, theta: 0.85 });
        assert_eq!(schedule.periods()[1], PeriodParams::Atbcr { mu: 0.01, eps: 0.27, theta: 0.65 });
    }

    #[test]
    fn decodes_fj_genome_in_order() {
        let genome: Vec<f64> = (0..15).map(|i| 0.1 + 0.05 * i as f64).collect();
        let schedule = decode(&genome, Model::Fj, 15, 10).unwrap();
        for (i, p) in schedule.periods().iter().enumerate() {
            assert_eq!(*p, PeriodParams::Fj { xi: genome[i] });
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        let err = decode(&[0.1; 44], Model::Atbcr, 15, 10).unwrap_err();
        assert!(matches!(err, Error::InvalidGenome { expected: 45, actual: 44 }));
    }

    #[test]
    fn bounds_follow_parameter_table() {
        let b = model_bounds(Model::Atbcr, 2).unwrap();
        assert_eq!(b.lower(), &[MIN_CONVERGENCE_SPEED, 0.0, 0.5, MIN_CONVERGENCE_SPEED, 0.0, 0.5]);
        assert_eq!(b.upper(), &[0.5, 0.5, 1.0, 0.5, 0.5, 1.0]);
        assert_eq!(b.pairs().len(), 2);
        assert!(!b.is_feasible(&[0.1, 0.45, 0.5, 0.1, 0.0, 0.5]));
        let fj = model_bounds(Model::Fj, 3).unwrap();
        assert_eq!((fj.lower()[0], fj.upper()[0]), (0.1, 1.0));
    }

    fn small_problem(model: Model, targets: Vec<Option<f64>>) -> CalibrationProblem {
        let survey = synth_dataset(120, [0.1, 0.1, 0.1], 3, "s").unwrap();
        let targets =
            TargetSeries::new(targets.into_iter().enumerate().map(|(i, v)| (format!("m{i}"), v)).collect())
                .unwrap();
        CalibrationProblem::new(
            model,
            generate_ba(120, 3, 4).unwrap(),
            survey,
            ConcernThreshold::new(0.75).unwrap(),
            targets,
            300,
            4,
            ProblemOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn problem_rejects_mismatched_network() {
        let p = small_problem(Model::Dw, vec![Some(0.3)]);
        let err = CalibrationProblem::new(
            Model::Dw,
            generate_ba(50, 3, 1).unwrap(),
            p.survey.clone(),
            p.threshold,
            p.targets.clone(),
            10,
            1,
            ProblemOptions::default(),
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn calibration_is_deterministic_and_within_budget() {
        let problem = small_problem(Model::Atbcr, vec![Some(0.35), None, Some(0.25)]);
        let config = OptimizerConfig::new(Algorithm::De, 8, 40);
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let count = |_: &[f64]| {
            calls.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        };
        let a = run_calibration_observed(&problem, &config, 11, &count).unwrap();
        let b = run_calibration(&problem, &config, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(calls.into_inner(), 40);
        assert_eq!(a.schedule.len(), 3);
        assert_eq!(a.simulated_concern().len(), 3);
        assert_eq!(a.reevaluated.per_replicate.len(), 4);
    }

    #[test]
    fn result_directory_layout() {
        let problem = small_problem(Model::Dw, vec![Some(0.3), None]);
        let config = OptimizerConfig::new(Algorithm::Pso, 4, 8);
        let result = run_calibration(&problem, &config, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        result.write_to_dir(dir.path(), &problem.targets).unwrap();
        let params = fs::read_to_string(dir.path().join("best_params.csv")).unwrap();
        let lines: Vec<&str> = params.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("m0,mu,") && lines[2].starts_with("m0,eps,"));
        let concern = fs::read_to_string(dir.path().join("concern.csv")).unwrap();
        assert!(concern.starts_with("period,simulated,target\nm0,"));
        assert!(concern.lines().nth(2).unwrap().ends_with(','));
        let (labels, schedule) = read_params_csv(dir.path().join("best_params.csv"), Model::Dw, 300).unwrap();
        assert_eq!(labels, vec!["m0", "m1"]);
        assert_eq!(encode(&schedule), result.best_genome);
    }

    #[test]
    fn params_file_must_be_complete() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, "period,param,value\na,mu,0.1\n").unwrap();
        assert!(read_params_csv(&path, Model::Dw, 10).is_err());
        fs::write(&path, "period,param,value\na,xi,0.1\n").unwrap();
        assert!(matches!(read_params_csv(&path, Model::Dw, 10), Err(Error::Parse { line: 2, .. })));
        fs::write(&path, "period,param,value\na,eps,0.2\na,mu,0.1\n").unwrap();
        let (_, s) = read_params_csv(&path, Model::Dw, 10).unwrap();
        assert_eq!(s.periods()[0], PeriodParams::Dw { mu: 0.1, eps: 0.2 });
    }

    #[test]
    fn deactivated_dw_matches_constant_baseline() {
        // With eps = 0 nothing moves, so every replicate reports the initial
        // concern, which equals the mentioned fraction of the survey.
        let problem = small_problem(Model::Dw, vec![Some(0.2), Some(0.4), None]);
        let c0 = problem.survey.mentioned_fraction();
        let expected = 100.0 * ((c0 - 0.2).abs() / 0.2 + (c0 - 0.4).abs() / 0.4) / 2.0;
        let fit = fitness::evaluate(&[0.3, 0.0, 0.2, 0.0, 0.5, 0.0], &problem, 1, 9, 0).unwrap();
        assert!((fit.mean_mape - expected).abs() < 1e-12);
        assert_eq!(fit.mean_concern, vec![c0; 3]);
    }

    #[test]
    fn evaluation_replays_and_replicates_differ() {
        let problem = small_problem(Model::Atbcr, vec![Some(0.3), Some(0.4)]);
        let genome = vec![0.4, 0.05, 0.5, 0.3, 0.4, 0.9];
        let a = problem.evaluate(&genome, 5, 17).unwrap();
        let b = problem.evaluate(&genome, 5, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.per_replicate.windows(2).any(|w| w[0] != w[1]));
        let mean = a.per_replicate.iter().sum::<f64>() / a.per_replicate.len() as f64;
        assert_eq!(a.mean_mape, mean);
        assert_ne!(a, problem.evaluate(&genome, 5, 18).unwrap());
    }

    #[test]
    fn per_replicate_network_policy_changes_streams() {
        let mut problem = small_problem(Model::Dw, vec![Some(0.3)]);
        let genome = vec![0.4, 0.3];
        let shared = problem.evaluate(&genome, 1, 0).unwrap();
        problem.options.network = NetworkPolicy::PerReplicate { edges_per_node: 3 };
        let fresh = problem.evaluate(&genome, 1, 0).unwrap();
        assert_eq!(fresh, problem.evaluate(&genome, 1, 0).unwrap());
        assert_ne!(shared, fresh);
    }

    proptest! {
        #[test]
        fn encode_inverts_decode(values in prop::collection::vec(0.0f64..1.0, 1..8), model_idx in 0usize..3) {
            let model = Model::ALL[model_idx];
            let k = model.params_per_period();
            let genome: Vec<f64> = values.iter().cycle().take(values.len() * k).copied().collect();
            let schedule = decode(&genome, model, values.len(), 7).unwrap();
            prop_assert_eq!(encode(&schedule), genome.clone());
            prop_assert_eq!(decode(&encode(&schedule), model, values.len(), 7).unwrap(), schedule);
        }
    }
}
