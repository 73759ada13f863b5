//! The `simulate`, `calibrate` and `synth` commands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use odcal::calibrate::{read_params_csv, write_concern_csv};
use odcal::dynamics::write_snapshots;
use odcal::graph::generate_ba;
use odcal::rng::stream_seed;
use odcal::survey::{parse_survey, parse_targets, synth_dataset};
use odcal::{
    mape, run_calibration, simulate_replicates, CalibrationProblem, ConcernThreshold, Model, ProblemOptions,
    SocialNetwork, SurveyDataset, TargetSeries,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Seed tags for streams derived from the run seed.
const NETWORK_TAG: u64 = 0x6E65_7477;
const TASK_TAG: u64 = 0x7461_736B;
/// Evaluation tag of `simulate`: the same streams `evaluate` uses for its
/// first call, so a simulated schedule reproduces that evaluation.
const SIMULATE_TAG: u64 = 0;

/// Inputs shared by every task of one invocation.
struct Inputs {
    survey: SurveyDataset,
    targets: TargetSeries,
    network: SocialNetwork,
    network_seed: Option<u64>,
}

fn load_inputs(config: &RunConfig, seed: u64) -> Result<Inputs> {
    let survey = parse_survey(&config.survey)?;
    let targets = parse_targets(&config.targets)?;
    let (network, network_seed) = match &config.network.edge_list {
        Some(path) => (SocialNetwork::read_edge_list(path, survey.len())?, None),
        None => {
            let net_seed = config.network.seed.unwrap_or_else(|| stream_seed(seed, NETWORK_TAG, 0));
            let network = generate_ba(survey.len(), config.network.edges_per_node, net_seed)?;
            (network, Some(net_seed))
        }
    };
    Ok(Inputs { survey, targets, network, network_seed })
}

fn problem(config: &RunConfig, inputs: &Inputs, model: Model, threshold: f64) -> Result<CalibrationProblem> {
    Ok(CalibrationProblem::new(
        model,
        inputs.network.clone(),
        inputs.survey.clone(),
        ConcernThreshold::new(threshold)?,
        inputs.targets.clone(),
        config.steps_per_period,
        config.replicates,
        ProblemOptions { mape: config.mape, fj_update: config.fj_update, network: config.network.policy() },
    )?)
}

/// Config echo that replays exactly one task.
fn echo(config: &RunConfig, seed: u64, network_seed: Option<u64>) -> RunConfig {
    let mut echo = config.clone();
    echo.seed = Some(seed);
    echo.network.seed = network_seed.or(config.network.seed);
    echo.grid = None;
    echo.repetitions = 1;
    echo.out = None;
    echo
}

fn write_echo(dir: &Path, config: &RunConfig) -> Result<()> {
    fs::write(dir.join("config.json"), config.to_json())?;
    Ok(())
}

/// One calibration task of a `calibrate` invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub model: Model,
    pub threshold: f64,
    pub algorithm: odcal::Algorithm,
    pub seed: u64,
    pub dir: PathBuf,
}

/// Expands `config` into tasks. A single task keeps the run seed and writes
/// straight into `out`; otherwise every task gets its own derived seed and
/// subdirectory.
pub fn plan(config: &RunConfig, seed: u64, out: &Path, grid: bool) -> Vec<Task> {
    let cells = if grid {
        config.grid_cells()
    } else {
        vec![(config.model, config.threshold, config.optimizer.algorithm)]
    };
    let reps = config.repetitions;
    let single = cells.len() == 1 && reps == 1;
    let mut tasks = Vec::with_capacity(cells.len() * reps);
    for (c, &(model, threshold, algorithm)) in cells.iter().enumerate() {
        let cell_dir = if grid {
            out.join(format!("{model}-c{threshold}-{}", algorithm.name()))
        } else {
            out.to_path_buf()
        };
        for r in 0..reps {
            let dir = if reps > 1 { cell_dir.join(format!("rep-{:02}", r + 1)) } else { cell_dir.clone() };
            let task_seed = if single { seed } else { stream_seed(seed, TASK_TAG, (c * reps + r) as u64) };
            tasks.push(Task { model, threshold, algorithm, seed: task_seed, dir });
        }
    }
    tasks
}

/// Runs every planned task and writes its result directory.
pub fn calibrate(
    config: &RunConfig,
    seed: u64,
    out: &Path,
    grid: bool,
    stdout: &mut dyn Write,
) -> Result<()> {
    let inputs = load_inputs(config, seed)?;
    for task in plan(config, seed, out, grid) {
        let problem = problem(config, &inputs, task.model, task.threshold)?;
        let mut optimizer = config.optimizer.clone();
        optimizer.algorithm = task.algorithm;
        optimizer.validate()?;
        let result = run_calibration(&problem, &optimizer, task.seed)?;
        result.write_to_dir(&task.dir, &inputs.targets)?;

        let mut task_config = echo(config, task.seed, inputs.network_seed);
        task_config.model = task.model;
        task_config.threshold = task.threshold;
        task_config.optimizer = optimizer;
        write_echo(&task.dir, &task_config)?;

        writeln!(
            stdout,
            "{}: {} {} c_th={} search={:.6} reevaluated={:.6} (se {:.6}) evaluations={}",
            task.dir.display(),
            task.model,
            task.algorithm,
            task.threshold,
            result.search_fitness,
            result.reevaluated.mean_mape,
            result.reevaluated.standard_error(),
            result.log.last().map_or(0, |g| g.evaluations),
        )?;
    }
    Ok(())
}

/// Runs the schedule in `params` for `config.replicates` replicates and
/// writes `concern.csv`, `replicates.csv` and optionally `snapshots.csv`.
pub fn simulate(
    config: &RunConfig,
    params: &Path,
    seed: u64,
    out: &Path,
    snapshots: bool,
    stdout: &mut dyn Write,
) -> Result<()> {
    let (labels, schedule) = read_params_csv(params, config.model, config.steps_per_period)?;
    let inputs = load_inputs(config, seed)?;
    if schedule.len() != inputs.targets.len() {
        return Err(CliError::Config(format!(
            "{} holds {} periods but the targets have {}",
            params.display(),
            schedule.len(),
            inputs.targets.len()
        )));
    }
    if let Some((got, want)) = labels.iter().zip(inputs.targets.labels()).find(|(a, b)| a != b) {
        return Err(CliError::Config(format!(
            "period {got:?} in {} does not match target period {want:?}",
            params.display()
        )));
    }

    let problem = problem(config, &inputs, config.model, config.threshold)?;
    let runs = simulate_replicates(&schedule, &problem, config.replicates, seed, SIMULATE_TAG, snapshots)?;

    fs::create_dir_all(out)?;
    let periods = inputs.targets.len();
    let mut mean = vec![0.0; periods];
    let mut rows = String::from("replicate,period,concern\n");
    for (r, run) in runs.iter().enumerate() {
        for (p, c) in run.concern.values().iter().enumerate() {
            mean[p] += c;
            rows.push_str(&format!("{r},{},{c}\n", inputs.targets.label(p)));
        }
    }
    for m in &mut mean {
        *m /= runs.len() as f64;
    }
    fs::write(out.join("replicates.csv"), rows)?;
    write_concern_csv(out.join("concern.csv"), &mean, &inputs.targets)?;
    if let Some(profiles) = runs.first().and_then(|r| r.snapshots.as_ref()) {
        write_snapshots(out.join("snapshots.csv"), inputs.targets.labels().zip(profiles.iter()))?;
    }
    write_echo(out, &echo(config, seed, inputs.network_seed))?;

    let errors = runs
        .iter()
        .map(|run| mape(run.concern.values(), &inputs.targets))
        .collect::<odcal::Result<Vec<f64>>>()?;
    writeln!(
        stdout,
        "{}: {} over {} replicates, mean MAPE {:.6}",
        out.display(),
        config.model,
        runs.len(),
        errors.iter().sum::<f64>() / errors.len() as f64
    )?;
    Ok(())
}

/// Target series for `synth`.
pub enum Trend {
    /// Read `period,proportion` rows; blank proportions stay missing.
    File(PathBuf),
    /// A deterministic up-down oscillation of this many months around the
    /// survey's concern level, labelled from `start` (`YYYY-MM`).
    Oscillating { months: usize, start: String },
}

/// Writes `survey.csv` (one rank per respondent) and `targets.csv`.
pub fn synth(
    n: usize,
    proportions: [f64; 3],
    trend: &Trend,
    seed: u64,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<()> {
    let targets = match trend {
        Trend::File(path) => parse_targets(path)?,
        Trend::Oscillating { months, start } => {
            let level: f64 = proportions.iter().sum();
            oscillating_targets(level, *months, start)?
        }
    };
    let survey = synth_dataset(n, proportions, seed, targets.label(0))?;
    fs::create_dir_all(out)?;
    survey.write_csv(out.join("survey.csv"))?;
    targets.write_csv(out.join("targets.csv"))?;
    writeln!(
        stdout,
        "{}: {} respondents ({:.4} concerned), {} periods, seed {seed}",
        out.display(),
        survey.len(),
        survey.mentioned_fraction(),
        targets.len()
    )?;
    Ok(())
}

/// Relative swing of the synthetic oscillation.
const SWING: f64 = 0.2;

fn oscillating_targets(level: f64, months: usize, start: &str) -> Result<TargetSeries> {
    if months == 0 {
        return Err(CliError::Config("months must be positive".into()));
    }
    let labels = month_labels(start, months)?;
    let periods = labels
        .into_iter()
        .enumerate()
        .map(|(t, label)| {
            let phase = (t as f64 * std::f64::consts::FRAC_PI_2).sin();
            let h = (level * (1.0 + SWING * phase)).min(1.0);
            (label, Some((h * 1e6).round() / 1e6))
        })
        .collect();
    Ok(TargetSeries::new(periods)?)
}

/// `count` consecutive `YYYY-MM` labels starting at `start`.
pub fn month_labels(start: &str, count: usize) -> Result<Vec<String>> {
    let bad = || CliError::Config(format!("start month must look like 2023-01, got {start:?}"));
    let (y, m) = start.split_once('-').ok_or_else(bad)?;
    let year: i32 = y.parse().map_err(|_| bad())?;
    let month: u32 = m.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&month) || y.len() != 4 || m.len() != 2 {
        return Err(bad());
    }
    let first = year as i64 * 12 + (month as i64 - 1);
    Ok((0..count as i64)
        .map(|k| {
            let t = first + k;
            format!("{:04}-{:02}", t.div_euclid(12), t.rem_euclid(12) + 1)
        })
        .collect())
}
