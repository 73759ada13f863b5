//! Population-based optimizers for bounded, repaired genomes.
//!
//! All algorithms minimise. Every genome handed to the objective has been
//! repaired into [`Bounds`] first, evaluations never exceed the budget, and a
//! fixed seed reproduces the run exactly: random draws come from one
//! sequential stream while a generation's evaluations may run in parallel.

mod bounds;
mod de;
mod pso;
mod shade;

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bounds::{Bounds, PairConstraint};
pub use de::run_de;
pub use pso::{run_pso, run_pso_from};
pub use shade::{lshade_target_size, run_lshade, run_shade};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// A fitness function to minimise. `index` is the zero-based position of the
/// call within the run and lets stochastic objectives derive their streams.
pub trait Objective: Sync {
    fn evaluate(&self, genome: &[f64], index: u64) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, genome: &[f64], _index: u64) -> f64 {
        self(genome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    De,
    Shade,
    #[serde(rename = "lshade")]
    LShade,
    Pso,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::De, Algorithm::Shade, Algorithm::LShade, Algorithm::Pso];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::De => "de",
            Algorithm::Shade => "shade",
            Algorithm::LShade => "lshade",
            Algorithm::Pso => "pso",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "de" => Ok(Algorithm::De),
            "shade" => Ok(Algorithm::Shade),
            "lshade" => Ok(Algorithm::LShade),
            "pso" => Ok(Algorithm::Pso),
            _ => Err(Error::Config(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// DE/rand/1/bin controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeParams {
    pub crossover_rate: f64,
    pub scale_factor: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        Self { crossover_rate: 0.5, scale_factor: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShadeParams {
    /// Size H of the success-history memories.
    pub memory_size: usize,
    /// Fraction of the population eligible as p-best.
    pub p_best: f64,
}

impl Default for ShadeParams {
    fn default() -> Self {
        Self { memory_size: 100, p_best: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LShadeParams {
    pub memory_size: usize,
    pub p_best: f64,
    /// Population size reached when the budget is exhausted.
    pub min_population: usize,
}

impl Default for LShadeParams {
    fn default() -> Self {
        Self { memory_size: 6, p_best: 0.1, min_population: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoParams {
    pub c1: f64,
    pub c2: f64,
    pub inertia: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self { c1: 1.49618, c2: 1.49618, inertia: 0.7298 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub population: usize,
    /// Maximum number of objective calls.
    pub budget: usize,
    pub de: DeParams,
    pub shade: ShadeParams,
    pub lshade: LShadeParams,
    pub pso: PsoParams,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::De,
            population: 100,
            budget: 30_000,
            de: DeParams::default(),
            shade: ShadeParams::default(),
            lshade: LShadeParams::default(),
            pso: PsoParams::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm, population: usize, budget: usize) -> Self {
        Self { algorithm, population, budget, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::Config(format!("population must be at least 4, got {}", self.population)));
        }
        if self.budget < self.population {
            return Err(Error::Config(format!(
                "budget {} does not cover one generation of {}",
                self.budget, self.population
            )));
        }
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        match self.algorithm {
            Algorithm::De => {
                unit("de.crossover_rate", self.de.crossover_rate)?;
                if !(self.de.scale_factor > 0.0 && self.de.scale_factor <= 2.0) {
                    return Err(Error::Config("de.scale_factor must lie in (0, 2]".into()));
                }
            }
            Algorithm::Shade => {
                unit("shade.p_best", self.shade.p_best)?;
                if self.shade.memory_size == 0 {
                    return Err(Error::Config("shade.memory_size must be positive".into()));
                }
            }
            Algorithm::LShade => {
                unit("lshade.p_best", self.lshade.p_best)?;
                if self.lshade.memory_size == 0 {
                    return Err(Error::Config("lshade.memory_size must be positive".into()));
                }
                if self.lshade.min_population < 4 || self.lshade.min_population > self.population {
                    return Err(Error::Config(format!(
                        "lshade.min_population must lie in [4, {}]",
                        self.population
                    )));
                }
            }
            Algorithm::Pso => {
                let p = self.pso;
                if [p.c1, p.c2, p.inertia].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::Config("pso coefficients must be non-negative".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Generation {
    /// Objective calls used so far.
    pub evaluations: usize,
    /// Best fitness found so far.
    pub best: f64,
    /// Mean fitness of the current population.
    pub mean: f64,
    pub population: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceLog {
    pub records: Vec<Generation>,
}

impl ConvergenceLog {
    pub fn last(&self) -> Option<&Generation> {
        self.records.last()
    }

    /// Writes `evaluations,best,mean,population` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = csv::Writer::from_path(path)?;
        out.write_record(["evaluations", "best", "mean", "population"])?;
        for g in &self.records {
            out.write_record([
                g.evaluations.to_string(),
                g.best.to_string(),
                g.mean.to_string(),
                g.population.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    pub log: ConvergenceLog,
}

/// Runs the algorithm selected in `config`.
pub fn run(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<Outcome> {
    match config.algorithm {
        Algorithm::De => run_de(objective, bounds, config, seed),
        Algorithm::Shade => run_shade(objective, bounds, config, seed),
        Algorithm::LShade => run_lshade(objective, bounds, config, seed),
        Algorithm::Pso => run_pso(objective, bounds, config, seed),
    }
}

/// Budget-aware batch evaluator shared by the algorithms.
struct Evaluator<'a> {
    objective: &'a dyn Objective,
    budget: usize,
    used: usize,
    best: Option<(Vec<f64>, f64)>,
    log: ConvergenceLog,
}

impl<'a> Evaluator<'a> {
    fn new(objective: &'a dyn Objective, budget: usize) -> Self {
        Self { objective, budget, used: 0, best: None, log: ConvergenceLog::default() }
    }

    fn remaining(&self) -> usize {
        self.budget - self.used
    }

    /// Evaluates the longest prefix of `genomes` the budget allows.
    fn batch(&mut self, genomes: &[Vec<f64>]) -> Vec<f64> {
        let take = genomes.len().min(self.remaining());
        let first = self.used as u64;
        let objective = self.objective;
        let fitness: Vec<f64> = genomes[..take]
            .par_iter()
            .enumerate()
            .map(|(k, g)| objective.evaluate(g, first + k as u64))
            .collect();
        self.used += take;
        for (g, &f) in genomes.iter().zip(&fitness) {
            if self.best.as_ref().is_none_or(|(_, b)| f < *b) {
                self.best = Some((g.clone(), f));
            }
        }
        fitness
    }

    fn record(&mut self, population_fitness: &[f64]) {
        let best = self.best.as_ref().map_or(f64::INFINITY, |(_, b)| *b);
        let mean = population_fitness.iter().sum::<f64>() / population_fitness.len() as f64;
        self.log.records.push(Generation {
            evaluations: self.used,
            best,
            mean,
            population: population_fitness.len(),
        });
    }

    fn finish(self) -> Outcome {
        let (best, best_fitness) = self.best.expect("at least one evaluation");
        Outcome { best, best_fitness, log: self.log }
    }
}

fn check_setup(bounds: &Bounds, config: &OptimizerConfig) -> Result<()> {
    config.validate()?;
    if bounds.dim() == 0 {
        return Err(Error::Config("genome has no dimensions".into()));
    }
    Ok(())
}

fn uniform_population(bounds: &Bounds, size: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
    (0..size)
        .map(|_| {
            let g = (0..bounds.dim())
                .map(|d| bounds.lower()[d] + rng.random::<f64>() * bounds.range(d))
                .collect();
            bounds.repaired(g)
        })
        .collect()
}

/// Uniform index in `0..n` different from every entry of `exclude`.
fn distinct_index(rng: &mut SimRng, n: usize, exclude: &[usize]) -> usize {
    loop {
        let k = rng.random_range(0..n);
        if !exclude.contains(&k) {
            return k;
        }
    }
}

/// Binomial crossover of `mutant` into `target`, with one forced dimension.
fn binomial_crossover(target: &[f64], mutant: &[f64], cr: f64, rng: &mut SimRng) -> Vec<f64> {
    let forced = rng.random_range(0..target.len());
    target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(d, (&t, &m))| if d == forced || rng.random::<f64>() < cr { m } else { t })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::new(Algorithm::De, 3, 100).validate().is_err());
        assert!(OptimizerConfig::new(Algorithm::De, 10, 9).validate().is_err());
        assert!(OptimizerConfig::new(Algorithm::De, 10, 10).validate().is_ok());
        let mut c = OptimizerConfig::new(Algorithm::LShade, 10, 100);
        c.lshade.min_population = 11;
        assert!(c.validate().is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("L-SHADE".parse::<Algorithm>().unwrap(), Algorithm::LShade);
    }

    #[test]
    fn default_hyperparameters() {
        let c = OptimizerConfig::default();
        assert_eq!((c.population, c.budget), (100, 30_000));
        assert_eq!((c.de.crossover_rate, c.de.scale_factor), (0.5, 0.5));
        assert_eq!(c.shade.memory_size, 100);
        assert_eq!((c.lshade.memory_size, c.lshade.min_population), (6, 4));
        assert_eq!((c.pso.c1, c.pso.c2, c.pso.inertia), (1.49618, 1.49618, 0.7298));
    }

    #[test]
    fn every_algorithm_respects_budget_and_bounds() {
        let bounds = Bounds::new(vec![0.0, 0.0, 0.5], vec![0.5, 0.5, 1.0])
            .unwrap()
            .with_pair(PairConstraint { lower_index: 1, upper_index: 2, min_gap: 0.1, max_gap: 0.9 })
            .unwrap();
        for algorithm in Algorithm::ALL {
            let calls = AtomicUsize::new(0);
            let infeasible = AtomicUsize::new(0);
            let objective = |g: &[f64]| {
                calls.fetch_add(1, Ordering::Relaxed);
                if !bounds.is_feasible(g) {
                    infeasible.fetch_add(1, Ordering::Relaxed);
                }
                (g[0] - 0.3).powi(2) + (g[2] - g[1] - 0.1).powi(2)
            };
            let config = OptimizerConfig::new(algorithm, 12, 1_005);
            let out = run(&objective, &bounds, &config, 3).unwrap();
            assert_eq!(calls.load(Ordering::Relaxed), 1_005, "{algorithm}");
            assert_eq!(infeasible.load(Ordering::Relaxed), 0, "{algorithm}");
            assert_eq!(out.log.last().unwrap().evaluations, 1_005);
            assert!(out.log.records.windows(2).all(|w| w[1].best <= w[0].best));
            assert!(bounds.is_feasible(&out.best));
        }
    }

    #[test]
    fn fixed_seed_replays_every_algorithm() {
        let bounds = Bounds::uniform(6, -1.0, 1.0).unwrap();
        for algorithm in Algorithm::ALL {
            let config = OptimizerConfig::new(algorithm, 10, 400);
            let a = run(&test_support::sphere, &bounds, &config, 42).unwrap();
            let b = run(&test_support::sphere, &bounds, &config, 42).unwrap();
            assert_eq!(a, b, "{algorithm}");
        }
    }

    #[test]
    fn convergence_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let log = ConvergenceLog {
            records: vec![Generation { evaluations: 100, best: 0.5, mean: 1.25, population: 100 }],
        };
        log.write_csv(&path).unwrap();
        assert_eq!(
            std::fs::read_to_string(path).unwrap(),
            "evaluations,best,mean,population\n100,0.5,1.25,100\n"
        );
    }
}
