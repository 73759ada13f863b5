//! SHADE and L-SHADE.
//!
//! Both share one engine: success-history memories `M_CR`, `M_F` of size H,
//! current-to-pbest/1 mutation with an external archive of replaced parents,
//! and binomial crossover. L-SHADE additionally shrinks the population
//! linearly in the evaluations used; with the minimum size equal to the
//! initial size the engine is plain SHADE.

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Normal};

use super::{
    binomial_crossover, check_setup, distinct_index, uniform_population, Bounds, Evaluator, Objective,
    OptimizerConfig, Outcome,
};
use crate::error::Result;
use crate::rng::{self, SimRng};

const PARAM_SPREAD: f64 = 0.1;

pub fn run_shade(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<Outcome> {
    check_setup(bounds, config)?;
    let params = config.shade;
    Engine::new(objective, bounds, config, params.memory_size, params.p_best, config.population, seed).run()
}

pub fn run_lshade(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<Outcome> {
    check_setup(bounds, config)?;
    let params = config.lshade;
    Engine::new(objective, bounds, config, params.memory_size, params.p_best, params.min_population, seed)
        .run()
}

/// Population size after `used` of `budget` evaluations.
pub fn lshade_target_size(initial: usize, min: usize, used: usize, budget: usize) -> usize {
    let shrink = (initial - min) as f64 * used as f64 / budget as f64;
    (initial as f64 - shrink).round() as usize
}

struct Memory {
    cr: Vec<f64>,
    f: Vec<f64>,
    next: usize,
}

impl Memory {
    fn new(size: usize) -> Self {
        Self { cr: vec![0.5; size], f: vec![0.5; size], next: 0 }
    }

    /// Weighted arithmetic mean for CR and weighted Lehmer mean for F, with
    /// weights proportional to the fitness improvement.
    fn update(&mut self, successes: &[Success]) {
        let total: f64 = successes.iter().map(|s| s.improvement).sum();
        if successes.is_empty() || total.is_nan() || total <= 0.0 {
            return;
        }
        let mut cr = 0.0;
        let mut f_sq = 0.0;
        let mut f_lin = 0.0;
        for s in successes {
            let w = s.improvement / total;
            cr += w * s.cr;
            f_sq += w * s.f * s.f;
            f_lin += w * s.f;
        }
        self.cr[self.next] = cr;
        self.f[self.next] = f_sq / f_lin;
        self.next = (self.next + 1) % self.cr.len();
    }
}

struct Success {
    cr: f64,
    f: f64,
    improvement: f64,
}

struct Engine<'a> {
    eval: Evaluator<'a>,
    bounds: &'a Bounds,
    rng: SimRng,
    memory: Memory,
    p_best: f64,
    initial_size: usize,
    min_size: usize,
    budget: usize,
    population: Vec<Vec<f64>>,
    fitness: Vec<f64>,
    archive: Vec<Vec<f64>>,
}

impl<'a> Engine<'a> {
    fn new(
        objective: &'a dyn Objective,
        bounds: &'a Bounds,
        config: &OptimizerConfig,
        memory_size: usize,
        p_best: f64,
        min_size: usize,
        seed: u64,
    ) -> Self {
        let mut rng = rng::stream(seed);
        let mut eval = Evaluator::new(objective, config.budget);
        let population = uniform_population(bounds, config.population, &mut rng);
        let fitness = eval.batch(&population);
        eval.record(&fitness);
        Self {
            eval,
            bounds,
            rng,
            memory: Memory::new(memory_size),
            p_best,
            initial_size: config.population,
            min_size,
            budget: config.budget,
            population,
            fitness,
            archive: Vec::new(),
        }
    }

    fn run(mut self) -> Result<Outcome> {
        while self.eval.remaining() > 0 {
            self.generation();
        }
        Ok(self.eval.finish())
    }

    fn sample_cr(&mut self, slot: usize) -> f64 {
        let dist = Normal::new(self.memory.cr[slot], PARAM_SPREAD).expect("finite memory");
        dist.sample(&mut self.rng).clamp(0.0, 1.0)
    }

    fn sample_f(&mut self, slot: usize) -> f64 {
        let dist = Cauchy::new(self.memory.f[slot], PARAM_SPREAD).expect("finite memory");
        loop {
            let f = dist.sample(&mut self.rng);
            if f > 0.0 {
                return f.min(1.0);
            }
        }
    }

    fn generation(&mut self) {
        let np = self.population.len();
        let dim = self.bounds.dim();
        let mut order: Vec<usize> = (0..np).collect();
        order.sort_by(|&a, &b| self.fitness[a].total_cmp(&self.fitness[b]));
        let elite = ((self.p_best * np as f64).round() as usize).clamp(2, np);

        let mut trials = Vec::with_capacity(np);
        let mut controls = Vec::with_capacity(np);
        for i in 0..np {
            let slot = self.rng.random_range(0..self.memory.cr.len());
            let cr = self.sample_cr(slot);
            let f = self.sample_f(slot);
            let pbest = order[self.rng.random_range(0..elite)];
            let r1 = distinct_index(&mut self.rng, np, &[i]);
            let r2 = distinct_index(&mut self.rng, np + self.archive.len(), &[i, r1]);
            let x = &self.population[i];
            let xp = &self.population[pbest];
            let x1 = &self.population[r1];
            let x2 = if r2 < np { &self.population[r2] } else { &self.archive[r2 - np] };
            let mutant: Vec<f64> =
                (0..dim).map(|d| x[d] + f * (xp[d] - x[d]) + f * (x1[d] - x2[d])).collect();
            let trial = binomial_crossover(x, &mutant, cr, &mut self.rng);
            trials.push(self.bounds.repaired(trial));
            controls.push((cr, f));
        }

        let trial_fitness = self.eval.batch(&trials);
        let mut successes = Vec::new();
        for (i, (trial, tf)) in trials.into_iter().zip(trial_fitness).enumerate() {
            let parent = self.fitness[i];
            if tf <= parent {
                if tf < parent {
                    let (cr, f) = controls[i];
                    successes.push(Success { cr, f, improvement: parent - tf });
                    let replaced = std::mem::replace(&mut self.population[i], trial);
                    self.archive.push(replaced);
                } else {
                    self.population[i] = trial;
                }
                self.fitness[i] = tf;
            }
        }
        self.memory.update(&successes);
        self.reduce_population();
        self.trim_archive();
        self.eval.record(&self.fitness);
    }

    fn reduce_population(&mut self) {
        if self.min_size >= self.initial_size {
            return;
        }
        let target = lshade_target_size(self.initial_size, self.min_size, self.eval.used, self.budget)
            .max(self.min_size);
        let np = self.population.len();
        if target >= np {
            return;
        }
        let mut order: Vec<usize> = (0..np).collect();
        order.sort_by(|&a, &b| self.fitness[a].total_cmp(&self.fitness[b]));
        order.truncate(target);
        order.sort_unstable();
        self.population = order.iter().map(|&k| self.population[k].clone()).collect();
        self.fitness = order.iter().map(|&k| self.fitness[k]).collect();
    }

    /// Random eviction down to the current population size.
    fn trim_archive(&mut self) {
        let cap = self.population.len();
        while self.archive.len() > cap {
            let k = self.rng.random_range(0..self.archive.len());
            self.archive.swap_remove(k);
        }
    }
}
