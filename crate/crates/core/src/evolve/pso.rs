use rand::Rng;

use super::{
    check_setup, uniform_population, Bounds, Evaluator, Objective, OptimizerConfig, Outcome, PsoParams,
};
use crate::error::{Error, Result};
use crate::rng;

/// Global-best PSO with velocities constricted to each dimension's range.
/// Particles start uniformly inside the bounds with zero velocity; walls are
/// absorbing, so a coordinate clamped to a bound loses its velocity.
pub fn run_pso(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<Outcome> {
    check_setup(bounds, config)?;
    let mut rng = rng::stream(seed);
    let swarm = uniform_population(bounds, config.population, &mut rng);
    swarm_loop(objective, bounds, config, rng, swarm)
}

/// PSO from explicit starting positions (zero initial velocity).
pub fn run_pso_from(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
    seed: u64,
    positions: Vec<Vec<f64>>,
) -> Result<Outcome> {
    check_setup(bounds, config)?;
    if positions.len() != config.population || positions.iter().any(|p| p.len() != bounds.dim()) {
        return Err(Error::Config(format!(
            "initial swarm must hold {} particles of dimension {}",
            config.population,
            bounds.dim()
        )));
    }
    let swarm = positions.into_iter().map(|p| bounds.repaired(p)).collect();
    swarm_loop(objective, bounds, config, rng::stream(seed), swarm)
}

fn swarm_loop(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
    mut rng: rng::SimRng,
    mut positions: Vec<Vec<f64>>,
) -> Result<Outcome> {
    let dim = bounds.dim();
    let params = config.pso;
    let mut eval = Evaluator::new(objective, config.budget);
    let mut velocities = vec![vec![0.0; dim]; positions.len()];

    let mut fitness = eval.batch(&positions);
    let mut personal = positions.clone();
    let mut personal_fitness = fitness.clone();
    let mut leader = argmin(&personal_fitness);
    eval.record(&fitness);

    while eval.remaining() > 0 {
        let global = personal[leader].clone();
        for ((x, v), p) in positions.iter_mut().zip(&mut velocities).zip(&personal) {
            advance(x, v, p, &global, bounds, &params, &mut rng);
        }

        let evaluated = eval.batch(&positions);
        for (i, f) in evaluated.into_iter().enumerate() {
            fitness[i] = f;
            if f < personal_fitness[i] {
                personal_fitness[i] = f;
                personal[i].clone_from(&positions[i]);
            }
        }
        leader = argmin(&personal_fitness);
        eval.record(&fitness);
    }
    Ok(eval.finish())
}

/// Moves one particle: constricted velocity update, position step, repair.
/// Without absorbing walls a clamped coordinate keeps pushing outward and
/// the swarm stagnates on the bound.
fn advance(
    x: &mut [f64],
    v: &mut [f64],
    personal: &[f64],
    global: &[f64],
    bounds: &Bounds,
    params: &PsoParams,
    rng: &mut rng::SimRng,
) {
    for d in 0..x.len() {
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let limit = bounds.range(d);
        v[d] = (params.inertia * v[d]
            + params.c1 * r1 * (personal[d] - x[d])
            + params.c2 * r2 * (global[d] - x[d]))
            .clamp(-limit, limit);
        x[d] += v[d];
        let clamped = x[d].clamp(bounds.lower()[d], bounds.upper()[d]);
        if clamped != x[d] {
            x[d] = clamped;
            v[d] = 0.0;
        }
    }
    bounds.repair(x);
}

fn argmin(values: &[f64]) -> usize {
    values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("non-empty swarm")
}
