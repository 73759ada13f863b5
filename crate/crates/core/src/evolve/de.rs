use super::{
    binomial_crossover, check_setup, distinct_index, uniform_population, Bounds, Evaluator, Objective,
    OptimizerConfig, Outcome,
};
use crate::error::Result;
use crate::rng;

/// Classic DE/rand/1/bin with greedy one-to-one replacement.
pub fn run_de(
    objective: &dyn Objective,
    bounds: &Bounds,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<Outcome> {
    check_setup(bounds, config)?;
    let mut rng = rng::stream(seed);
    let mut eval = Evaluator::new(objective, config.budget);
    let np = config.population;
    let (cr, f) = (config.de.crossover_rate, config.de.scale_factor);

    let mut population = uniform_population(bounds, np, &mut rng);
    let mut fitness = eval.batch(&population);
    eval.record(&fitness);

    while eval.remaining() > 0 {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let r1 = distinct_index(&mut rng, np, &[i]);
                let r2 = distinct_index(&mut rng, np, &[i, r1]);
                let r3 = distinct_index(&mut rng, np, &[i, r1, r2]);
                let mutant: Vec<f64> = (0..bounds.dim())
                    .map(|d| population[r1][d] + f * (population[r2][d] - population[r3][d]))
                    .collect();
                bounds.repaired(binomial_crossover(&population[i], &mutant, cr, &mut rng))
            })
            .collect();

        let trial_fitness = eval.batch(&trials);
        for (i, (trial, tf)) in trials.into_iter().zip(trial_fitness).enumerate() {
            if tf <= fitness[i] {
                population[i] = trial;
                fitness[i] = tf;
            }
        }
        eval.record(&fitness);
    }
    Ok(eval.finish())
}
