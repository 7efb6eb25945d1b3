use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{OptimizerReport, ParameterVector, Termination};
use crate::error::{Error, Result};

const TOURNAMENT_SIZE: usize = 3;
const BLEND_ALPHA: f64 = 0.5;

/// Generational real-valued GA with tournament selection, BLX-alpha crossover,
/// Gaussian mutation and elitism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_scale: f64,
    pub elitism_count: usize,
    /// Per-coordinate `[lo, hi]` box for initialization; offspring are clamped into it.
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

impl GaConfig {
    /// Defaults for a pulse of `n_terms` harmonics: `A in [-5, 5]`, `phi in [0, 2 pi)`.
    pub fn for_pulse(n_terms: usize, seed: u64) -> Self {
        let mut bounds = vec![(-5.0, 5.0); n_terms];
        bounds.extend(std::iter::repeat_n((0.0, std::f64::consts::TAU), n_terms));
        Self {
            population_size: 50,
            generations: 200,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_scale: 0.3,
            elitism_count: 2,
            bounds,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::invalid("population_size", "need at least 2 individuals"));
        }
        if self.elitism_count >= self.population_size {
            return Err(Error::invalid("elitism_count", "must be smaller than population_size"));
        }
        for (name, rate) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::invalid(name, format!("{rate} outside [0, 1]")));
            }
        }
        if !(self.mutation_scale > 0.0) {
            return Err(Error::invalid("mutation_scale", "must be positive"));
        }
        if self.bounds.is_empty() {
            return Err(Error::invalid("bounds", "need at least one coordinate"));
        }
        if let Some((lo, hi)) = self.bounds.iter().find(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::invalid("bounds", format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(())
    }
}

struct Scored {
    genes: Vec<f64>,
    cost: f64,
}

fn score<F: FnMut(&[f64]) -> f64>(cost: &mut F, genes: Vec<f64>, evaluations: &mut usize) -> Scored {
    *evaluations += 1;
    let c = cost(&genes);
    Scored {
        genes,
        cost: if c.is_finite() { c } else { f64::INFINITY },
    }
}

fn tournament<'a>(pop: &'a [Scored], rng: &mut ChaCha8Rng) -> &'a Scored {
    (0..TOURNAMENT_SIZE)
        .map(|_| &pop[rng.random_range(0..pop.len())])
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .expect("tournament size is positive")
}

fn blend(a: &[f64], b: &[f64], bounds: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(bounds)
        .map(|((&x, &y), &(lo, hi))| {
            let (min, max) = (x.min(y), x.max(y));
            let spread = BLEND_ALPHA * (max - min);
            let v = if spread > 0.0 {
                rng.random_range((min - spread)..=(max + spread))
            } else {
                min
            };
            v.clamp(lo, hi)
        })
        .collect()
}

/// Minimizes `cost` (fitness is `-cost`) and returns the best individual ever seen.
pub fn ga_minimize<F>(mut cost: F, config: &GaConfig) -> Result<OptimizerReport>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.mutation_scale).map_err(|e| Error::invalid("mutation_scale", e.to_string()))?;
    let mut evaluations = 0;

    let mut population: Vec<Scored> = (0..config.population_size)
        .map(|_| {
            let genes = config.bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
            score(&mut cost, genes, &mut evaluations)
        })
        .collect();
    population.sort_by(|a, b| a.cost.total_cmp(&b.cost));

    let mut best_genes = population[0].genes.clone();
    let mut best_cost = population[0].cost;
    let mut history = vec![best_cost];

    for _ in 0..config.generations {
        let mut next: Vec<Scored> = population[..config.elitism_count]
            .iter()
            .map(|s| Scored {
                genes: s.genes.clone(),
                cost: s.cost,
            })
            .collect();
        while next.len() < config.population_size {
            let pa = tournament(&population, &mut rng);
            let pb = tournament(&population, &mut rng);
            let (mut ca, mut cb) = if rng.random::<f64>() < config.crossover_rate {
                (
                    blend(&pa.genes, &pb.genes, &config.bounds, &mut rng),
                    blend(&pa.genes, &pb.genes, &config.bounds, &mut rng),
                )
            } else {
                (pa.genes.clone(), pb.genes.clone())
            };
            for child in [&mut ca, &mut cb] {
                for (g, &(lo, hi)) in child.iter_mut().zip(&config.bounds) {
                    if rng.random::<f64>() < config.mutation_rate {
                        *g = (*g + noise.sample(&mut rng)).clamp(lo, hi);
                    }
                }
            }
            next.push(score(&mut cost, ca, &mut evaluations));
            if next.len() < config.population_size {
                next.push(score(&mut cost, cb, &mut evaluations));
            }
        }
        next.sort_by(|a, b| a.cost.total_cmp(&b.cost));
        population = next;
        if population[0].cost < best_cost {
            best_cost = population[0].cost;
            best_genes = population[0].genes.clone();
        }
        history.push(population[0].cost);
    }

    Ok(OptimizerReport {
        best_params: ParameterVector::new(best_genes)?,
        best_cost,
        cost_history: history,
        evaluations,
        iterations: config.generations,
        converged: best_cost.is_finite(),
        termination: Termination::Generations,
        seed: Some(config.seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn sphere_config(seed: u64, generations: usize) -> GaConfig {
        GaConfig {
            population_size: 50,
            generations,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_scale: 0.3,
            elitism_count: 2,
            bounds: vec![(-5.0, 5.0); 6],
            seed,
        }
    }

    #[test]
    fn sphere_six_dims_all_seeds() {
        for seed in 0..5 {
            let r = ga_minimize(sphere, &sphere_config(seed, 100)).unwrap();
            assert!(r.best_cost < 1e-3, "seed {seed}: {}", r.best_cost);
        }
    }

    #[test]
    fn random_search_with_same_budget_fails_sphere() {
        // same evaluation count as 50 x 101 generations
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let best = (0..50 * 101)
            .map(|_| sphere(&(0..6).map(|_| rng.random_range(-5.0..5.0)).collect::<Vec<_>>()))
            .fold(f64::INFINITY, f64::min);
        assert!(best > 1e-3, "{best}");
    }

    #[test]
    fn constant_cost() {
        let r = ga_minimize(|_: &[f64]| 4.25, &sphere_config(1, 10)).unwrap();
        assert_eq!(r.best_cost, 4.25);
        assert!(r.cost_history.iter().all(|&c| c == 4.25));
    }

    #[test]
    fn elitism_keeps_generation_best_monotone() {
        let rastrigin = |x: &[f64]| {
            10.0 * x.len() as f64
                + x.iter().map(|v| v * v - 10.0 * (std::f64::consts::TAU * v).cos()).sum::<f64>()
        };
        let r = ga_minimize(rastrigin, &sphere_config(9, 60)).unwrap();
        assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.best_cost, *r.cost_history.last().unwrap());
    }

    #[test]
    fn deterministic_given_seed() {
        let a = ga_minimize(sphere, &sphere_config(3, 20)).unwrap();
        let b = ga_minimize(sphere, &sphere_config(3, 20)).unwrap();
        assert_eq!(a, b);
        let c = ga_minimize(sphere, &sphere_config(4, 20)).unwrap();
        assert_ne!(a.best_params, c.best_params);
    }

    #[test]
    fn invalid_configs() {
        let mut c = sphere_config(0, 1);
        c.elitism_count = 50;
        assert!(ga_minimize(sphere, &c).is_err());
        let mut c = sphere_config(0, 1);
        c.mutation_rate = 1.5;
        assert!(ga_minimize(sphere, &c).is_err());
        let mut c = sphere_config(0, 1);
        c.bounds[0] = (1.0, 1.0);
        assert!(ga_minimize(sphere, &c).is_err());
    }
}
