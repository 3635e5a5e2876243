use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{OptimError, SearchOutcome, Tracer};
use crate::configuration::RisConfiguration;
use crate::ensemble::ScatteringMatrix;
use crate::models::{check_len, cost, mnt_channel, EvalCounter};
use crate::rng::{stream_rng, streams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub generations: usize,
    pub mutation_prob: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            generations: 10,
            mutation_prob: 1e-4,
        }
    }
}

/// Genetic algorithm on the exact MNT model with a fresh uniform population
/// of size `m`. Uses exactly `generations · m` evaluations.
pub fn genetic_algorithm(
    s: &ScatteringMatrix,
    m: usize,
    cfg: &GaConfig,
    seed: u64,
    counter: &EvalCounter,
) -> Result<SearchOutcome, OptimError> {
    let mut rng = stream_rng(seed, streams::GA);
    let population = (0..m)
        .map(|_| RisConfiguration::random(s.n_ris(), &mut rng))
        .collect();
    evolve(s, population, cfg, &mut rng, counter, &mut |_, _| {})
}

/// Genetic algorithm from a given population. `observer` sees every
/// evaluated generation.
pub fn genetic_algorithm_from(
    s: &ScatteringMatrix,
    population: Vec<RisConfiguration>,
    cfg: &GaConfig,
    seed: u64,
    counter: &EvalCounter,
    observer: &mut dyn FnMut(usize, &[RisConfiguration]),
) -> Result<SearchOutcome, OptimError> {
    let mut rng = stream_rng(seed, streams::GA);
    evolve(s, population, cfg, &mut rng, counter, observer)
}

/// Truncation selection of the top half, uniform parent draws with
/// replacement, one-point crossover and per-gene mutation, with full
/// generational replacement. The best individual ever evaluated is returned.
fn evolve(
    s: &ScatteringMatrix,
    mut population: Vec<RisConfiguration>,
    cfg: &GaConfig,
    rng: &mut ChaCha8Rng,
    counter: &EvalCounter,
    observer: &mut dyn FnMut(usize, &[RisConfiguration]),
) -> Result<SearchOutcome, OptimError> {
    let m = population.len();
    if m < 2 || m % 2 != 0 {
        return Err(OptimError::InvalidPopulation(m));
    }
    if cfg.generations == 0 {
        return Err(OptimError::InvalidSchedule("GA needs at least one generation".into()));
    }
    if !(0.0..=1.0).contains(&cfg.mutation_prob) {
        return Err(OptimError::InvalidSchedule(format!(
            "mutation probability {} outside [0, 1]",
            cfg.mutation_prob
        )));
    }
    let n = s.n_ris();
    for c in &population {
        check_len(n, c.len())?;
    }
    let start = counter.get();
    let mut tracer = Tracer::new();
    let mut best: Option<(RisConfiguration, f64)> = None;

    for generation in 0..cfg.generations {
        observer(generation, &population);
        let mut costs = Vec::with_capacity(m);
        for c in &population {
            let value = cost(&mnt_channel(s, c.loads(), counter)?)?;
            tracer.record(value);
            if best.as_ref().is_none_or(|(_, b)| value < *b) {
                best = Some((c.clone(), value));
            }
            costs.push(value);
        }
        if generation + 1 == cfg.generations {
            break;
        }
        // lowest cost first; stable, so ties keep population order
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
        let pool = &order[..m / 2];
        let mut offspring = Vec::with_capacity(m);
        for _ in 0..m {
            let p1 = &population[pool[rng.random_range(0..pool.len())]];
            let p2 = &population[pool[rng.random_range(0..pool.len())]];
            let cut = if n > 1 { rng.random_range(1..n) } else { n };
            let mut genes: Vec<i8> = p1.signs()[..cut].to_vec();
            genes.extend_from_slice(&p2.signs()[cut..]);
            for g in genes.iter_mut() {
                if rng.random_bool(cfg.mutation_prob) {
                    *g = -*g;
                }
            }
            offspring.push(RisConfiguration::from_signs(genes).expect("binary genes"));
        }
        population = offspring;
    }

    let (config, best_cost) = best.expect("at least one generation evaluated");
    Ok(SearchOutcome {
        config,
        cost: best_cost,
        evaluations: counter.get() - start,
        // parents and offspring coexist while breeding
        peak_stored_configs: 2 * m as u64,
        trace: tracer.into_points(),
        converged: true,
    })
}
