//! The inner tournament genetic algorithm.
//!
//! Each generation every member produces one mutated offspring (from a
//! snapshot taken at the start of the generation). Offspring then challenge
//! a uniformly random slot of the live population in index order; the
//! offspring takes the slot when its internal fitness is at least the
//! occupant's. Replacements are visible to later tournaments of the same
//! generation.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{mean_and_std, probe_population, CorrelationProbe};
use crate::bitstring::DEFAULT_MUTATION_RATE;
use crate::domains::{sample_task, DomainKind, TaskInstance};
use crate::population::{Individual, NoveltyMode, Population, NOVELTY_NEIGHBOURS};
use crate::rng::{self, TAG_PROBE, TAG_TASK, TAG_TRIAL};
use crate::selection::SelectionPolicy;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: u32,
    pub mutation_rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub novelty_mode: NoveltyMode,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            generations: 2000,
            mutation_rate: DEFAULT_MUTATION_RATE,
            seed: 0,
            novelty_mode: NoveltyMode::Mean,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < NOVELTY_NEIGHBOURS + 1 {
            return Err(Error::Config(alloc::format!(
                "population size must be at least {}, got {}",
                NOVELTY_NEIGHBOURS + 1,
                self.population_size
            )));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::Config(alloc::format!("mutation rate {} outside [0, 1]", self.mutation_rate)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u32,
    pub mean_fitness: f64,
    pub mean_novelty: f64,
    pub max_fitness: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<CorrelationProbe>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: GaConfig,
    pub task: TaskInstance,
    /// Generation 0 (the random initial population) through `generations`.
    pub generations: Vec<GenerationStats>,
    pub final_population: Population,
}

impl RunTrace {
    pub fn final_stats(&self) -> &GenerationStats {
        self.generations.last().expect("a trace always holds generation 0")
    }

    pub fn final_fitness(&self) -> f64 {
        self.final_stats().mean_fitness
    }

    pub fn final_novelty(&self) -> f64 {
        self.final_stats().mean_novelty
    }
}

fn stats(pop: &Population, mode: NoveltyMode) -> Result<GenerationStats> {
    Ok(GenerationStats {
        generation: pop.generation,
        mean_fitness: pop.mean_fitness(),
        mean_novelty: pop.mean_novelty(mode)?,
        max_fitness: pop.max_fitness(),
        probe: None,
    })
}

/// Runs one GA from a random population seeded by `config.seed`.
///
/// Draw order on the run stream: the initial population, then per
/// generation all offspring mutations in slot order, then per tournament
/// the competitor index, the offspring's score draw and the competitor's
/// score draw. Correlation probes (fired after the listed generations) use a
/// separate stream, so requesting them never changes the trajectory.
pub fn run_ga(
    config: &GaConfig,
    task: TaskInstance,
    policy: &SelectionPolicy,
    probe_generations: &[u32],
) -> Result<RunTrace> {
    let mode = config.novelty_mode;
    let horizon = config.generations;
    let mut probe_rng = rng::stream(config.seed, &[TAG_PROBE]);
    let mut trace = Vec::with_capacity(horizon as usize + 1);
    let final_population = evolve(config, task, policy, |pop| {
        let mut s = stats(pop, mode)?;
        if probe_generations.contains(&pop.generation) {
            s.probe = Some(probe_population(policy, pop, horizon, mode, &mut probe_rng)?);
        }
        trace.push(s);
        Ok(())
    })?;
    Ok(RunTrace { config: *config, task, generations: trace, final_population })
}

/// Same trajectory as [`run_ga`] without per-generation statistics.
pub fn run_final(config: &GaConfig, task: TaskInstance, policy: &SelectionPolicy) -> Result<Population> {
    evolve(config, task, policy, |_| Ok(()))
}

fn evolve<F>(config: &GaConfig, task: TaskInstance, policy: &SelectionPolicy, mut observe: F) -> Result<Population>
where
    F: FnMut(&Population) -> Result<()>,
{
    config.validate()?;
    let mode = config.novelty_mode;
    let horizon = config.generations;
    let size = config.population_size;
    let mut rng = rng::seeded(config.seed);

    let mut pop = Population::random(size, task, &mut rng);
    observe(&pop)?;

    let mut offspring: Vec<Individual> = Vec::with_capacity(size);
    let mut replaced = vec![false; size];
    for _ in 0..horizon {
        offspring.clear();
        offspring.extend(
            pop.members
                .iter()
                .map(|parent| Individual::new(parent.genome.mutate(config.mutation_rate, &mut rng), &task)),
        );
        replaced.iter_mut().for_each(|r| *r = false);

        for child in &offspring {
            let slot = rng.random_range(0..size);
            let child_score = policy.internal_fitness(child, false, &pop, horizon, mode, &mut rng)?;
            let occupant = pop.members[slot];
            let occupant_score = policy.internal_fitness(&occupant, true, &pop, horizon, mode, &mut rng)?;
            if child_score >= occupant_score {
                pop.members[slot] = *child;
                replaced[slot] = true;
            }
        }

        for (member, &fresh) in pop.members.iter_mut().zip(&replaced) {
            if fresh {
                member.age = 0;
            } else {
                member.age += 1;
            }
        }
        pop.generation += 1;
        observe(&pop)?;
    }
    Ok(pop)
}

/// Seed and task of trial `trial` under `master_seed`. Both depend only on
/// `(master_seed, domain, trial)`, so different policies evaluated with the
/// same master seed share initial populations and tasks trial by trial.
pub fn trial_setup(domain: DomainKind, config: &GaConfig, master_seed: u64, trial: u64) -> (GaConfig, TaskInstance) {
    let run = GaConfig { seed: rng::derive_seed(master_seed, &[TAG_TRIAL, trial]), ..*config };
    let task = sample_task(domain, &mut rng::stream(master_seed, &[TAG_TASK, trial]));
    (run, task)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub trials: usize,
    pub fitness_mean: f64,
    pub fitness_std: f64,
    pub novelty_mean: f64,
    pub novelty_std: f64,
    /// True when only one trial ran and the standard deviations are 0 by
    /// convention rather than measured.
    pub single_sample: bool,
}

impl EvaluationSummary {
    pub fn from_traces(traces: &[RunTrace]) -> Result<Self> {
        let fitness: Vec<f64> = traces.iter().map(RunTrace::final_fitness).collect();
        let novelty: Vec<f64> = traces.iter().map(RunTrace::final_novelty).collect();
        let (fitness_mean, fitness_std) = mean_and_std(&fitness)?;
        let (novelty_mean, novelty_std) = mean_and_std(&novelty)?;
        Ok(EvaluationSummary {
            trials: traces.len(),
            fitness_mean,
            fitness_std,
            novelty_mean,
            novelty_std,
            single_sample: traces.len() == 1,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub summary: EvaluationSummary,
    pub traces: Vec<RunTrace>,
}

/// Runs `trials` independent GAs (fresh task, fresh population each) and
/// summarizes the final populations.
pub fn evaluate_policy(
    policy: &SelectionPolicy,
    domain: DomainKind,
    trials: usize,
    config: &GaConfig,
    master_seed: u64,
    probe_generations: &[u32],
) -> Result<Evaluation> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let traces = (0..trials as u64)
        .map(|t| {
            let (run, task) = trial_setup(domain, config, master_seed, t);
            run_ga(&run, task, policy, probe_generations)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation { summary: EvaluationSummary::from_traces(&traces)?, traces })
}
