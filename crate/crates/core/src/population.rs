//! Population bookkeeping and the six selection-network input features.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitstring::{Genome, GENOME_BITS};
use crate::domains::{TaskInstance, MAX_FITNESS};
use crate::{Error, Result};

/// Number of nearest neighbours that define novelty.
pub const NOVELTY_NEIGHBOURS: usize = 5;

/// How the distances to the nearest neighbours are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoveltyMode {
    /// Mean distance, in `[0, 16]`.
    #[default]
    Mean,
    /// Raw sum of distances, in `[0, 80]`.
    Sum,
}

impl NoveltyMode {
    pub fn max_value(self) -> f64 {
        match self {
            NoveltyMode::Mean => GENOME_BITS as f64,
            NoveltyMode::Sum => (GENOME_BITS * NOVELTY_NEIGHBOURS) as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Genome,
    pub age: u32,
    pub fitness: f64,
}

impl Individual {
    pub fn new(genome: Genome, task: &TaskInstance) -> Self {
        Individual { genome, age: 0, fitness: task.fitness(genome) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: u32,
    pub task: TaskInstance,
}

impl Population {
    /// `size` random individuals, drawn one genome after another.
    pub fn random<R: Rng + ?Sized>(size: usize, task: TaskInstance, rng: &mut R) -> Self {
        let members = (0..size).map(|_| Individual::new(Genome::random(rng), &task)).collect();
        Population { members, generation: 0, task }
    }

    pub fn from_genomes(genomes: &[Genome], task: TaskInstance) -> Self {
        let members = genomes.iter().map(|&g| Individual::new(g, &task)).collect();
        Population { members, generation: 0, task }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn mean_fitness(&self) -> f64 {
        self.members.iter().map(|m| m.fitness).sum::<f64>() / self.members.len() as f64
    }

    pub fn max_fitness(&self) -> f64 {
        self.members.iter().map(|m| m.fitness).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mean over members of each member's novelty within the population.
    pub fn mean_novelty(&self, mode: NoveltyMode) -> Result<f64> {
        let mut total = 0.0;
        for m in &self.members {
            total += novelty(m.genome, &self.members, true, mode)?;
        }
        Ok(total / self.members.len() as f64)
    }
}

/// Distance from `genome` to its nearest neighbours among `members`.
///
/// With `exclude_self`, one member at distance zero (the individual itself)
/// is skipped. Archiveless: only the current members are considered.
pub fn novelty(genome: Genome, members: &[Individual], exclude_self: bool, mode: NoveltyMode) -> Result<f64> {
    let mut histogram = [0usize; GENOME_BITS + 1];
    for m in members {
        histogram[genome.hamming(m.genome) as usize] += 1;
    }
    if exclude_self && histogram[0] > 0 {
        histogram[0] -= 1;
    }
    let available: usize = histogram.iter().sum();
    if available < NOVELTY_NEIGHBOURS {
        return Err(Error::UndersizedPopulation { needed: NOVELTY_NEIGHBOURS, available });
    }
    let mut remaining = NOVELTY_NEIGHBOURS;
    let mut sum = 0usize;
    for (distance, &count) in histogram.iter().enumerate() {
        let take = count.min(remaining);
        sum += take * distance;
        remaining -= take;
        if remaining == 0 {
            break;
        }
    }
    Ok(match mode {
        NoveltyMode::Mean => sum as f64 / NOVELTY_NEIGHBOURS as f64,
        NoveltyMode::Sum => sum as f64,
    })
}

/// Fraction of members with strictly lower fitness, scaled by `P - 1`.
/// Ties share the lower rank.
pub fn rank_of(value: f64, members: &[Individual]) -> f64 {
    if members.len() < 2 {
        return 0.0;
    }
    let lower = members.iter().filter(|m| m.fitness < value).count();
    lower as f64 / (members.len() - 1) as f64
}

/// Normalized network inputs for one individual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub fitness_norm: f64,
    pub rank_norm: f64,
    pub age_norm: f64,
    pub novelty_norm: f64,
    pub noise: f64,
    pub generation_norm: f64,
}

impl FeatureVector {
    pub const LEN: usize = 6;

    pub fn to_array(&self) -> [f64; Self::LEN] {
        [
            self.fitness_norm,
            self.rank_norm,
            self.age_norm,
            self.novelty_norm,
            self.noise,
            self.generation_norm,
        ]
    }
}

/// Features of `ind` against `pop`.
///
/// `member` is true when `ind` currently occupies a slot of `pop` (its own
/// entry is then skipped for novelty). Offspring not yet inserted pass
/// `false` and should carry age 0. One uniform draw is taken for `noise`.
pub fn extract_features<R: Rng + ?Sized>(
    ind: &Individual,
    member: bool,
    pop: &Population,
    total_generations: u32,
    mode: NoveltyMode,
    rng: &mut R,
) -> Result<FeatureVector> {
    let horizon = total_generations.max(1) as f64;
    let novelty = novelty(ind.genome, &pop.members, member, mode)?;
    Ok(FeatureVector {
        fitness_norm: ind.fitness / MAX_FITNESS,
        rank_norm: rank_of(ind.fitness, &pop.members),
        age_norm: (ind.age as f64 / horizon).min(1.0),
        novelty_norm: novelty / mode.max_value(),
        noise: rng.random::<f64>(),
        generation_norm: (pop.generation as f64 / horizon).min(1.0),
    })
}
