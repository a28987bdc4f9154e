//! Correlation probes and trace statistics.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::RunTrace;
use crate::population::{extract_features, NoveltyMode, Population};
use crate::selection::SelectionPolicy;
use crate::{Error, Result};

/// Sample Pearson correlation of `x` and `y`.
///
/// `Ok(None)` when either input is constant (all elements equal), since the
/// correlation is undefined there.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, found: x.len() });
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Ok(None);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let denom = libm::sqrt(sxx) * libm::sqrt(syy);
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / denom).clamp(-1.0, 1.0)))
}

/// Mean and sample standard deviation (`n - 1`); the deviation of a single
/// value is reported as 0.
pub fn mean_and_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, found: 0 });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, libm::sqrt(var)))
}

/// Correlation between each per-individual metric and the internal fitness
/// the policy assigns. `None` marks an undefined (constant) correlation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProbe {
    pub generation: u32,
    pub fitness: Option<f64>,
    pub rank: Option<f64>,
    pub age: Option<f64>,
    pub novelty: Option<f64>,
    pub noise: Option<f64>,
}

impl CorrelationProbe {
    pub fn values(&self) -> [Option<f64>; 5] {
        [self.fitness, self.rank, self.age, self.novelty, self.noise]
    }
}

/// Scores every member of `pop` and correlates its features with the score.
///
/// For a network policy the score is computed from the very feature vector
/// being correlated (same noise draw). Other policies draw their own score.
pub fn probe_population<R: Rng + ?Sized>(
    policy: &SelectionPolicy,
    pop: &Population,
    total_generations: u32,
    mode: NoveltyMode,
    rng: &mut R,
) -> Result<CorrelationProbe> {
    let n = pop.members.len();
    let mut columns: [Vec<f64>; 5] = core::array::from_fn(|_| Vec::with_capacity(n));
    let mut scores = Vec::with_capacity(n);
    for member in &pop.members {
        let fv = extract_features(member, true, pop, total_generations, mode, rng)?;
        let score = match policy {
            SelectionPolicy::Network(params) => params.score(&fv),
            other => other.internal_fitness(member, true, pop, total_generations, mode, rng)?,
        };
        let metrics = [fv.fitness_norm, fv.rank_norm, fv.age_norm, fv.novelty_norm, fv.noise];
        for (col, v) in columns.iter_mut().zip(metrics) {
            col.push(v);
        }
        scores.push(score);
    }
    let [fitness, rank, age, novelty, noise] = columns;
    Ok(CorrelationProbe {
        generation: pop.generation,
        fitness: pearson(&fitness, &scores)?,
        rank: pearson(&rank, &scores)?,
        age: pearson(&age, &scores)?,
        novelty: pearson(&novelty, &scores)?,
        noise: pearson(&noise, &scores)?,
    })
}

/// Averaged probe for one generation, with the number of trials in which
/// each correlation was defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedProbe {
    pub generation: u32,
    pub fitness: Option<f64>,
    pub rank: Option<f64>,
    pub age: Option<f64>,
    pub novelty: Option<f64>,
    pub noise: Option<f64>,
    pub defined_counts: [usize; 5],
}

/// Averages the probes recorded at each generation across traces. Each
/// metric averages over the trials where it was defined; it stays undefined
/// if it was undefined in every trial.
pub fn average_probes(traces: &[RunTrace]) -> Vec<AveragedProbe> {
    let mut generations: Vec<u32> = traces
        .iter()
        .flat_map(|t| t.generations.iter().filter(|g| g.probe.is_some()).map(|g| g.generation))
        .collect();
    generations.sort_unstable();
    generations.dedup();

    generations
        .into_iter()
        .map(|generation| {
            let mut sums = [0.0; 5];
            let mut counts = [0usize; 5];
            for probe in traces
                .iter()
                .filter_map(|t| t.generations.get(generation as usize))
                .filter_map(|g| g.probe.as_ref())
            {
                for (k, v) in probe.values().into_iter().enumerate() {
                    if let Some(v) = v {
                        sums[k] += v;
                        counts[k] += 1;
                    }
                }
            }
            let avg = |k: usize| (counts[k] > 0).then(|| sums[k] / counts[k] as f64);
            AveragedProbe {
                generation,
                fitness: avg(0),
                rank: avg(1),
                age: avg(2),
                novelty: avg(3),
                noise: avg(4),
                defined_counts: counts,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub generation: u32,
    pub fitness_mean: f64,
    pub fitness_std: f64,
    pub novelty_mean: f64,
    pub novelty_std: f64,
}

/// Element-wise mean and sample standard deviation of the per-generation
/// mean fitness and mean novelty across traces.
pub fn aggregate_traces(traces: &[RunTrace]) -> Result<Vec<AggregatePoint>> {
    let first = traces.first().ok_or(Error::TooFewSamples { needed: 1, found: 0 })?;
    let len = first.generations.len();
    if let Some(t) = traces.iter().find(|t| t.generations.len() != len) {
        return Err(Error::LengthMismatch { left: len, right: t.generations.len() });
    }
    let mut fitness = Vec::with_capacity(traces.len());
    let mut novelty = Vec::with_capacity(traces.len());
    (0..len)
        .map(|g| {
            fitness.clear();
            novelty.clear();
            fitness.extend(traces.iter().map(|t| t.generations[g].mean_fitness));
            novelty.extend(traces.iter().map(|t| t.generations[g].mean_novelty));
            let (fitness_mean, fitness_std) = mean_and_std(&fitness)?;
            let (novelty_mean, novelty_std) = mean_and_std(&novelty)?;
            Ok(AggregatePoint {
                generation: first.generations[g].generation,
                fitness_mean,
                fitness_std,
                novelty_mean,
                novelty_std,
            })
        })
        .collect()
}
