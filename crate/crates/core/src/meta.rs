//! Outer evolution-strategies loop over selection-network parameters.
//!
//! Each iteration draws `copies` Gaussian perturbations of the current
//! parameters, scores every copy by the mean underlying fitness of the final
//! population of one full GA run on a freshly sampled task, and moves the
//! parameters to the rank-weighted average of the copies.
//!
//! All randomness of copy `c` at iteration `i` comes from streams derived
//! from `(master_seed, i, c)`, so copies can be evaluated in any order or in
//! parallel and [`MetaState::advance`] sees the same inputs either way.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::domains::{sample_task, DomainKind};
use crate::engine::{run_final, trial_setup, GaConfig};
use crate::rng::{self, TAG_COPY, TAG_INIT, TAG_PERTURB, TAG_TASK};
use crate::selection::{perturb, PolicyParams, SelectionPolicy, DEFAULT_HIDDEN, INIT_STD_DEV};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum UpdateRule {
    /// New parameters are the rank-weighted average of the copies.
    WeightedAverage,
    /// `theta += lr / (C sigma) * sum_c u_c eps_c` with centered rank
    /// utilities `u_c` in `[-0.5, 0.5]`.
    Gradient { learning_rate: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StallMetric {
    Best,
    Mean,
}

/// Stop once the moving average of the chosen per-iteration score has not
/// improved by more than `min_delta` for `patience` iterations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub window: u32,
    pub patience: u32,
    pub min_delta: f64,
    pub metric: StallMetric,
}

impl Default for EarlyStop {
    fn default() -> Self {
        EarlyStop { window: 100, patience: 200, min_delta: 0.05, metric: StallMetric::Mean }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaConfig {
    pub iterations: u32,
    pub copies: usize,
    pub sigma: f64,
    /// Inner GA settings. The seed field is ignored: every copy gets its own.
    pub ga: GaConfig,
    pub domain: DomainKind,
    pub master_seed: u64,
    pub hidden: Vec<usize>,
    pub update: UpdateRule,
    pub early_stop: Option<EarlyStop>,
    /// Evaluate the unperturbed parameters every this many iterations.
    pub eval_every: Option<u32>,
    pub eval_trials: usize,
}

impl MetaConfig {
    pub const DESK_ITERATIONS: u32 = 1500;

    pub fn new(domain: DomainKind, master_seed: u64) -> Self {
        MetaConfig {
            iterations: Self::DESK_ITERATIONS,
            copies: 20,
            sigma: 0.1,
            ga: GaConfig::default(),
            domain,
            master_seed,
            hidden: DEFAULT_HIDDEN.to_vec(),
            update: UpdateRule::WeightedAverage,
            early_stop: Some(EarlyStop::default()),
            eval_every: None,
            eval_trials: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.copies < 2 {
            return Err(Error::Config(alloc::format!("need at least 2 copies, got {}", self.copies)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(alloc::format!("sigma must be a finite non-negative number, got {}", self.sigma)));
        }
        if let UpdateRule::Gradient { .. } = self.update {
            if self.sigma == 0.0 {
                return Err(Error::Config("gradient updates need sigma > 0".into()));
            }
        }
        if self.eval_every == Some(0) {
            return Err(Error::Config("eval_every must be positive".into()));
        }
        self.ga.validate()
    }

    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        PolicyParams::shapes_for(&self.hidden)
    }
}

/// Normalized rank weights aligned with `scores`: the worst copy gets raw
/// weight 0, the best `C - 1`; tied copies share the mean of their
/// positions. Weights sum to 1.
pub fn rank_weights(scores: &[f64]) -> Result<Vec<f64>> {
    let c = scores.len();
    if c < 2 {
        return Err(Error::TooFewSamples { needed: 2, found: c });
    }
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut raw = alloc::vec![0.0; c];
    let mut start = 0;
    while start < c {
        let mut end = start + 1;
        while end < c && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let shared = (start + end - 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            raw[idx] = shared;
        }
        start = end;
    }
    let total = (c * (c - 1)) as f64 / 2.0;
    Ok(raw.into_iter().map(|r| r / total).collect())
}

/// Combines scored copies into the next parameters.
pub fn update(theta: &PolicyParams, copies: &[PolicyParams], scores: &[f64], config: &MetaConfig) -> Result<PolicyParams> {
    if copies.len() != scores.len() {
        return Err(Error::LengthMismatch { left: copies.len(), right: scores.len() });
    }
    if let Some(bad) = copies.iter().find(|p| p.layer_shapes() != theta.layer_shapes()) {
        return Err(Error::Config(alloc::format!("copy shapes {:?} differ from {:?}", bad.layer_shapes(), theta.layer_shapes())));
    }
    let weights = rank_weights(scores)?;
    let n = theta.len();
    let values = match config.update {
        UpdateRule::WeightedAverage => {
            let mut acc = alloc::vec![0.0; n];
            for (copy, &w) in copies.iter().zip(&weights) {
                for (a, &v) in acc.iter_mut().zip(copy.values()) {
                    *a += w * v;
                }
            }
            acc
        }
        UpdateRule::Gradient { learning_rate } => {
            let c = copies.len() as f64;
            // w * (C(C-1)/2) / (C-1) - 0.5 = rank / (C-1) - 0.5
            let utilities: Vec<f64> = weights.iter().map(|w| w * c / 2.0 - 0.5).collect();
            let scale = learning_rate / (c * config.sigma * config.sigma);
            let mut acc = theta.values().to_vec();
            for (copy, &u) in copies.iter().zip(&utilities) {
                for ((a, &v), &t) in acc.iter_mut().zip(copy.values()).zip(theta.values()) {
                    *a += scale * u * (v - t);
                }
            }
            acc
        }
    };
    theta.with_values(values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaRecord {
    pub iteration: u32,
    pub scores: Vec<f64>,
    pub score_mean: f64,
    pub score_best: f64,
    pub score_worst: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_score: Option<f64>,
}

impl MetaRecord {
    pub fn new(iteration: u32, scores: Vec<f64>) -> Self {
        let score_mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let score_best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let score_worst = scores.iter().copied().fold(f64::INFINITY, f64::min);
        MetaRecord { iteration, scores, score_mean, score_best, score_worst, eval_score: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetaTrace {
    pub records: Vec<MetaRecord>,
    pub stopped_early: bool,
}

impl MetaTrace {
    fn moving_average(&self, end: usize, window: usize, metric: StallMetric) -> f64 {
        let slice = &self.records[end - window..end];
        let value = |r: &MetaRecord| match metric {
            StallMetric::Best => r.score_best,
            StallMetric::Mean => r.score_mean,
        };
        slice.iter().map(value).sum::<f64>() / window as f64
    }

    /// Whether the moving average has stalled for `patience` iterations.
    pub fn stalled(&self, rule: &EarlyStop) -> bool {
        let window = rule.window.max(1) as usize;
        let n = self.records.len();
        if n < window + rule.patience as usize {
            return false;
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_at = window;
        for end in window..=n {
            let ma = self.moving_average(end, window, rule.metric);
            if ma > best + rule.min_delta {
                best = ma;
                best_at = end;
            }
        }
        n - best_at >= rule.patience as usize
    }
}

/// Parameters of copy `copy` at `iteration`.
pub fn perturbed_copy(theta: &PolicyParams, config: &MetaConfig, iteration: u32, copy: usize) -> PolicyParams {
    let mut stream = rng::stream(config.master_seed, &[TAG_PERTURB, iteration as u64, copy as u64]);
    perturb(theta, config.sigma, &mut stream)
}

/// Final-population mean fitness of one GA run driven by `params`, on a
/// task and population private to `(iteration, copy)`.
pub fn evaluate_copy(params: &PolicyParams, config: &MetaConfig, iteration: u32, copy: usize) -> Result<f64> {
    let path = [TAG_COPY, iteration as u64, copy as u64];
    let ga = GaConfig { seed: rng::derive_seed(config.master_seed, &path), ..config.ga };
    let task = sample_task(config.domain, &mut rng::stream(config.master_seed, &[TAG_TASK, TAG_COPY, iteration as u64, copy as u64]));
    Ok(run_final(&ga, task, &SelectionPolicy::Network(params.clone()))?.mean_fitness())
}

/// Mean final fitness of `params` over `trials` runs used for the periodic
/// progress evaluation. Trials are keyed by the iteration so each checkpoint
/// sees fresh tasks.
pub fn evaluate_params(params: &PolicyParams, config: &MetaConfig, iteration: u32, trials: usize) -> Result<f64> {
    let policy = SelectionPolicy::Network(params.clone());
    let seed = rng::derive_seed(config.master_seed, &[TAG_INIT, iteration as u64]);
    let mut total = 0.0;
    for t in 0..trials as u64 {
        let (ga, task) = trial_setup(config.domain, &config.ga, seed, t);
        total += run_final(&ga, task, &policy)?.mean_fitness();
    }
    Ok(total / trials.max(1) as f64)
}

pub fn initial_params(config: &MetaConfig) -> Result<PolicyParams> {
    PolicyParams::random(config.layer_shapes(), INIT_STD_DEV, &mut rng::stream(config.master_seed, &[TAG_INIT]))
}

/// Resumable training state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaState {
    pub theta: PolicyParams,
    pub trace: MetaTrace,
}

impl MetaState {
    pub fn new(config: &MetaConfig) -> Result<Self> {
        config.validate()?;
        Ok(MetaState { theta: initial_params(config)?, trace: MetaTrace::default() })
    }

    pub fn next_iteration(&self) -> u32 {
        self.trace.records.len() as u32
    }

    pub fn is_finished(&self, config: &MetaConfig) -> bool {
        self.trace.stopped_early || self.next_iteration() >= config.iterations
    }

    pub fn copies(&self, config: &MetaConfig) -> Vec<PolicyParams> {
        let iteration = self.next_iteration();
        (0..config.copies).map(|c| perturbed_copy(&self.theta, config, iteration, c)).collect()
    }

    /// Applies the update for the current iteration given every copy's score.
    pub fn advance(&mut self, config: &MetaConfig, copies: &[PolicyParams], scores: Vec<f64>) -> Result<&MetaRecord> {
        let iteration = self.next_iteration();
        self.theta = update(&self.theta, copies, &scores, config)?;
        let mut record = MetaRecord::new(iteration, scores);
        if let Some(every) = config.eval_every {
            if (iteration + 1).is_multiple_of(every) {
                record.eval_score = Some(evaluate_params(&self.theta, config, iteration, config.eval_trials)?);
            }
        }
        self.trace.records.push(record);
        if let Some(rule) = &config.early_stop {
            if self.next_iteration() < config.iterations && self.trace.stalled(rule) {
                self.trace.stopped_early = true;
            }
        }
        Ok(self.trace.records.last().expect("just pushed"))
    }
}

/// One outer iteration evaluated sequentially.
pub fn meta_step(state: &mut MetaState, config: &MetaConfig) -> Result<MetaRecord> {
    let iteration = state.next_iteration();
    let copies = state.copies(config);
    let scores = copies
        .iter()
        .enumerate()
        .map(|(c, p)| evaluate_copy(p, config, iteration, c))
        .collect::<Result<Vec<_>>>()?;
    state.advance(config, &copies, scores).cloned()
}

/// Full sequential training run.
pub fn train(config: &MetaConfig) -> Result<(PolicyParams, MetaTrace)> {
    let mut state = MetaState::new(config)?;
    while !state.is_finished(config) {
        meta_step(&mut state, config)?;
    }
    Ok((state.theta, state.trace))
}
