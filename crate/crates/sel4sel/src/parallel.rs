//! Order-preserving parallel drivers. Results never depend on the worker
//! count: every task owns its random streams and results are collected in
//! index order.

use rayon::prelude::*;
use sel4sel_core::engine::trial_setup;
use sel4sel_core::meta::{evaluate_copy, MetaConfig, MetaRecord, MetaState};
use sel4sel_core::{run_ga, DomainKind, GaConfig, RunTrace, SelectionPolicy};

use crate::error::Result;

pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    Ok(builder.build()?)
}

/// Runs trials `0..trials` of `policy` with paired per-trial seeds.
pub fn run_trials(
    pool: &rayon::ThreadPool,
    policy: &SelectionPolicy,
    domain: DomainKind,
    trials: usize,
    config: &GaConfig,
    master_seed: u64,
    probe_generations: &[u32],
) -> Result<Vec<RunTrace>> {
    pool.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let (run, task) = trial_setup(domain, config, master_seed, t);
                Ok(run_ga(&run, task, policy, probe_generations)?)
            })
            .collect()
    })
}

/// One outer iteration with the copies evaluated in parallel.
pub fn meta_step(pool: &rayon::ThreadPool, state: &mut MetaState, config: &MetaConfig) -> Result<MetaRecord> {
    let iteration = state.next_iteration();
    let copies = state.copies(config);
    let scores = pool.install(|| {
        copies
            .par_iter()
            .enumerate()
            .map(|(c, p)| evaluate_copy(p, config, iteration, c))
            .collect::<sel4sel_core::Result<Vec<f64>>>()
    })?;
    Ok(state.advance(config, &copies, scores)?.clone())
}
