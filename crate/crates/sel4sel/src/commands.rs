//! The `train`, `compare` and `analyze` commands as library calls.
//!
//! Every command writes a `manifest.json` style record of its resolved
//! configuration next to its outputs. Manifests leave out the worker count,
//! which never affects results.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sel4sel_core::analysis::{aggregate_traces, average_probes, AveragedProbe};
use sel4sel_core::engine::EvaluationSummary;
use sel4sel_core::meta::{MetaConfig, MetaState, MetaTrace};
use sel4sel_core::{DomainKind, GaConfig, PolicyParams, RunTrace};

use crate::checkpoint::{Checkpoint, Metadata};
use crate::error::{io_err, HarnessError, Result};
use crate::output::{aggregate_csv, correlation_csv, json_bytes, meta_csv, trace_csv, write_file};
use crate::parallel;
use crate::policy::PolicySpec;

/// Generations probed when none are requested.
pub const DEFAULT_PROBE_GENERATIONS: [u32; 5] = [1, 100, 500, 1000, 2000];

/// `<dir>/<stem><suffix>` for a checkpoint at `<dir>/<stem>.<ext>`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

#[derive(Clone, Debug)]
pub struct TrainArgs {
    pub config: MetaConfig,
    pub out: PathBuf,
    pub threads: Option<usize>,
    /// Save the checkpoint, meta trace and resume state this often.
    pub checkpoint_every: Option<u32>,
    /// Continue from `<stem>.state.json` if present. The saved run may have
    /// used a smaller iteration budget.
    pub resume: bool,
}

#[derive(Serialize, Deserialize)]
struct SavedState {
    config: MetaConfig,
    state: MetaState,
}

#[derive(Serialize)]
struct TrainManifest<'a> {
    command: &'static str,
    config: &'a MetaConfig,
    checkpoint: String,
    meta_trace: String,
    state: String,
    checkpoint_every: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub trace: MetaTrace,
}

pub fn train(args: &TrainArgs) -> Result<TrainOutcome> {
    let config = &args.config;
    config.validate()?;
    if args.checkpoint_every == Some(0) {
        return Err(HarnessError::Usage("--checkpoint-every must be positive".into()));
    }
    let meta_path = sidecar(&args.out, ".meta.csv");
    let state_path = sidecar(&args.out, ".state.json");
    let manifest = TrainManifest {
        command: "train",
        config,
        checkpoint: args.out.display().to_string(),
        meta_trace: meta_path.display().to_string(),
        state: state_path.display().to_string(),
        checkpoint_every: args.checkpoint_every,
    };
    write_file(&sidecar(&args.out, ".manifest.json"), &json_bytes(&manifest)?)?;

    let mut state = if args.resume && state_path.exists() {
        let text = std::fs::read_to_string(&state_path).map_err(io_err(&state_path))?;
        let saved: SavedState = serde_json::from_str(&text).map_err(|e| HarnessError::Checkpoint {
            path: state_path.clone(),
            message: e.to_string(),
        })?;
        // Only the iteration budget may change between sessions.
        if (MetaConfig { iterations: config.iterations, ..saved.config }) != *config {
            return Err(HarnessError::Checkpoint {
                path: state_path,
                message: "saved training configuration differs from the requested one".into(),
            });
        }
        log::info!("resuming at iteration {}", saved.state.next_iteration());
        saved.state
    } else {
        MetaState::new(config)?
    };

    let pool = parallel::pool(args.threads)?;
    let save = |state: &MetaState| -> Result<Checkpoint> {
        let checkpoint = Checkpoint {
            params: state.theta.clone(),
            metadata: Metadata::from_config(config, state.next_iteration(), state.trace.stopped_early),
        };
        checkpoint.save(&args.out)?;
        write_file(&meta_path, &meta_csv(&state.trace.records)?)?;
        write_file(&state_path, &json_bytes(&SavedState { config: config.clone(), state: state.clone() })?)?;
        Ok(checkpoint)
    };

    while !state.is_finished(config) {
        let record = parallel::meta_step(&pool, &mut state, config)?;
        log::info!(
            "iteration {} mean {:.3} best {:.3} worst {:.3}{}",
            record.iteration,
            record.score_mean,
            record.score_best,
            record.score_worst,
            record.eval_score.map(|e| format!(" eval {e:.3}")).unwrap_or_default()
        );
        if let Some(every) = args.checkpoint_every {
            if state.next_iteration() % every == 0 && !state.is_finished(config) {
                save(&state)?;
            }
        }
    }
    if state.trace.stopped_early {
        log::info!("stopped early after {} iterations", state.next_iteration());
    }
    let checkpoint = save(&state)?;
    Ok(TrainOutcome { checkpoint, trace: state.trace })
}

#[derive(Clone, Debug)]
pub struct CompareArgs {
    pub domain: DomainKind,
    pub policies: Vec<PolicySpec>,
    pub trials: usize,
    pub ga: GaConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    pub domain: DomainKind,
    pub trials: usize,
    pub fitness_mean: f64,
    pub fitness_std: f64,
    pub novelty_mean: f64,
    pub novelty_std: f64,
    /// Only one trial ran: the standard deviations are 0 by convention.
    pub single_sample: bool,
    pub seed: u64,
    pub pop_size: usize,
    pub generations: u32,
    pub mutation_rate: f64,
}

#[derive(Clone, Debug)]
pub struct PolicyResult {
    pub spec: PolicySpec,
    pub summary: SummaryRow,
    pub traces: Vec<RunTrace>,
}

#[derive(Serialize)]
struct CompareManifest<'a> {
    command: &'static str,
    domain: DomainKind,
    policies: Vec<String>,
    trials: usize,
    ga: &'a GaConfig,
    seed: u64,
    files: Vec<String>,
}

/// Evaluates every policy on the same paired trials and writes
/// `summary.json`, `summary.csv`, `<policy>_aggregate.csv` and per-trial
/// traces under `traces/<policy>/`.
pub fn compare(args: &CompareArgs) -> Result<Vec<PolicyResult>> {
    if args.policies.is_empty() {
        return Err(HarnessError::Usage("at least one policy is required".into()));
    }
    if args.trials == 0 {
        return Err(HarnessError::Usage("--trials must be at least 1".into()));
    }
    args.ga.validate()?;
    let mut slugs = BTreeSet::new();
    for spec in &args.policies {
        if !slugs.insert(spec.slug()) {
            return Err(HarnessError::Usage(format!("policy `{}` given twice", spec.slug())));
        }
    }
    let resolved = args.policies.iter().map(PolicySpec::resolve).collect::<Result<Vec<_>>>()?;
    let pool = parallel::pool(args.threads)?;

    let mut files = vec!["summary.json".to_string(), "summary.csv".to_string()];
    let mut results = Vec::with_capacity(resolved.len());
    for (spec, policy) in args.policies.iter().zip(&resolved) {
        log::info!("evaluating {} over {} trials", spec.name(), args.trials);
        let traces = parallel::run_trials(&pool, policy, args.domain, args.trials, &args.ga, args.seed, &[])?;
        let s = EvaluationSummary::from_traces(&traces)?;
        let summary = SummaryRow {
            policy: spec.name(),
            domain: args.domain,
            trials: s.trials,
            fitness_mean: s.fitness_mean,
            fitness_std: s.fitness_std,
            novelty_mean: s.novelty_mean,
            novelty_std: s.novelty_std,
            single_sample: s.single_sample,
            seed: args.seed,
            pop_size: args.ga.population_size,
            generations: args.ga.generations,
            mutation_rate: args.ga.mutation_rate,
        };

        let slug = spec.slug();
        let aggregate = format!("{slug}_aggregate.csv");
        write_file(&args.out.join(&aggregate), &aggregate_csv(&aggregate_traces(&traces)?)?)?;
        files.push(aggregate);
        for (t, trace) in traces.iter().enumerate() {
            let name = format!("traces/{slug}/trial_{t:03}.csv");
            write_file(&args.out.join(&name), &trace_csv(&trace.generations)?)?;
            files.push(name);
        }
        results.push(PolicyResult { spec: spec.clone(), summary, traces });
    }

    let rows: Vec<&SummaryRow> = results.iter().map(|r| &r.summary).collect();
    write_file(&args.out.join("summary.json"), &json_bytes(&rows)?)?;
    write_file(&args.out.join("summary.csv"), &summary_csv(&rows)?)?;
    let manifest = CompareManifest {
        command: "compare",
        domain: args.domain,
        policies: args.policies.iter().map(PolicySpec::name).collect(),
        trials: args.trials,
        ga: &args.ga,
        seed: args.seed,
        files,
    };
    write_file(&args.out.join("manifest.json"), &json_bytes(&manifest)?)?;
    Ok(results)
}

fn summary_csv(rows: &[&SummaryRow]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row<'a> {
        policy: &'a str,
        fitness_mean: f64,
        fitness_std: f64,
        novelty_mean: f64,
        novelty_std: f64,
    }
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        writer.serialize(Row {
            policy: &r.policy,
            fitness_mean: r.fitness_mean,
            fitness_std: r.fitness_std,
            novelty_mean: r.novelty_mean,
            novelty_std: r.novelty_std,
        })?;
    }
    writer.into_inner().map_err(|e| csv::Error::from(e.into_error()).into())
}

#[derive(Clone, Debug)]
pub struct AnalyzeArgs {
    pub domain: DomainKind,
    pub checkpoint: PathBuf,
    pub trials: usize,
    pub probe_generations: Vec<u32>,
    pub ga: GaConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefinedTrials {
    pub fitness: usize,
    pub rank: usize,
    pub age: usize,
    pub novelty: usize,
    pub noise: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub generation: u32,
    pub fitness: Option<f64>,
    pub rank: Option<f64>,
    pub age: Option<f64>,
    pub novelty: Option<f64>,
    pub noise: Option<f64>,
    pub defined_trials: DefinedTrials,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub domain: DomainKind,
    pub checkpoint: String,
    pub checkpoint_domain: DomainKind,
    pub trials: usize,
    pub seed: u64,
    pub pop_size: usize,
    pub generations: u32,
    pub mutation_rate: f64,
    pub averaging: String,
    pub warnings: Vec<String>,
    pub per_generation: Vec<CorrelationEntry>,
}

/// Probes the checkpoint's policy during test-time runs and writes
/// `correlations.json`, `correlations.csv` and `manifest.json`.
pub fn analyze(args: &AnalyzeArgs) -> Result<CorrelationReport> {
    if args.trials == 0 {
        return Err(HarnessError::Usage("--trials must be at least 1".into()));
    }
    args.ga.validate()?;
    let mut seen = BTreeSet::new();
    for &g in &args.probe_generations {
        if g > args.ga.generations {
            return Err(HarnessError::Usage(format!(
                "probe generation {g} is past the last generation {}",
                args.ga.generations
            )));
        }
        if !seen.insert(g) {
            return Err(HarnessError::Usage(format!("probe generation {g} given twice")));
        }
    }
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let mut warnings = Vec::new();
    if checkpoint.metadata.domain != args.domain {
        let w = format!(
            "checkpoint was trained on {} but is analysed on {}",
            checkpoint.metadata.domain.name(),
            args.domain.name()
        );
        log::warn!("{w}");
        warnings.push(w);
    }

    let policy = sel4sel_core::SelectionPolicy::Network(checkpoint.params);
    let pool = parallel::pool(args.threads)?;
    let traces =
        parallel::run_trials(&pool, &policy, args.domain, args.trials, &args.ga, args.seed, &args.probe_generations)?;
    let averaged = average_probes(&traces);
    let probes: Vec<AveragedProbe> = args
        .probe_generations
        .iter()
        .map(|&g| {
            averaged.iter().find(|p| p.generation == g).cloned().unwrap_or(AveragedProbe {
                generation: g,
                fitness: None,
                rank: None,
                age: None,
                novelty: None,
                noise: None,
                defined_counts: [0; 5],
            })
        })
        .collect();

    let report = CorrelationReport {
        domain: args.domain,
        checkpoint: args.checkpoint.display().to_string(),
        checkpoint_domain: checkpoint.metadata.domain,
        trials: args.trials,
        seed: args.seed,
        pop_size: args.ga.population_size,
        generations: args.ga.generations,
        mutation_rate: args.ga.mutation_rate,
        averaging: "mean over trials in which the correlation is defined; null if undefined in every trial".into(),
        warnings,
        per_generation: probes
            .iter()
            .map(|p| CorrelationEntry {
                generation: p.generation,
                fitness: p.fitness,
                rank: p.rank,
                age: p.age,
                novelty: p.novelty,
                noise: p.noise,
                defined_trials: DefinedTrials {
                    fitness: p.defined_counts[0],
                    rank: p.defined_counts[1],
                    age: p.defined_counts[2],
                    novelty: p.defined_counts[3],
                    noise: p.defined_counts[4],
                },
            })
            .collect(),
    };
    write_file(&args.out.join("correlations.json"), &json_bytes(&report)?)?;
    write_file(&args.out.join("correlations.csv"), &correlation_csv(&probes)?)?;
    #[derive(Serialize)]
    struct AnalyzeManifest<'a> {
        command: &'static str,
        domain: DomainKind,
        checkpoint: &'a str,
        trials: usize,
        probe_generations: &'a [u32],
        ga: &'a GaConfig,
        seed: u64,
        files: [&'static str; 2],
    }
    let manifest = AnalyzeManifest {
        command: "analyze",
        domain: args.domain,
        checkpoint: &report.checkpoint,
        trials: args.trials,
        probe_generations: &args.probe_generations,
        ga: &args.ga,
        seed: args.seed,
        files: ["correlations.json", "correlations.csv"],
    };
    write_file(&args.out.join("manifest.json"), &json_bytes(&manifest)?)?;
    Ok(report)
}

/// A checkpoint of all-zero parameters for `hidden` layer widths.
pub fn zero_checkpoint(domain: DomainKind, hidden: &[usize]) -> Result<Checkpoint> {
    let mut config = MetaConfig::new(domain, 0);
    config.hidden = hidden.to_vec();
    config.iterations = 0;
    Ok(Checkpoint {
        params: PolicyParams::zeros(config.layer_shapes())?,
        metadata: Metadata::from_config(&config, 0, false),
    })
}
