//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.
//!
//! Trained-policy criteria evaluate the checkpoints under `checkpoints/`,
//! which were produced by `sel4sel train` with the full-size budget recorded
//! in their metadata. Set `SEL4SEL_RETRAIN=1` to train fresh policies instead
//! (about an hour per domain on one core). `SEL4SEL_CRITERIA=11,13` runs a
//! subset.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Stdio};

use rand::Rng;
use sel4sel::commands::{self, AnalyzeArgs, TrainArgs};
use sel4sel::parallel;
use sel4sel::Checkpoint;
use sel4sel_core::bitstring::DEFAULT_MUTATION_RATE;
use sel4sel_core::domains::deceptive_fitness;
use sel4sel_core::engine::EvaluationSummary;
use sel4sel_core::meta::{rank_weights, MetaState};
use sel4sel_core::rng;
use sel4sel_core::{pearson, DomainKind, GaConfig, Genome, MetaConfig, RunTrace, SelectionPolicy};

const TRIALS: usize = 20;
/// Master seed of every test-time evaluation (training used a different one).
const EVAL_SEED: u64 = 1;
const TRAIN_SEED: u64 = 1;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ga() -> GaConfig {
    GaConfig { population_size: 50, generations: 2000, mutation_rate: DEFAULT_MUTATION_RATE, ..GaConfig::default() }
}

fn trials(policy: &SelectionPolicy, domain: DomainKind) -> Vec<RunTrace> {
    let pool = parallel::pool(None).unwrap();
    parallel::run_trials(&pool, policy, domain, TRIALS, &ga(), EVAL_SEED, &[]).unwrap()
}

fn summary(traces: &[RunTrace]) -> EvaluationSummary {
    EvaluationSummary::from_traces(traces).unwrap()
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&v)
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Checkpoint for `domain`: the shipped one, or a fresh training run.
fn trained(domain: DomainKind) -> Result<(Checkpoint, PathBuf), String> {
    if std::env::var_os("SEL4SEL_RETRAIN").is_some() {
        let out = std::env::temp_dir().join(format!("sel4sel-acceptance-{}.json", domain.name()));
        let config = MetaConfig::new(domain, TRAIN_SEED);
        let result = commands::train(&TrainArgs { config, out: out.clone(), threads: None, checkpoint_every: Some(25), resume: true })
            .map_err(|e| e.to_string())?;
        return Ok((result.checkpoint, out));
    }
    let path = repo_root().join("checkpoints").join(format!("{}.json", domain.name()));
    let ck = Checkpoint::load(&path).map_err(|e| e.to_string())?;
    let m = &ck.metadata;
    let t = &m.training;
    if m.domain != domain || m.iterations != 1500 || t.copies != 20 || t.pop_size != 50 || t.generations != 2000 {
        return Err(format!("{} was not trained with the full-size budget", path.display()));
    }
    if m.completed_iterations < m.iterations && !m.stopped_early {
        return Err(format!("{} holds an unfinished run ({} iterations)", path.display(), m.completed_iterations));
    }
    Ok((ck, path))
}

fn max_fitness_monotone(traces: &[RunTrace]) -> bool {
    traces.iter().all(|t| t.generations.windows(2).all(|w| w[1].max_fitness >= w[0].max_fitness))
}

fn convex_fitness() -> Outcome {
    let s = summary(&trials(&SelectionPolicy::UnderlyingFitness, DomainKind::Convex));
    outcome(
        s.fitness_mean == 32.0 && s.novelty_mean == 0.0,
        format!("fitness {} novelty {}", s.fitness_mean, s.novelty_mean),
    )
}

fn convex_novelty() -> Outcome {
    let s = summary(&trials(&SelectionPolicy::Novelty, DomainKind::Convex));
    outcome(
        in_range(s.fitness_mean, 13.0, 19.0) && in_range(s.novelty_mean, 6.0, 9.0),
        format!("fitness {:.3} (want [13, 19]) novelty {:.3} (want [6, 9])", s.fitness_mean, s.novelty_mean),
    )
}

fn convex_mincrit() -> Outcome {
    let s = summary(&trials(&SelectionPolicy::minimal_criterion(), DomainKind::Convex));
    outcome(in_range(s.fitness_mean, 16.5, 23.0), format!("fitness {:.3} (want [16.5, 23])", s.fitness_mean))
}

fn hashed_fitness() -> Outcome {
    let s = summary(&trials(&SelectionPolicy::UnderlyingFitness, DomainKind::Hashed));
    outcome(in_range(s.fitness_mean, 17.0, 28.0), format!("fitness {:.3} (want [17, 28])", s.fitness_mean))
}

fn deceptive_fitness_baseline() -> Outcome {
    let s = summary(&trials(&SelectionPolicy::UnderlyingFitness, DomainKind::Deceptive));
    outcome(
        in_range(s.fitness_mean, 18.0, 26.0) && s.novelty_mean == 0.0,
        format!("fitness {:.3} (want [18, 26]) novelty {}", s.fitness_mean, s.novelty_mean),
    )
}

fn deceptive_novelty() -> Outcome {
    let s = summary(&trials(&SelectionPolicy::Novelty, DomainKind::Deceptive));
    outcome(
        in_range(s.fitness_mean, 5.0, 8.0) && in_range(s.novelty_mean, 6.5, 9.0),
        format!("fitness {:.3} (want [5, 8]) novelty {:.3} (want [6.5, 9])", s.fitness_mean, s.novelty_mean),
    )
}

/// Trained policy against the paired fitness baseline.
fn trained_policy(domain: DomainKind, floor: f64, beat_baseline: bool) -> Outcome {
    let (ck, path) = match trained(domain) {
        Ok(found) => found,
        Err(e) => return outcome(false, e),
    };
    let s = summary(&trials(&SelectionPolicy::Network(ck.params), domain));
    let base = summary(&trials(&SelectionPolicy::UnderlyingFitness, domain));
    let pass = s.fitness_mean >= floor && (!beat_baseline || s.fitness_mean > base.fitness_mean);
    outcome(
        pass,
        format!(
            "{}: fitness {:.3} ± {:.3} (want >= {floor}), fitness baseline {:.3}, trained {} iterations",
            path.file_name().unwrap().to_string_lossy(),
            s.fitness_mean,
            s.fitness_std,
            base.fitness_mean,
            ck.metadata.completed_iterations
        ),
    )
}

fn deceptive_probe() -> Outcome {
    let (_, path) = match trained(DomainKind::Deceptive) {
        Ok(found) => found,
        Err(e) => return outcome(false, e),
    };
    let out = tempfile::tempdir().unwrap();
    let report = commands::analyze(&AnalyzeArgs {
        domain: DomainKind::Deceptive,
        checkpoint: path,
        trials: TRIALS,
        probe_generations: commands::DEFAULT_PROBE_GENERATIONS.to_vec(),
        ga: ga(),
        seed: EVAL_SEED,
        out: out.path().to_path_buf(),
        threads: None,
    })
    .unwrap();
    let at = |g: u32| report.per_generation.iter().find(|e| e.generation == g).unwrap();
    let novelty = at(1).novelty;
    let fitness = at(2000).fitness;
    outcome(
        novelty.is_some_and(|v| v > 0.3) && fitness.is_some_and(|v| v > 0.8),
        format!(
            "novelty corr at gen 1 {novelty:?} (want > 0.3), fitness corr at gen 2000 {fitness:?} (want > 0.8, defined in {} trials)",
            at(2000).defined_trials.fitness
        ),
    )
}

/// Every block of size 2, 4, 8 or 16 whose bits all agree earns half its size.
fn block_oracle(g: Genome) -> u32 {
    let bits = g.bits();
    let mut total = 0;
    let mut size = 2;
    while size <= bits.len() {
        for block in bits.chunks(size) {
            if block.iter().all(|&b| b == block[0]) {
                total += size as u32 / 2;
            }
        }
        size *= 2;
    }
    total
}

fn deceptive_oracle() -> Outcome {
    let mut mismatches = 0;
    let mut maxima = 0;
    for v in 0..=u16::MAX {
        let g = Genome::from_u16(v);
        let f = deceptive_fitness(g);
        if f != block_oracle(g) {
            mismatches += 1;
        }
        if f == 32 {
            maxima += 1;
        }
    }
    outcome(mismatches == 0 && maxima == 2, format!("{mismatches} mismatches, {maxima} genomes at 32"))
}

fn mutation_statistics() -> Outcome {
    let mut stream = rng::stream(12, &[]);
    let n = 100_000;
    let total: u64 = (0..n)
        .map(|_| {
            let parent = Genome::random(&mut stream);
            parent.hamming(parent.mutate(DEFAULT_MUTATION_RATE, &mut stream)) as u64
        })
        .sum();
    let mean = total as f64 / n as f64;
    outcome((mean - 0.4).abs() <= 0.02, format!("mean parent-child distance {mean:.4} (want 0.4 ± 0.02)"))
}

fn cli_determinism() -> Outcome {
    fn run(dir: &Path, args: &[&str]) -> bool {
        Command::new(env!("CARGO_BIN_EXE_sel4sel"))
            .args(args)
            .current_dir(dir)
            .env("RUST_LOG", "error")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .map(|s| s.success())
            .unwrap_or(false)
    }
    fn files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
        let mut out = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(dir).unwrap() {
                let p = entry.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
                }
            }
        }
        out.sort();
        out
    }
    let tmp = tempfile::tempdir().unwrap();
    let small = ["--pop-size", "20", "--generations", "40"];
    let mut ok = true;
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let dir = tmp.path().join(name);
        std::fs::create_dir_all(&dir).unwrap();
        let mut train = vec!["train", "--domain", "hashed", "--iterations", "3", "--copies", "6", "--sigma", "0.1", "--seed", "9", "--out", "ck.json", "--threads", threads, "--checkpoint-every", "2"];
        train.extend(small);
        let mut compare = vec!["compare", "--domain", "deceptive", "--policies", "fitness,novelty,mincrit,drift,sel4sel:ck.json", "--trials", "5", "--seed", "9", "--out", "cmp", "--threads", threads];
        compare.extend(small);
        let mut analyze = vec!["analyze", "--domain", "convex", "--checkpoint", "ck.json", "--trials", "5", "--probe-gens", "1,20,40", "--seed", "9", "--out", "an", "--threads", threads];
        analyze.extend(small);
        ok &= run(&dir, &train) && run(&dir, &compare) && run(&dir, &analyze);
    }
    let a = files(&tmp.path().join("a"));
    let same = a == files(&tmp.path().join("b")) && a == files(&tmp.path().join("c"));
    outcome(ok && same && a.len() > 10, format!("{} files compared across reruns and 1 vs 4 threads", a.len()))
}

fn es_convex_combination() -> Outcome {
    let mut stream = rng::stream(14, &[]);
    let mut worst_excess: f64 = 0.0;
    let mut worst_weight_error: f64 = 0.0;
    for step in 0..1000u64 {
        let mut config = MetaConfig::new(DomainKind::Convex, step);
        config.copies = stream.random_range(2..=30);
        config.sigma = stream.random_range(0.0..1.0);
        config.hidden = vec![stream.random_range(1..=16)];
        let mut state = MetaState::new(&config).unwrap();
        let copies = state.copies(&config);
        // Coarse scores so ties occur.
        let scores: Vec<f64> = (0..config.copies).map(|_| stream.random_range(0..8) as f64).collect();
        let weights = rank_weights(&scores).unwrap();
        worst_weight_error = worst_weight_error.max((weights.iter().sum::<f64>() - 1.0).abs());
        state.advance(&config, &copies, scores).unwrap();
        for (i, &v) in state.theta.values().iter().enumerate() {
            let lo = copies.iter().map(|c| c.values()[i]).fold(f64::INFINITY, f64::min);
            let hi = copies.iter().map(|c| c.values()[i]).fold(f64::NEG_INFINITY, f64::max);
            worst_excess = worst_excess.max(lo - v).max(v - hi);
        }
    }
    outcome(
        worst_excess <= 1e-12 && worst_weight_error <= 1e-12,
        format!("largest hull excess {worst_excess:e}, largest weight-sum error {worst_weight_error:e}"),
    )
}

fn pearson_oracle() -> Outcome {
    fn direct(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }
    let mut stream = rng::stream(15, &[]);
    let mut worst: f64 = 0.0;
    let mut undefined_on_random = 0;
    for _ in 0..1000 {
        let n = stream.random_range(2..60);
        let x: Vec<f64> = (0..n).map(|_| stream.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * stream.random_range(-2.0..2.0) + stream.random_range(-1.0..1.0)).collect();
        match pearson(&x, &y).unwrap() {
            Some(r) => worst = worst.max((r - direct(&x, &y)).abs()),
            None => undefined_on_random += 1,
        }
    }
    let flat = vec![0.3; 10];
    let ramp: Vec<f64> = (0..10).map(f64::from).collect();
    let constant_cases = [pearson(&flat, &ramp), pearson(&ramp, &flat), pearson(&flat, &flat)];
    let undefined_on_constant = constant_cases.iter().all(|r| matches!(r, Ok(None)));
    outcome(
        worst <= 1e-9 && undefined_on_random == 0 && undefined_on_constant,
        format!("largest deviation {worst:e}; undefined on constant inputs: {undefined_on_constant}; undefined on random inputs: {undefined_on_random}"),
    )
}

fn fitness_monotonicity() -> Outcome {
    let mut counts = Vec::new();
    let mut pass = true;
    for domain in [DomainKind::Convex, DomainKind::Hashed, DomainKind::Deceptive] {
        let traces = trials(&SelectionPolicy::UnderlyingFitness, domain);
        pass &= max_fitness_monotone(&traces);
        counts.push(format!("{} {} traces", domain.name(), traces.len()));
    }
    outcome(pass, format!("max fitness non-decreasing in {}", counts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 16] = [
        (1, "convex / fitness policy", convex_fitness),
        (2, "convex / novelty policy", convex_novelty),
        (3, "convex / minimal criterion", convex_mincrit),
        (4, "hashed / fitness policy", hashed_fitness),
        (5, "deceptive / fitness policy", deceptive_fitness_baseline),
        (6, "deceptive / novelty policy", deceptive_novelty),
        (7, "trained policy, convex", || trained_policy(DomainKind::Convex, 31.5, false)),
        (8, "trained policy, deceptive", || trained_policy(DomainKind::Deceptive, 29.0, true)),
        (9, "trained policy, hashed", || trained_policy(DomainKind::Hashed, 27.0, true)),
        (10, "correlation probe, trained deceptive policy", deceptive_probe),
        (11, "deceptive fitness oracle equivalence", deceptive_oracle),
        (12, "mutation statistics", mutation_statistics),
        (13, "CLI determinism", cli_determinism),
        (14, "ES update is a convex combination", es_convex_combination),
        (15, "Pearson against direct formula", pearson_oracle),
        (16, "fitness-policy monotonicity", fitness_monotonicity),
    ];
    // SEL4SEL_CRITERIA=11,13 runs a subset.
    let only: Option<Vec<u32>> =
        std::env::var("SEL4SEL_CRITERIA").ok().map(|v| v.split(',').filter_map(|n| n.trim().parse().ok()).collect());
    let selected: Vec<_> = criteria.into_iter().filter(|(n, ..)| only.as_ref().is_none_or(|o| o.contains(n))).collect();
    let total = selected.len();
    let mut failed = 0;
    for (n, name, check) in selected {
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| outcome(false, format!("panicked: {:?}", e.downcast_ref::<String>())));
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {verdict}  {name}: {}", result.detail);
        if !result.pass {
            failed += 1;
        }
    }
    println!("{} of {total} criteria passed", total - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
