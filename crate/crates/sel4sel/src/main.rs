use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sel4sel::commands::{self, AnalyzeArgs, CompareArgs, TrainArgs, DEFAULT_PROBE_GENERATIONS};
use sel4sel::PolicySpec;
use sel4sel_core::meta::{EarlyStop, MetaConfig, StallMetric, UpdateRule};
use sel4sel_core::{DomainKind, GaConfig, NoveltyMode};

#[derive(Parser)]
#[command(name = "sel4sel", version, about = "Meta-evolve and evaluate GA selection functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Meta-train a selection network with evolution strategies.
    Train(TrainCli),
    /// Evaluate several policies on the same paired trials.
    Compare(CompareCli),
    /// Correlate a trained policy's scores with population metrics.
    Analyze(AnalyzeCli),
}

fn domain_arg() -> clap::builder::ValueParser {
    PossibleValuesParser::new(DomainKind::ALL.map(DomainKind::name))
        .try_map(|s: String| s.parse::<DomainKind>())
        .into()
}

#[derive(Args)]
struct GaCli {
    #[arg(long, default_value_t = 50)]
    pop_size: usize,
    #[arg(long, default_value_t = 2000)]
    generations: u32,
    #[arg(long, default_value_t = sel4sel_core::bitstring::DEFAULT_MUTATION_RATE)]
    mutation_rate: f64,
    /// Novelty as the mean (default) or the sum of the nearest-neighbour distances.
    #[arg(long, value_enum, default_value_t = NoveltyArg::Mean)]
    novelty: NoveltyArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoveltyArg {
    Mean,
    Sum,
}

#[derive(Clone, Copy, ValueEnum)]
enum UpdateArg {
    Average,
    Gradient,
}

#[derive(Clone, Copy, ValueEnum)]
enum StallArg {
    Mean,
    Best,
    Off,
}

impl GaCli {
    fn config(&self) -> GaConfig {
        GaConfig {
            population_size: self.pop_size,
            generations: self.generations,
            mutation_rate: self.mutation_rate,
            seed: 0,
            novelty_mode: match self.novelty {
                NoveltyArg::Mean => NoveltyMode::Mean,
                NoveltyArg::Sum => NoveltyMode::Sum,
            },
        }
    }
}

#[derive(Args)]
struct TrainCli {
    #[arg(long, value_parser = domain_arg())]
    domain: DomainKind,
    #[arg(long, default_value_t = MetaConfig::DESK_ITERATIONS)]
    iterations: u32,
    #[arg(long, default_value_t = 20)]
    copies: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[command(flatten)]
    ga: GaCli,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path; the meta trace, manifest and resume state are written beside it.
    #[arg(long, default_value = "checkpoint.json")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<u32>,
    /// Continue an interrupted run from its saved state.
    #[arg(long)]
    resume: bool,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_values_t = sel4sel_core::selection::DEFAULT_HIDDEN)]
    hidden: Vec<usize>,
    #[arg(long, value_enum, default_value_t = UpdateArg::Average)]
    update: UpdateArg,
    /// Step size of the gradient update.
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    /// Score whose moving average decides early stopping.
    #[arg(long, value_enum, default_value_t = StallArg::Mean)]
    early_stop: StallArg,
    /// Also score the unperturbed parameters every this many iterations (logged only).
    #[arg(long)]
    eval_every: Option<u32>,
}

#[derive(Args)]
struct CompareCli {
    #[arg(long, value_parser = domain_arg())]
    domain: DomainKind,
    /// Comma-separated: fitness, novelty, mincrit, drift, sel4sel:<checkpoint>.
    #[arg(long)]
    policies: String,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[command(flatten)]
    ga: GaCli,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "compare")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct AnalyzeCli {
    #[arg(long, value_parser = domain_arg())]
    domain: DomainKind,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_PROBE_GENERATIONS)]
    probe_gens: Vec<u32>,
    #[command(flatten)]
    ga: GaCli,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "analysis")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> sel4sel::Result<()> {
    match cli.command {
        Command::Train(a) => {
            let mut config = MetaConfig::new(a.domain, a.seed);
            config.iterations = a.iterations;
            config.copies = a.copies;
            config.sigma = a.sigma;
            config.ga = a.ga.config();
            config.hidden = a.hidden;
            config.update = match a.update {
                UpdateArg::Average => UpdateRule::WeightedAverage,
                UpdateArg::Gradient => UpdateRule::Gradient { learning_rate: a.learning_rate },
            };
            config.early_stop = match a.early_stop {
                StallArg::Off => None,
                StallArg::Mean => Some(EarlyStop { metric: StallMetric::Mean, ..EarlyStop::default() }),
                StallArg::Best => Some(EarlyStop { metric: StallMetric::Best, ..EarlyStop::default() }),
            };
            config.eval_every = a.eval_every;
            let outcome = commands::train(&TrainArgs {
                config,
                out: a.out,
                threads: a.threads,
                checkpoint_every: a.checkpoint_every,
                resume: a.resume,
            })?;
            log::info!("trained for {} iterations", outcome.checkpoint.metadata.completed_iterations);
        }
        Command::Compare(a) => {
            let results = commands::compare(&CompareArgs {
                domain: a.domain,
                policies: PolicySpec::parse_list(&a.policies)?,
                trials: a.trials,
                ga: a.ga.config(),
                seed: a.seed,
                out: a.out,
                threads: a.threads,
            })?;
            for r in results {
                let s = &r.summary;
                println!(
                    "{}\tfitness {:.2} ± {:.2}\tnovelty {:.2} ± {:.2}",
                    s.policy, s.fitness_mean, s.fitness_std, s.novelty_mean, s.novelty_std
                );
            }
        }
        Command::Analyze(a) => {
            let report = commands::analyze(&AnalyzeArgs {
                domain: a.domain,
                checkpoint: a.checkpoint,
                trials: a.trials,
                probe_generations: a.probe_gens,
                ga: a.ga.config(),
                seed: a.seed,
                out: a.out,
                threads: a.threads,
            })?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
