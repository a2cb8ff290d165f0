use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use gln_harness::runners::{capacity, cells, density, forgetting, mnist, saliency, uci};
use gln_harness::tabular::Table;
use gln_harness::{Experiment, ExperimentConfig, MetricsLog};

/// Gated linear network experiments.
///
/// Settings come from the experiment's defaults, overridden by `--config`,
/// overridden by the flags below. Metrics go to `<out>/metrics.jsonl`, or to
/// stdout without `--out`. Progress and summaries go to stderr.
#[derive(Parser)]
#[command(name = "gln", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for metrics and artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Update and evaluate class models on all cores.
    #[arg(long, global = true)]
    parallel: bool,
    /// Add elapsed seconds to every metrics record.
    #[arg(long, global = true)]
    wall_clock: bool,
    /// Directory holding the four MNIST IDX files.
    #[arg(long, global = true)]
    mnist_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-pass one-vs-all MNIST classification.
    TrainMnist,
    /// Training accuracy on shuffled labels or noise across context dimensions.
    Capacity,
    /// Sequential permuted-MNIST tasks and the retention matrix.
    Forgetting,
    /// Autoregressive density model on binarized crops.
    Density,
    /// Train, then export per-class saliency maps.
    Saliency,
    /// Frozen test accuracy of a saved classifier.
    Eval {
        /// Model file written by `train-mnist`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Single-pass classification of a CSV dataset over random splits.
    Uci {
        #[arg(long)]
        data: Option<PathBuf>,
        /// TOML schema for the CSV.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Per-cell calibration on a synthetic one-dimensional task.
    Cells,
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::TrainMnist | Command::Eval { .. } => Experiment::Mnist,
            Command::Capacity => Experiment::Capacity,
            Command::Forgetting => Experiment::Forgetting,
            Command::Density => Experiment::Density,
            Command::Saliency => Experiment::Saliency,
            Command::Uci { .. } => Experiment::Uci,
            Command::Cells => Experiment::Cells,
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut cfg = ExperimentConfig::load(cli.command.experiment(), cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.mnist_dir.is_some() {
        cfg.mnist_dir = cli.mnist_dir.clone();
    }
    cfg.parallel |= cli.parallel;
    cfg.wall_clock |= cli.wall_clock;
    if let Command::Uci { data, schema } = &cli.command {
        cfg.data_csv = data.clone().or(cfg.data_csv);
        cfg.schema = schema.clone().or(cfg.schema);
    }
    cfg.validate()?;

    let mut log = match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join("config.toml"), cfg.to_toml())?;
            MetricsLog::to_file(&dir.join("metrics.jsonl"), cfg.wall_clock)?
        }
        None => MetricsLog::new(cfg.wall_clock),
    }
    .echo(true);

    match &cli.command {
        Command::TrainMnist => {
            let r = mnist::run_mnist(&cfg, &mut log)?;
            eprintln!("online accuracy {:.4}, test accuracy {:.4}", r.online_accuracy, r.test_accuracy);
        }
        Command::Capacity => {
            let r = capacity::run_capacity(&cfg, &mut log)?;
            for (m, acc) in r.context_dims.iter().zip(r.mean_accuracy()) {
                eprintln!("m = {m}: mean final training accuracy {acc:.4}");
            }
        }
        Command::Forgetting => {
            let r = forgetting::run_forgetting(&cfg, &mut log)?;
            let tasks = cfg.tasks;
            for i in 0..tasks {
                let row: Vec<String> = (0..=i).map(|j| format!("{:.4}", r.mean(i, j))).collect();
                eprintln!("after task {}: {}", i + 1, row.join(" "));
            }
        }
        Command::Density => {
            let r = density::run_density(&cfg, &mut log)?;
            eprintln!(
                "nats/image  gln online {:.2}  gln frozen {:.2}  bernoulli online {:.2}  bernoulli frozen {:.2}  uniform {:.2}",
                r.gln_online, r.gln_frozen, r.bernoulli_online, r.bernoulli_frozen, r.uniform
            );
        }
        Command::Saliency => {
            let r = saliency::run_saliency(&cfg, &mut log)?;
            eprintln!("test accuracy {:.4}, clip-clean maps {:.3}", r.test_accuracy, r.clip_clean_fraction);
        }
        Command::Eval { model } => {
            let r = mnist::run_eval(&cfg, model, &mut log)?;
            eprintln!("test accuracy {:.4} (model checksum {:#018x} unchanged)", r.accuracy, r.checksum_after);
        }
        Command::Uci { .. } => {
            let (Some(data), Some(schema)) = (&cfg.data_csv, &cfg.schema) else {
                bail!("uci needs --data and --schema (or data_csv and schema in the config)");
            };
            let table = Table::load(data, schema)?;
            let r = uci::run_uci(&cfg, &table, &mut log)?;
            eprintln!("accuracy {:.4} +/- {:.4} over {} splits", r.mean(), r.stderr(), r.accuracies.len());
        }
        Command::Cells => {
            let r = cells::run_cells(&cfg, &mut log)?;
            for c in &r.cells {
                eprintln!(
                    "context {}: n = {}, mean prediction {:.4}, mean target {:.4}",
                    c.context, c.count, c.mean_prediction, c.mean_target
                );
            }
        }
    }
    log.flush()?;
    if cfg.out.is_none() {
        print!("{}", log.to_jsonl());
    }
    Ok(())
}
