//! Command-line pipeline for bipartite entanglement classification:
//! dataset generation, masked pretraining, classifier fine-tuning, the
//! frozen-encoder probe, and per-group evaluation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use entclass_core::dataset::{
    build_dataset, DatasetConfig, DecimalScale, Task, MANIFEST_FILENAME,
};
use entclass_core::error::Error;
use entclass_core::quantum::BipartiteDims;
use entclass_core::sampler::StateGroup;
use entclass_core::training::{
    finetune_classifier, load_corpus, pretrain, EvalMode, EvalReport, OptimizerKind, TrainConfig,
    TrainOutcome,
};
use entclass_core::transformer::{load_checkpoint, save_checkpoint, Model, ModelConfig};
use entclass_core::TOOL_VERSION;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_TRAINING: u8 = 4;
const EXIT_MISMATCH: u8 = 5;

#[derive(Parser)]
#[command(
    name = "entclass",
    version,
    about = "Generate labeled bipartite quantum states and train a masked-transformer entanglement classifier"
)]
struct Cli {
    /// Print the versioned defaults table and exit.
    #[arg(long, global = true)]
    show_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset (shards + manifest).
    Gen(GenArgs),
    /// Pretrain the masked transformer as an autoencoder.
    Pretrain(PretrainArgs),
    /// Fine-tune a pretrained checkpoint for binary classification.
    Finetune(FinetuneArgs),
    /// Fine-tune with every tensor except the classification head frozen.
    Probe(FinetuneArgs),
    /// Evaluate a checkpoint on a held-out corpus.
    Eval(EvalArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Bipartite dimensions: 2x2, 2x3, or 3x3.
    #[arg(long)]
    dims: String,
    /// Corpus purpose: pretrain, classify, or eval (also the seed domain).
    #[arg(long)]
    task: String,
    /// Exact decimal factor applied to the full-scale group counts.
    #[arg(long, default_value = "1e-3")]
    scale: String,
    /// Master seed for generation and split assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created; existing files are never overwritten).
    #[arg(long)]
    out: PathBuf,
    /// Restrict generation to a comma-separated subset of groups.
    #[arg(long)]
    groups: Option<String>,
    /// Generation worker threads (output is identical for any count).
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args, Clone)]
struct TrainArgs {
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 3e-4)]
    lr_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    lr_min: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record the run as deterministic (runs are seed-reproducible always).
    #[arg(long, default_value_t = false)]
    deterministic: bool,
    /// Optimizer: adam or sgd-momentum.
    #[arg(long, default_value = "adam")]
    optimizer: String,
}

impl TrainArgs {
    fn to_config(&self, default_epochs: usize, freeze_encoder: bool) -> Result<TrainConfig, Error> {
        Ok(TrainConfig {
            epochs: self.epochs.unwrap_or(default_epochs),
            batch_size: self.batch_size,
            lr_max: self.lr_max,
            lr_min: self.lr_min,
            seed: self.seed,
            deterministic: self.deterministic,
            freeze_encoder,
            optimizer: OptimizerKind::from_name(&self.optimizer)?,
        })
    }
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 64)]
    embed_dim: usize,
    #[arg(long, default_value_t = 4)]
    heads: usize,
    #[arg(long, default_value_t = 4)]
    layers: usize,
    #[arg(long, default_value_t = 256)]
    ffn_dim: usize,
    #[arg(long, default_value_t = 0.1)]
    dropout: f64,
    #[arg(long, default_value_t = 0.15)]
    mask_fraction: f64,
}

impl ModelArgs {
    fn to_config(&self, n_tokens: usize) -> ModelConfig {
        ModelConfig {
            n_tokens,
            embed_dim: self.embed_dim,
            n_heads: self.heads,
            n_layers: self.layers,
            ffn_dim: self.ffn_dim,
            dropout: self.dropout,
            mask_fraction: self.mask_fraction,
        }
    }
}

#[derive(Args)]
struct PretrainArgs {
    /// Manifest of a pretraining corpus.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for model.qtck and report.txt.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct FinetuneArgs {
    /// Manifest of a classification corpus.
    #[arg(long)]
    manifest: PathBuf,
    /// Pretrained checkpoint to start from.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Output directory for model.qtck and report.txt.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Manifest of the evaluation corpus.
    #[arg(long)]
    manifest: PathBuf,
    /// Checkpoint to evaluate.
    #[arg(long)]
    checkpoint: PathBuf,
    /// reconstruction or classification.
    #[arg(long)]
    mode: String,
    /// Output directory for report.txt.
    #[arg(long)]
    out: PathBuf,
    /// Seed for evaluation-time masking.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.show_config {
        print_defaults();
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: no subcommand given (try --help)");
        return ExitCode::from(EXIT_CONFIG);
    };
    let result = match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Pretrain(args) => cmd_pretrain(args),
        Command::Finetune(args) => cmd_finetune(args, false),
        Command::Probe(args) => cmd_finetune(args, true),
        Command::Eval(args) => cmd_eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::AlphaOutOfRange(_) | Error::EmptyBatch => EXIT_CONFIG,
        Error::Io(_) | Error::PathExists(_) | Error::ChecksumMismatch { .. }
        | Error::FormatError { .. } => EXIT_IO,
        Error::NonFiniteLoss { .. }
        | Error::RejectionBudgetExceeded { .. }
        | Error::NoConvergence { .. }
        | Error::DegenerateInput { .. } => EXIT_TRAINING,
        Error::ArtifactMismatch(_)
        | Error::DimensionMismatch(_)
        | Error::NonHermitianInput { .. }
        | Error::InvalidState(_) => EXIT_MISMATCH,
    }
}

fn print_defaults() {
    println!("entclass {TOOL_VERSION} defaults");
    println!("  gen:       scale=1e-3 seed=0 workers=1");
    println!("  model:     embed_dim=64 heads=4 layers=4 ffn_dim=256 dropout=0.1 mask_fraction=0.15");
    println!("  pretrain:  epochs=20 batch_size=256 lr_max=3e-4 lr_min=1e-6 optimizer=adam");
    println!("  finetune:  epochs=10 batch_size=256 lr_max=3e-4 lr_min=1e-6 optimizer=adam");
    println!("  probe:     finetune defaults with every non-head tensor frozen");
    println!("  eval:      seed=0 (controls evaluation-time masking)");
    println!("  splits:    train=0.90 val=0.05 test=0.05 (task=eval corpora are all-test)");
    println!("  rng:       {}", entclass_core::rng::RNG_ALGORITHM_ID);
}

fn cmd_gen(args: GenArgs) -> Result<(), Error> {
    let dims = BipartiteDims::parse(&args.dims)?;
    let task = Task::from_name(&args.task)?;
    let scale = DecimalScale::parse(&args.scale)?;
    let mut config = DatasetConfig::scaled(dims, task, &scale, args.seed)?;
    config.workers = args.workers.max(1);
    if let Some(groups) = &args.groups {
        let requested: Vec<StateGroup> = groups
            .split(',')
            .map(|name| StateGroup::from_name(name.trim()))
            .collect::<Result<_, _>>()?;
        config.counts.retain(|(g, _)| requested.contains(g));
        for group in &requested {
            if !config.counts.iter().any(|(g, _)| g == group) {
                return Err(Error::InvalidConfig(format!(
                    "group '{group}' has no samples for dims {dims} task {task}"
                )));
            }
        }
    }

    let manifest = build_dataset(&config, &args.out)?;
    println!(
        "wrote manifest {}",
        args.out.join(MANIFEST_FILENAME).display()
    );
    println!("{:<18} {:>10}", "group", "count");
    for (group, count) in &manifest.groups {
        println!("{:<18} {:>10}", group.name(), count);
    }
    println!("{:<18} {:>10}", "total", manifest.total_records());
    Ok(())
}

fn prepare_out_dir(dir: &Path) -> Result<(PathBuf, PathBuf), Error> {
    std::fs::create_dir_all(dir)?;
    Ok((dir.join("model.qtck"), dir.join("report.txt")))
}

fn finish_run(outcome: &TrainOutcome, out: &Path) -> Result<(), Error> {
    let (checkpoint_path, report_path) = prepare_out_dir(out)?;
    save_checkpoint(&outcome.model, &checkpoint_path)?;
    outcome.report.write(&report_path)?;
    println!("wrote checkpoint {}", checkpoint_path.display());
    println!("wrote report {}", report_path.display());
    println!("best epoch: {}", outcome.best_epoch);
    print_report_table(&outcome.report);
    Ok(())
}

fn print_report_table(report: &EvalReport) {
    match report.mode {
        EvalMode::Reconstruction => {
            println!(
                "{:<18} {:>14} {:>14} {:>10}",
                "group", "mse", "hdist", "samples"
            );
            for g in &report.groups {
                println!(
                    "{:<18} {:>14.6e} {:>14.6} {:>10}",
                    g.group.name(),
                    g.mse.unwrap_or(f64::NAN),
                    g.hermitian_distance.unwrap_or(f64::NAN),
                    g.samples
                );
            }
        }
        EvalMode::Classification => {
            println!("{:<18} {:>10} {:>10}", "group", "accuracy", "samples");
            for g in &report.groups {
                println!(
                    "{:<18} {:>9.3}% {:>10}",
                    g.group.name(),
                    100.0 * g.accuracy.unwrap_or(f64::NAN),
                    g.samples
                );
            }
            if let Some(c) = &report.confusion {
                println!(
                    "confusion: tn={} fp={} fn={} tp={}",
                    c.true_negative, c.false_positive, c.false_negative, c.true_positive
                );
            }
        }
    }
}

fn cmd_pretrain(args: PretrainArgs) -> Result<(), Error> {
    let corpus = load_corpus(&args.manifest)?;
    let model_config = args.model.to_config(corpus.n_tokens());
    let train = args.train.to_config(20, false)?;
    let outcome = pretrain(&corpus, model_config, &train)?;
    finish_run(&outcome, &args.out)
}

fn cmd_finetune(args: FinetuneArgs, freeze_encoder: bool) -> Result<(), Error> {
    let corpus = load_corpus(&args.manifest)?;
    let base: Model<f32> = load_checkpoint(&args.checkpoint)?;
    let train = args.train.to_config(10, freeze_encoder)?;
    let outcome = finetune_classifier(&corpus, &base, &train)?;
    finish_run(&outcome, &args.out)
}

fn cmd_eval(args: EvalArgs) -> Result<(), Error> {
    let corpus = load_corpus(&args.manifest)?;
    let model: Model<f32> = load_checkpoint(&args.checkpoint)?;
    let mode = EvalMode::from_name(&args.mode)?;
    let report = entclass_core::training::eval::evaluate(&model, &corpus, mode, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    let report_path = args.out.join("report.txt");
    report.write(&report_path)?;
    println!("wrote report {}", report_path.display());
    print_report_table(&report);
    Ok(())
}
