use std::path::PathBuf;

use serde::Serialize;
use umiclab::scorer::{save_checkpoint, Vocab};
use umiclab::trainer::{fit_repetitions, TrainConfig, TrainError};

use super::{ensure_features, read_bundles, read_features, unique_captions, write_text, Ctx};
use crate::config::ScorerShape;
use crate::error::{input_error, Classify, CmdResult, Failure};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    valid: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_bundles: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    ffn_dim: Option<usize>,
}

#[derive(Serialize)]
struct Effective<'a> {
    scorer: &'a ScorerShape,
    train: &'a TrainConfig,
}

fn classify(e: TrainError) -> Failure {
    match e {
        TrainError::NonFinite { .. } | TrainError::Scorer(_) | TrainError::Io(_) => Failure::Runtime(e.into()),
        _ => Failure::Input(e.into()),
    }
}

pub fn run(ctx: &Ctx, args: Args) -> CmdResult<()> {
    let mut train_cfg = ctx.config.train.clone();
    if let Some(seed) = ctx.seed {
        train_cfg.seed = seed;
    }
    train_cfg.max_steps = args.max_steps.unwrap_or(train_cfg.max_steps);
    train_cfg.repetitions = args.repetitions.unwrap_or(train_cfg.repetitions);
    train_cfg.learning_rate = args.learning_rate.unwrap_or(train_cfg.learning_rate);
    train_cfg.batch_bundles = args.batch_bundles.unwrap_or(train_cfg.batch_bundles);
    train_cfg.eval_every = args.eval_every.unwrap_or(train_cfg.eval_every);
    train_cfg.margin = args.margin.unwrap_or(train_cfg.margin);
    train_cfg.validate().map_err(classify)?;
    let mut shape = ctx.config.scorer.clone();
    shape.layers = args.layers.unwrap_or(shape.layers);
    shape.hidden_dim = args.hidden_dim.unwrap_or(shape.hidden_dim);
    shape.heads = args.heads.unwrap_or(shape.heads);
    shape.ffn_dim = args.ffn_dim.unwrap_or(shape.ffn_dim);

    let mut rec = ctx.recorder("train", train_cfg.seed);
    let store = read_features(&args.features, &mut rec)?;
    let train = read_bundles(&args.train, &mut rec)?;
    let valid = read_bundles(&args.valid, &mut rec)?;
    if train.is_empty() || valid.is_empty() {
        return Err(input_error("training and validation bundle files must be non-empty"));
    }
    let positives: Vec<_> = train.iter().chain(&valid).map(|b| &b.positive).collect();
    ensure_features(&unique_captions(positives), &store)?;

    let seen: Vec<_> = train
        .iter()
        .flat_map(|b| std::iter::once(b.positive.clone()).chain(b.negatives.iter().map(|n| n.caption.clone())))
        .collect();
    let scorer = shape.build(Vocab::build(&seen, shape.min_count), store.dim());
    scorer.validate().input()?;

    let (outcomes, summary) = fit_repetitions(&scorer, &train, &valid, &store, &train_cfg).map_err(classify)?;
    rec.seeds = summary.seeds.clone();
    for outcome in outcomes {
        let seed = outcome.report.seed;
        let ckpt = ctx.out_dir.join(format!("model-seed{seed}.umck"));
        save_checkpoint(&outcome.model, &ckpt).runtime()?;
        rec.output(&ckpt);
        let mut report = outcome.report;
        report.checkpoint = Some(ckpt.display().to_string());
        write_text(
            &ctx.out_dir.join(format!("train-report-seed{seed}.json")),
            &serde_json::to_string_pretty(&report).runtime()?,
            &mut rec,
        )?;
        write_text(
            &ctx.out_dir.join(format!("loss-curve-seed{seed}.csv")),
            &report.loss_curve_csv(),
            &mut rec,
        )?;
        println!(
            "seed {seed}: best step {} validation loss {:.4}, held-out accuracy {:.3} (init {:.3})",
            report.best_step,
            report.best_validation_loss,
            report.accuracy.overall.accuracy,
            report.initial_accuracy.overall.accuracy
        );
    }
    write_text(
        &ctx.out_dir.join("train-summary.json"),
        &serde_json::to_string_pretty(&summary).runtime()?,
        &mut rec,
    )?;
    println!(
        "accuracy over {} run(s): mean {:.3}, min {:.3}, max {:.3}",
        summary.seeds.len(),
        summary.mean,
        summary.min,
        summary.max
    );
    rec.finish(
        &Effective {
            scorer: &shape,
            train: &train_cfg,
        },
        &ctx.out_dir,
    )?;
    Ok(())
}
