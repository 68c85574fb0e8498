use std::path::PathBuf;

use serde::Serialize;
use umiclab::corpus::{generate_synthetic_corpus, write_image_features, SynthConfig};

use super::{write_jsonl, Ctx};
use crate::error::{Classify, CmdResult};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    images: Option<usize>,
    #[arg(long)]
    captions_per_image: Option<usize>,
    /// Region feature dimension.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    regions: Option<usize>,
    /// Also split captions into train and validation files, holding out the
    /// last N images.
    #[arg(long, default_value_t = 0)]
    valid_images: usize,
    #[arg(long)]
    features_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Effective<'a> {
    synth: &'a SynthConfig,
    valid_images: usize,
}

pub fn run(ctx: &Ctx, args: Args) -> CmdResult<()> {
    let seed = ctx.seed();
    let mut rec = ctx.recorder("synth", seed);
    let mut cfg = ctx.config.synth.clone();
    cfg.n_images = args.images.unwrap_or(cfg.n_images);
    cfg.captions_per_image = args.captions_per_image.unwrap_or(cfg.captions_per_image);
    cfg.d = args.dim.unwrap_or(cfg.d);
    cfg.regions_per_image = args.regions.unwrap_or(cfg.regions_per_image);
    if args.valid_images >= cfg.n_images {
        return Err(crate::error::input_error(
            "--valid-images must be smaller than the number of images",
        ));
    }
    let corpus = generate_synthetic_corpus(&cfg, seed).input()?;

    let features = ctx.out_path(&args.features_out, "features.umf");
    write_image_features(&corpus.store, &features).runtime()?;
    rec.output(&features);
    write_jsonl(&ctx.out_dir.join("captions.jsonl"), &corpus.captions, &mut rec)?;
    if args.valid_images > 0 {
        let split = format!("img{:05}", cfg.n_images - args.valid_images);
        let (valid, train): (Vec<_>, Vec<_>) = corpus.captions.iter().partition(|c| c.image_id >= split);
        write_jsonl(&ctx.out_dir.join("train_captions.jsonl"), &train, &mut rec)?;
        write_jsonl(&ctx.out_dir.join("valid_captions.jsonl"), &valid, &mut rec)?;
    }
    println!(
        "wrote {} images and {} captions to {}",
        corpus.store.len(),
        corpus.captions.len(),
        ctx.out_dir.display()
    );
    rec.finish(
        &Effective {
            synth: &cfg,
            valid_images: args.valid_images,
        },
        &ctx.out_dir,
    )?;
    Ok(())
}
