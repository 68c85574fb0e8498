use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use umiclab::corpus::Caption;
use umiclab::scorer::load_checkpoint;

use super::{
    read_captions, read_features, read_judgments, read_triplets, unique_captions, write_jsonl, Ctx, ScoreRecord,
};
use crate::error::{input_error, Classify, CmdResult};

#[derive(clap::Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["captions", "judgments", "triplets"])))]
pub struct Args {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// Captions JSONL to score.
    #[arg(long)]
    captions: Option<PathBuf>,
    /// Score the candidates of a judgment file.
    #[arg(long)]
    judgments: Option<PathBuf>,
    /// Score both candidates of a triplet file.
    #[arg(long)]
    triplets: Option<PathBuf>,
    /// Name written in the `metric` field.
    #[arg(long, default_value = "UMICLAB")]
    metric_name: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Effective<'a> {
    checkpoint: &'a PathBuf,
    metric: &'a str,
}

pub fn run(ctx: &Ctx, args: Args) -> CmdResult<()> {
    let mut rec = ctx.recorder("score", ctx.seed());
    rec.input(&args.checkpoint);
    let model = load_checkpoint(&args.checkpoint)
        .map_err(|e| anyhow::anyhow!("checkpoint {}: {e}", args.checkpoint.display()))
        .input()?;
    let store = read_features(&args.features, &mut rec)?;
    let owned: Vec<Caption> = if let Some(p) = &args.captions {
        read_captions(p, &mut rec)?
    } else if let Some(p) = &args.judgments {
        read_judgments(p, &mut rec)?.into_iter().map(|j| j.candidate).collect()
    } else {
        let p = args.triplets.as_ref().expect("clap enforces one source");
        read_triplets(p, &mut rec)?
            .into_iter()
            .flat_map(|t| [t.candidate_b, t.candidate_c])
            .collect()
    };
    let captions = unique_captions(&owned);

    let records: Vec<ScoreRecord> = captions
        .par_iter()
        .map(|c| {
            let result = match store.get(&c.image_id) {
                Some(img) => model.score(img, c).map_err(|e| e.to_string()),
                None => Err(format!("no features for image `{}`", c.image_id)),
            };
            ScoreRecord {
                caption_id: c.caption_id.clone(),
                metric: args.metric_name.clone(),
                score: result.as_ref().ok().copied(),
                error: result.err(),
            }
        })
        .collect();
    let out = ctx.out_path(&args.output, "scores.jsonl");
    write_jsonl(&out, &records, &mut rec)?;
    let failed: Vec<&str> = records
        .iter()
        .filter(|r| r.error.is_some())
        .map(|r| r.caption_id.as_str())
        .collect();
    println!(
        "scored {} captions into {}",
        records.len() - failed.len(),
        out.display()
    );
    rec.finish(
        &Effective {
            checkpoint: &args.checkpoint,
            metric: &args.metric_name,
        },
        &ctx.out_dir,
    )?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(input_error(format!(
            "{} caption(s) could not be scored: {}",
            failed.len(),
            super::preview(&failed)
        )))
    }
}
