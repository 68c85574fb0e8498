use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use umiclab::corpus::DatasetKind;
use umiclab::evalstats::{histogram_csv, krippendorff_alpha, score_histogram, RatingsMatrix};

use super::{parse_dataset_path, read_judgments, write_text, Ctx};
use crate::error::{input_error, Classify, CmdResult};

#[derive(clap::Args)]
pub struct Args {
    /// `dataset=path` of a judgment file; repeatable.
    #[arg(long = "data", required = true, value_parser = parse_dataset_path)]
    data: Vec<(DatasetKind, PathBuf)>,
    #[arg(long)]
    bins: Option<usize>,
    /// Also compute Krippendorff's interval alpha over the rater scores.
    #[arg(long)]
    alpha: bool,
}

#[derive(Serialize)]
struct Distribution {
    dataset: DatasetKind,
    n: usize,
    counts: Vec<usize>,
    /// Share of scores in the lowest and highest bins.
    outer_mass: f64,
}

#[derive(Serialize)]
struct Effective {
    bins: usize,
    alpha: bool,
}

pub fn run(ctx: &Ctx, args: Args) -> CmdResult<()> {
    let mut rec = ctx.recorder("report-dist", ctx.seed());
    let bins = args.bins.unwrap_or(ctx.config.eval.bins);
    let mut dists = Vec::new();
    let mut agreement = BTreeMap::new();
    for (kind, path) in &args.data {
        if kind.is_triplet() {
            return Err(input_error(format!("{kind} has pairwise choices, not score judgments")));
        }
        let judgments = read_judgments(path, &mut rec)?;
        let scores: Vec<f64> = judgments.iter().map(|j| j.normalized).collect();
        let counts = score_histogram(&scores, bins)
            .map_err(|e| anyhow::anyhow!("{kind}: {e}"))
            .input()?;
        let outer = counts[0] + if bins > 1 { counts[bins - 1] } else { 0 };
        write_text(
            &ctx.out_dir.join(format!("{}-histogram.csv", kind.name())),
            &histogram_csv(&counts),
            &mut rec,
        )?;
        println!(
            "{kind}: {} judgments, {:.1}% in the outer bins",
            scores.len(),
            100.0 * outer as f64 / scores.len().max(1) as f64
        );
        dists.push(Distribution {
            dataset: *kind,
            n: scores.len(),
            outer_mass: outer as f64 / scores.len().max(1) as f64,
            counts,
        });
        if args.alpha {
            let raters = judgments.iter().map(|j| j.raw_scores.len()).max().unwrap_or(0);
            let items: Vec<Vec<Option<f64>>> = judgments
                .iter()
                .map(|j| (0..raters).map(|r| j.raw_scores.get(r).copied()).collect())
                .collect();
            let alpha = RatingsMatrix::from_items(&items)
                .and_then(|m| krippendorff_alpha(&m))
                .map_err(|e| anyhow::anyhow!("{kind} agreement: {e}"))
                .input()?;
            println!("{kind}: Krippendorff's alpha {alpha:.3}");
            agreement.insert(kind.name(), alpha);
        }
    }
    write_text(
        &ctx.out_dir.join("distribution.json"),
        &serde_json::to_string_pretty(&dists).runtime()?,
        &mut rec,
    )?;
    if args.alpha {
        write_text(
            &ctx.out_dir.join("agreement.json"),
            &serde_json::to_string_pretty(&agreement).runtime()?,
            &mut rec,
        )?;
    }
    rec.finish(
        &Effective {
            bins,
            alpha: args.alpha,
        },
        &ctx.out_dir,
    )?;
    Ok(())
}
