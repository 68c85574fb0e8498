use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use umiclab::baselines::{truncate_references, Aggregation, Baseline, CiderCorpusStats};
use umiclab::corpus::Caption;

use super::{read_judgments, read_triplets, write_jsonl, Ctx, ScoreRecord};
use crate::config::EvalSettings;
use crate::error::{Classify, CmdResult};

#[derive(clap::Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["judgments", "triplets"])))]
pub struct Args {
    #[arg(long)]
    judgments: Option<PathBuf>,
    #[arg(long)]
    triplets: Option<PathBuf>,
    /// Comma-separated subset of BLEU-1, BLEU-4, ROUGE-L, CIDEr.
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<String>,
    /// References kept per candidate (first N in stored order).
    #[arg(long)]
    references: Option<usize>,
    /// `average`, `max`, or `joint` (each metric's own multi-reference form).
    #[arg(long)]
    aggregation: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Effective<'a> {
    metrics: &'a [Baseline],
    eval: &'a EvalSettings,
}

/// A candidate and the references it is scored against.
struct Job<'a> {
    candidate: &'a Caption,
    image_id: &'a str,
    references: Vec<Vec<String>>,
}

pub fn run(ctx: &Ctx, args: Args) -> CmdResult<()> {
    let mut rec = ctx.recorder("baselines", ctx.seed());
    let mut settings = ctx.config.eval.clone();
    settings.references = args.references.unwrap_or(settings.references);
    if let Some(a) = &args.aggregation {
        settings.aggregation = match a.as_str() {
            "average" => Some(Aggregation::Average),
            "max" => Some(Aggregation::Max),
            "joint" => None,
            other => return Err(crate::error::input_error(format!("unknown aggregation `{other}`"))),
        };
    }
    let metrics: Vec<Baseline> = if args.metrics.is_empty() {
        Baseline::ALL.to_vec()
    } else {
        args.metrics
            .iter()
            .map(|m| m.parse())
            .collect::<Result<_, _>>()
            .input()?
    };

    let tokens = |refs: &[Caption]| -> Vec<Vec<String>> {
        truncate_references(refs, settings.references)
            .iter()
            .map(|c| c.tokens.clone())
            .collect()
    };
    let judgments;
    let triplets;
    let mut jobs = Vec::new();
    if let Some(p) = &args.judgments {
        judgments = read_judgments(p, &mut rec)?;
        for j in &judgments {
            jobs.push(Job {
                candidate: &j.candidate,
                image_id: &j.image_id,
                references: tokens(&j.references),
            });
        }
    } else {
        triplets = read_triplets(args.triplets.as_ref().expect("clap enforces one source"), &mut rec)?;
        for t in &triplets {
            for c in [&t.candidate_b, &t.candidate_c] {
                jobs.push(Job {
                    candidate: c,
                    image_id: &t.image_id,
                    references: tokens(&t.references_a),
                });
            }
        }
    }
    if let Some(j) = jobs.iter().find(|j| j.references.is_empty()) {
        return Err(crate::error::input_error(format!(
            "candidate `{}` has no references",
            j.candidate.caption_id
        )));
    }

    // Document frequencies over one reference set per image.
    let mut per_image: BTreeMap<&str, &Vec<Vec<String>>> = BTreeMap::new();
    for j in &jobs {
        per_image.entry(j.image_id).or_insert(&j.references);
    }
    let stats = if metrics.contains(&Baseline::Cider) {
        let corpus: Vec<Vec<Vec<String>>> = per_image.values().map(|r| (*r).clone()).collect();
        Some(CiderCorpusStats::new(&corpus).input()?)
    } else {
        None
    };

    let records: Vec<ScoreRecord> = jobs
        .par_iter()
        .flat_map_iter(|j| {
            metrics.iter().map(|m| {
                let result = m.score(&j.candidate.tokens, &j.references, stats.as_ref(), settings.aggregation);
                ScoreRecord {
                    caption_id: j.candidate.caption_id.clone(),
                    metric: m.name().to_string(),
                    score: result.as_ref().ok().copied(),
                    error: result.err().map(|e| e.to_string()),
                }
            })
        })
        .collect();
    let out = ctx.out_path(&args.output, "baselines.jsonl");
    write_jsonl(&out, &records, &mut rec)?;
    println!(
        "wrote {} scores for {} candidates to {}",
        records.len(),
        jobs.len(),
        out.display()
    );
    rec.finish(
        &Effective {
            metrics: &metrics,
            eval: &settings,
        },
        &ctx.out_dir,
    )?;
    Ok(())
}
