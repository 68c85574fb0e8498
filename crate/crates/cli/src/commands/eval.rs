use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use serde::Serialize;
use umiclab::corpus::{Choice, DatasetKind, JudgmentRecord, TripletRecord};
use umiclab::evalstats::{
    kendall_tau, markdown_table, pascal_accuracy, pascal_outcomes, sign_test, MetricReport, TauVariant, TieRule,
};

use super::{parse_dataset_path, preview, read_judgments, read_triplets, write_text, Ctx, ScoreRecord};
use crate::error::{input_error, Classify, CmdResult};

/// Metric name used for the human judgments themselves.
pub const HUMAN: &str = "Human";

#[derive(clap::Args)]
pub struct Args {
    /// Score JSONL files (`caption_id`, `metric`, `score`); repeatable.
    #[arg(long, required = true)]
    scores: Vec<PathBuf>,
    /// `dataset=path` of a judgment file, or a triplet file for pascal50s; repeatable.
    #[arg(long = "data", required = true, value_parser = parse_dataset_path)]
    data: Vec<(DatasetKind, PathBuf)>,
    /// `dataset=tau-b|tau-c` to override the per-dataset default.
    #[arg(long = "variant", value_parser = parse_variant)]
    variants: Vec<(DatasetKind, TauVariant)>,
    /// Also report the human scores as a metric, a self-correlation check.
    #[arg(long)]
    include_human: bool,
    /// Credit for tied PASCAL50s candidates: `half` or `loss`.
    #[arg(long)]
    ties: Option<String>,
}

fn parse_variant(s: &str) -> Result<(DatasetKind, TauVariant), String> {
    let (kind, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected DATASET=VARIANT, got `{s}`"))?;
    Ok((
        kind.parse().map_err(|e| format!("{e}"))?,
        v.parse().map_err(|e| format!("{e}"))?,
    ))
}

enum Data {
    Judgments(Vec<JudgmentRecord>),
    Triplets(Vec<TripletRecord>),
}

impl Data {
    fn caption_ids(&self) -> Vec<&str> {
        match self {
            Data::Judgments(js) => js.iter().map(|j| j.candidate.caption_id.as_str()).collect(),
            Data::Triplets(ts) => ts
                .iter()
                .flat_map(|t| [t.candidate_b.caption_id.as_str(), t.candidate_c.caption_id.as_str()])
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct Effective {
    variants: BTreeMap<DatasetKind, TauVariant>,
    ties: TieRule,
    include_human: bool,
}

pub fn run(ctx: &Ctx, args: Args) -> CmdResult<()> {
    let mut rec = ctx.recorder("eval", ctx.seed());
    let ties = match args.ties.as_deref() {
        None => ctx.config.eval.ties,
        Some("half") => TieRule::Half,
        Some("loss") => TieRule::Loss,
        Some(other) => return Err(input_error(format!("unknown tie rule `{other}`"))),
    };
    let mut variants: BTreeMap<DatasetKind, TauVariant> = DatasetKind::ALL
        .iter()
        .filter(|d| !d.is_triplet())
        .map(|&d| (d, TauVariant::for_dataset(d)))
        .collect();
    for &(kind, v) in &args.variants {
        if kind.is_triplet() {
            return Err(input_error(format!(
                "{kind} is scored by accuracy and has no tau variant"
            )));
        }
        variants.insert(kind, v);
    }

    // metric -> caption_id -> score
    let mut metrics: BTreeMap<String, HashMap<String, f64>> = BTreeMap::new();
    for path in &args.scores {
        rec.input(path);
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read scores {}: {e}", path.display()))
            .input()?;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r: ScoreRecord = serde_json::from_str(line)
                .map_err(|e| anyhow::anyhow!("scores {} line {}: {e}", path.display(), i + 1))
                .input()?;
            if let Some(s) = r.score {
                metrics.entry(r.metric).or_default().insert(r.caption_id, s);
            }
        }
    }

    let mut reports = Vec::new();
    for (kind, path) in &args.data {
        let data = if kind.is_triplet() {
            Data::Triplets(read_triplets(path, &mut rec)?)
        } else {
            Data::Judgments(read_judgments(path, &mut rec)?)
        };
        let ids = data.caption_ids();
        for (metric, scores) in &metrics {
            if !ids.iter().any(|id| scores.contains_key(*id)) {
                continue;
            }
            let missing: Vec<&str> = ids.iter().copied().filter(|id| !scores.contains_key(*id)).collect();
            if !missing.is_empty() {
                return Err(input_error(format!(
                    "{metric} has no score for {} {kind} caption(s): {}",
                    missing.len(),
                    preview(&missing)
                )));
            }
            reports.push(evaluate(*kind, metric, &data, |id| scores[id], &variants, ties)?);
        }
        if args.include_human {
            reports.push(match &data {
                Data::Judgments(js) => {
                    let by_id: HashMap<&str, f64> = js
                        .iter()
                        .map(|j| (j.candidate.caption_id.as_str(), j.normalized))
                        .collect();
                    evaluate(*kind, HUMAN, &data, |id| by_id[id], &variants, ties)?
                }
                Data::Triplets(ts) => {
                    let (b, c): (Vec<f64>, Vec<f64>) = ts
                        .iter()
                        .map(|t| match t.human_choice {
                            Choice::B => (1.0, 0.0),
                            Choice::C => (0.0, 1.0),
                        })
                        .unzip();
                    triplet_report(*kind, HUMAN, &b, &c, ts, ties)?
                }
            });
        }
    }
    if reports.is_empty() {
        return Err(input_error("no score file covers any caption of the given datasets"));
    }
    reports.sort_by(|a, b| (a.metric.as_str(), a.dataset).cmp(&(b.metric.as_str(), b.dataset)));

    write_text(
        &ctx.out_dir.join("eval-report.json"),
        &serde_json::to_string_pretty(&reports).runtime()?,
        &mut rec,
    )?;
    let table = markdown_table(&reports);
    write_text(&ctx.out_dir.join("eval-table.md"), &table, &mut rec)?;
    print!("{table}");
    rec.finish(
        &Effective {
            variants,
            ties,
            include_human: args.include_human,
        },
        &ctx.out_dir,
    )?;
    Ok(())
}

fn evaluate(
    kind: DatasetKind,
    metric: &str,
    data: &Data,
    score: impl Fn(&str) -> f64,
    variants: &BTreeMap<DatasetKind, TauVariant>,
    ties: TieRule,
) -> CmdResult<MetricReport> {
    match data {
        Data::Judgments(js) => {
            let x: Vec<f64> = js.iter().map(|j| score(&j.candidate.caption_id)).collect();
            let y: Vec<f64> = js.iter().map(|j| j.normalized).collect();
            let r = kendall_tau(&x, &y, variants[&kind])
                .map_err(|e| anyhow::anyhow!("{metric} on {kind}: {e}"))
                .input()?;
            Ok(MetricReport::correlation(kind, metric, &r))
        }
        Data::Triplets(ts) => {
            let b: Vec<f64> = ts.iter().map(|t| score(&t.candidate_b.caption_id)).collect();
            let c: Vec<f64> = ts.iter().map(|t| score(&t.candidate_c.caption_id)).collect();
            triplet_report(kind, metric, &b, &c, ts, ties)
        }
    }
}

fn triplet_report(
    kind: DatasetKind,
    metric: &str,
    b: &[f64],
    c: &[f64],
    ts: &[TripletRecord],
    ties: TieRule,
) -> CmdResult<MetricReport> {
    let choices: Vec<Choice> = ts.iter().map(|t| t.human_choice).collect();
    let acc = pascal_accuracy(b, c, &choices, ties)
        .map_err(|e| anyhow::anyhow!("{metric} on {kind}: {e}"))
        .input()?;
    let (agree, disagree) = pascal_outcomes(b, c, &choices);
    Ok(MetricReport::accuracy(
        kind,
        metric,
        acc,
        Some(sign_test(agree, disagree)),
        choices.len(),
    ))
}
