pub mod baselines;
pub mod dist;
pub mod eval;
pub mod negatives;
pub mod score;
pub mod synth;
pub mod train;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use umiclab::corpus::{
    load_captions, load_image_features, load_judgments, load_triplets, Caption, DatasetKind, FeatureStore,
    JudgmentRecord, TripletRecord,
};
use umiclab::negatives::NegativeBundle;

use crate::config::FileConfig;
use crate::error::{input_error, Classify, CmdResult};
use crate::manifest::Recorder;

pub struct Ctx {
    pub seed: Option<u64>,
    pub config: FileConfig,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Ctx {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// `explicit` when given, else `default` inside the output directory.
    pub fn out_path(&self, explicit: &Option<PathBuf>, default: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out_dir.join(default))
    }

    pub fn recorder(&self, command: &str, seed: u64) -> Recorder {
        let mut rec = Recorder::new(command, seed);
        if let Some(p) = &self.config_path {
            rec.input(p);
        }
        rec
    }
}

pub fn read_features(path: &Path, rec: &mut Recorder) -> CmdResult<FeatureStore> {
    rec.input(path);
    load_image_features(path)
        .map_err(|e| anyhow::anyhow!("features {}: {e}", path.display()))
        .input()
}

pub fn read_captions(path: &Path, rec: &mut Recorder) -> CmdResult<Vec<Caption>> {
    rec.input(path);
    load_captions(path)
        .map_err(|e| anyhow::anyhow!("captions {}: {e}", path.display()))
        .input()
}

pub fn read_judgments(path: &Path, rec: &mut Recorder) -> CmdResult<Vec<JudgmentRecord>> {
    rec.input(path);
    load_judgments(path)
        .map_err(|e| anyhow::anyhow!("judgments {}: {e}", path.display()))
        .input()
}

pub fn read_triplets(path: &Path, rec: &mut Recorder) -> CmdResult<Vec<TripletRecord>> {
    rec.input(path);
    load_triplets(path)
        .map_err(|e| anyhow::anyhow!("triplets {}: {e}", path.display()))
        .input()
}

pub fn read_bundles(path: &Path, rec: &mut Recorder) -> CmdResult<Vec<NegativeBundle>> {
    rec.input(path);
    let text = fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read bundles {}: {e}", path.display()))
        .input()?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bundle: NegativeBundle = serde_json::from_str(line)
            .map_err(|e| anyhow::anyhow!("bundles {} line {}: {e}", path.display(), i + 1))
            .input()?;
        out.push(bundle);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T], rec: &mut Recorder) -> CmdResult<()> {
    umiclab::corpus::write_jsonl(path, records).runtime()?;
    rec.output(path);
    Ok(())
}

pub fn write_text(path: &Path, text: &str, rec: &mut Recorder) -> CmdResult<()> {
    fs::write(path, text)
        .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
        .runtime()?;
    rec.output(path);
    Ok(())
}

/// Parses `dataset=path`.
pub fn parse_dataset_path(s: &str) -> Result<(DatasetKind, PathBuf), String> {
    let (kind, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected DATASET=PATH, got `{s}`"))?;
    Ok((kind.parse().map_err(|e| format!("{e}"))?, PathBuf::from(path)))
}

/// One metric score, the shared record of `score`, `baselines` and `eval`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub caption_id: String,
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Keeps the first caption for each id.
pub fn unique_captions<'a>(captions: impl IntoIterator<Item = &'a Caption>) -> Vec<&'a Caption> {
    let mut seen = HashSet::new();
    captions
        .into_iter()
        .filter(|c| seen.insert(c.caption_id.clone()))
        .collect()
}

pub fn ensure_features(captions: &[&Caption], store: &FeatureStore) -> CmdResult<()> {
    let missing: Vec<&str> = captions
        .iter()
        .filter(|c| !store.contains(&c.image_id))
        .map(|c| c.image_id.as_str())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(input_error(format!(
            "no features for {} image(s): {}",
            missing.len(),
            preview(&missing)
        )))
    }
}

/// First few items and a count of the rest.
pub fn preview<S: AsRef<str>>(items: &[S]) -> String {
    const SHOW: usize = 10;
    let shown: Vec<&str> = items.iter().take(SHOW).map(|s| s.as_ref()).collect();
    let mut out = shown.join(", ");
    if items.len() > SHOW {
        out.push_str(&format!(" and {} more", items.len() - SHOW));
    }
    out
}
