//! Data model, file formats and loaders for captions, region features and
//! human-judgment benchmarks.

mod jsonl;
mod synth;
mod tokenize;
mod umf;

use std::collections::HashMap;
use std::path::PathBuf;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use jsonl::{
    load_captions, load_judgments, load_triplets, parse_captions, parse_judgments, parse_triplets, write_jsonl,
};
pub use synth::{
    generate_synthetic_corpus, SceneSpec, SynthConfig, SyntheticCorpus, SYNTH_ACTIONS, SYNTH_COLORS, SYNTH_OBJECTS,
};
pub use tokenize::{detokenize, tokenize};
pub use umf::{encode_image_features, load_image_features, read_image_features, write_image_features, UMF_MAGIC};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate {kind} id `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("not a UMF1 feature file (bad magic)")]
    BadMagic,
    #[error("feature file truncated while reading {0}")]
    Truncated(String),
    #[error("image `{image_id}`: feature dimension {found} disagrees with {expected}")]
    DimensionMismatch {
        image_id: String,
        expected: usize,
        found: usize,
    },
    #[error("image `{0}`: non-finite value in regions or boxes")]
    NonFinite(String),
    #[error("image `{image_id}`: box {row} is not a normalized (x1,y1,x2,y2) box")]
    InvalidBox { image_id: String, row: usize },
    #[error("image `{0}` has no regions")]
    NoRegions(String),
    #[error("score {raw} outside scale [{min}, {max}]")]
    ScoreOutOfRange { raw: f64, min: f64, max: f64 },
    #[error("invalid score scale [{min}, {max}]")]
    InvalidScale { min: f64, max: f64 },
    #[error("caption `{0}` has no tokens")]
    EmptyCaption(String),
    #[error("invalid record: {0}")]
    Invalid(String),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

/// Region features and normalized boxes for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeatures {
    pub image_id: String,
    /// N × d region embeddings.
    pub regions: Array2<f32>,
    /// N × 4 boxes `(x1, y1, x2, y2)` in `[0, 1]`.
    pub boxes: Array2<f32>,
}

impl ImageFeatures {
    pub fn new(image_id: impl Into<String>, regions: Array2<f32>, boxes: Array2<f32>) -> Result<Self> {
        let features = Self {
            image_id: image_id.into(),
            regions,
            boxes,
        };
        features.validate()?;
        Ok(features)
    }

    pub fn num_regions(&self) -> usize {
        self.regions.nrows()
    }

    pub fn dim(&self) -> usize {
        self.regions.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let id = &self.image_id;
        if self.regions.nrows() == 0 {
            return Err(CorpusError::NoRegions(id.clone()));
        }
        if self.boxes.nrows() != self.regions.nrows() || self.boxes.ncols() != 4 {
            return Err(CorpusError::DimensionMismatch {
                image_id: id.clone(),
                expected: self.regions.nrows(),
                found: self.boxes.nrows(),
            });
        }
        if self.regions.iter().chain(self.boxes.iter()).any(|v| !v.is_finite()) {
            return Err(CorpusError::NonFinite(id.clone()));
        }
        for (row, b) in self.boxes.rows().into_iter().enumerate() {
            let in_unit = b.iter().all(|v| (0.0..=1.0).contains(v));
            if !in_unit || b[0] > b[2] || b[1] > b[3] {
                return Err(CorpusError::InvalidBox {
                    image_id: id.clone(),
                    row,
                });
            }
        }
        Ok(())
    }

    /// Mean of the region vectors.
    pub fn mean_region(&self) -> Vec<f64> {
        let n = self.regions.nrows() as f64;
        let mut mean = vec![0.0; self.dim()];
        for row in self.regions.rows() {
            for (m, v) in mean.iter_mut().zip(row.iter()) {
                *m += *v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

/// Caption text associated with one image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CaptionRecord", into = "CaptionRecord")]
pub struct Caption {
    pub caption_id: String,
    pub image_id: String,
    pub tokens: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CaptionRecord {
    caption_id: String,
    image_id: String,
    text: String,
}

impl TryFrom<CaptionRecord> for Caption {
    type Error = CorpusError;

    fn try_from(r: CaptionRecord) -> Result<Self> {
        Caption::new(r.caption_id, r.image_id, r.text)
    }
}

impl From<Caption> for CaptionRecord {
    fn from(c: Caption) -> Self {
        Self {
            caption_id: c.caption_id,
            image_id: c.image_id,
            text: c.text,
        }
    }
}

impl Caption {
    /// Builds a caption from raw text using the canonical tokenizer.
    pub fn new(caption_id: impl Into<String>, image_id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        let caption_id = caption_id.into();
        let tokens = tokenize(&text);
        if tokens.is_empty() {
            return Err(CorpusError::EmptyCaption(caption_id));
        }
        Ok(Self {
            caption_id,
            image_id: image_id.into(),
            tokens,
            text,
        })
    }

    /// Builds a caption from already-canonical tokens.
    pub fn from_tokens(
        caption_id: impl Into<String>,
        image_id: impl Into<String>,
        tokens: Vec<String>,
    ) -> Result<Self> {
        let caption_id = caption_id.into();
        if tokens.is_empty() {
            return Err(CorpusError::EmptyCaption(caption_id));
        }
        Ok(Self {
            caption_id,
            image_id: image_id.into(),
            text: detokenize(&tokens),
            tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Canonical token string, used for textual equality between captions.
    pub fn canonical(&self) -> String {
        detokenize(&self.tokens)
    }
}

/// Inclusive rating scale of a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct ScoreScale {
    pub min: f64,
    pub max: f64,
}

impl From<(f64, f64)> for ScoreScale {
    fn from((min, max): (f64, f64)) -> Self {
        Self { min, max }
    }
}

impl From<ScoreScale> for (f64, f64) {
    fn from(s: ScoreScale) -> Self {
        (s.min, s.max)
    }
}

impl ScoreScale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(CorpusError::InvalidScale { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, raw: f64) -> bool {
        raw >= self.min && raw <= self.max
    }
}

/// Maps `raw` from `scale` linearly onto `[0, 1]`.
pub fn normalize_score(raw: f64, scale: ScoreScale) -> Result<f64> {
    let ScoreScale { min, max } = ScoreScale::new(scale.min, scale.max)?;
    if !raw.is_finite() || raw < min || raw > max {
        return Err(CorpusError::ScoreOutOfRange { raw, min, max });
    }
    Ok(((raw - min) / (max - min)).clamp(0.0, 1.0))
}

/// Human scores for one candidate caption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub image_id: String,
    pub candidate: Caption,
    #[serde(default)]
    pub references: Vec<Caption>,
    pub raw_scores: Vec<f64>,
    pub scale: ScoreScale,
    /// Recomputed from `raw_scores` on load.
    #[serde(default)]
    pub normalized: f64,
    /// Generating system, when the benchmark distinguishes several.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    /// Set on load when the candidate is textually identical to a reference.
    #[serde(default)]
    pub candidate_in_references: bool,
}

impl JudgmentRecord {
    /// Validates scores and fills the derived fields.
    pub fn finalize(mut self) -> Result<Self> {
        let scale = ScoreScale::new(self.scale.min, self.scale.max)?;
        if self.raw_scores.is_empty() {
            return Err(CorpusError::Invalid(format!(
                "candidate `{}` has no rater scores",
                self.candidate.caption_id
            )));
        }
        for &raw in &self.raw_scores {
            if !raw.is_finite() || !scale.contains(raw) {
                return Err(CorpusError::ScoreOutOfRange {
                    raw,
                    min: scale.min,
                    max: scale.max,
                });
            }
        }
        let mean = self.raw_scores.iter().sum::<f64>() / self.raw_scores.len() as f64;
        self.normalized = normalize_score(mean.clamp(scale.min, scale.max), scale)?;
        let cand = self.candidate.canonical();
        self.candidate_in_references = self.references.iter().any(|r| r.canonical() == cand);
        Ok(self)
    }

    pub fn mean_raw(&self) -> f64 {
        self.raw_scores.iter().sum::<f64>() / self.raw_scores.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    B,
    C,
}

/// A pairwise-preference triplet: references `A` and two candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub image_id: String,
    #[serde(rename = "references_A")]
    pub references_a: Vec<Caption>,
    #[serde(rename = "candidate_B")]
    pub candidate_b: Caption,
    #[serde(rename = "candidate_C")]
    pub candidate_c: Caption,
    pub human_choice: Choice,
}

impl TripletRecord {
    pub fn validate(&self) -> Result<()> {
        if self.references_a.is_empty() {
            return Err(CorpusError::Invalid(format!(
                "triplet for image `{}` has no references",
                self.image_id
            )));
        }
        Ok(())
    }
}

/// Benchmarks the harness knows how to bind defaults for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetKind {
    Flickr8k,
    Composite,
    CapEval1k,
    Pascal50s,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 4] = [
        DatasetKind::Flickr8k,
        DatasetKind::Composite,
        DatasetKind::CapEval1k,
        DatasetKind::Pascal50s,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Flickr8k => "Flickr8k",
            DatasetKind::Composite => "Composite",
            DatasetKind::CapEval1k => "CapEval1k",
            DatasetKind::Pascal50s => "PASCAL50s",
        }
    }

    /// Rating scale of the judgment datasets; `None` for triplet data.
    pub fn default_scale(self) -> Option<ScoreScale> {
        match self {
            DatasetKind::Flickr8k => Some(ScoreScale { min: 1.0, max: 4.0 }),
            DatasetKind::Composite | DatasetKind::CapEval1k => Some(ScoreScale { min: 1.0, max: 5.0 }),
            DatasetKind::Pascal50s => None,
        }
    }

    pub fn is_triplet(self) -> bool {
        self == DatasetKind::Pascal50s
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flickr8k" => Ok(DatasetKind::Flickr8k),
            "composite" => Ok(DatasetKind::Composite),
            "capeval1k" => Ok(DatasetKind::CapEval1k),
            "pascal50s" => Ok(DatasetKind::Pascal50s),
            other => Err(CorpusError::Invalid(format!("unknown dataset `{other}`"))),
        }
    }
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Region features indexed by image id. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureStore {
    dim: usize,
    images: Vec<ImageFeatures>,
    index: HashMap<String, usize>,
}

impl FeatureStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            images: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_images(images: Vec<ImageFeatures>) -> Result<Self> {
        let dim = images.first().map_or(0, ImageFeatures::dim);
        let mut store = Self::new(dim);
        for image in images {
            store.insert(image)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, features: ImageFeatures) -> Result<()> {
        features.validate()?;
        if self.images.is_empty() && self.dim == 0 {
            self.dim = features.dim();
        }
        if features.dim() != self.dim {
            return Err(CorpusError::DimensionMismatch {
                image_id: features.image_id.clone(),
                expected: self.dim,
                found: features.dim(),
            });
        }
        if self.index.contains_key(&features.image_id) {
            return Err(CorpusError::Duplicate {
                kind: "image",
                id: features.image_id.clone(),
            });
        }
        self.index.insert(features.image_id.clone(), self.images.len());
        self.images.push(features);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageFeatures> {
        self.index.get(image_id).map(|&i| &self.images[i])
    }

    pub fn contains(&self, image_id: &str) -> bool {
        self.index.contains_key(image_id)
    }

    /// Images in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &ImageFeatures> {
        self.images.iter()
    }

    /// Keeps only the images accepted by `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&ImageFeatures) -> bool) -> Self {
        let images: Vec<_> = self.images.iter().filter(|f| keep(f)).cloned().collect();
        let mut store = Self::new(self.dim);
        for image in images {
            store.index.insert(image.image_id.clone(), store.images.len());
            store.images.push(image);
        }
        store
    }
}
