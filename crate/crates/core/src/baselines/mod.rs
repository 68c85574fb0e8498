//! Reference-based baseline metrics used for comparison: sentence-level
//! BLEU, ROUGE-L and base-form CIDEr, plus multi-reference aggregation.
//!
//! All functions take pre-tokenized captions (see [`crate::corpus::tokenize`]).

mod bleu;
mod cider;
mod ngram;
mod rouge;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{bleu, BLEU_EPSILON};
pub use cider::{cider, CiderCorpusStats};
pub use ngram::{ngrams, NGramProfile, MAX_ORDER};
pub use rouge::{lcs_len, rouge_l, rouge_l_beta, ROUGE_BETA};

/// References kept per image when more are stored.
pub const DEFAULT_REFERENCES: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("no references given")]
    NoReferences,
    #[error("n-gram order {0} is outside 1..=4")]
    BadOrder(usize),
    #[error("CIDEr needs at least 2 images in the reference corpus, got {0}")]
    CorpusTooSmall(usize),
    #[error("nothing to aggregate")]
    EmptyAggregate,
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("{candidates} candidate groups for {references} reference groups")]
    Misaligned { candidates: usize, references: usize },
}

/// How per-reference scores are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Average,
    Max,
}

pub fn aggregate_over_refs(per_ref: &[f64], mode: Aggregation) -> Result<f64, BaselineError> {
    if per_ref.is_empty() {
        return Err(BaselineError::EmptyAggregate);
    }
    Ok(match mode {
        Aggregation::Average => per_ref.iter().sum::<f64>() / per_ref.len() as f64,
        Aggregation::Max => per_ref.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// First `n` references in stored order.
pub fn truncate_references<T>(refs: &[T], n: usize) -> &[T] {
    &refs[..refs.len().min(n)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Baseline {
    #[serde(rename = "BLEU-1")]
    Bleu1,
    #[serde(rename = "BLEU-4")]
    Bleu4,
    #[serde(rename = "ROUGE-L")]
    RougeL,
    #[serde(rename = "CIDEr")]
    Cider,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [Baseline::Bleu1, Baseline::Bleu4, Baseline::RougeL, Baseline::Cider];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Bleu1 => "BLEU-1",
            Baseline::Bleu4 => "BLEU-4",
            Baseline::RougeL => "ROUGE-L",
            Baseline::Cider => "CIDEr",
        }
    }

    /// Scores `candidate` against `references`.
    ///
    /// With `per_reference = None` each metric uses its own multi-reference
    /// form (clipping against all references for BLEU, max for ROUGE-L, mean
    /// for CIDEr). With `Some(mode)` the candidate is scored against every
    /// reference separately and the scores are combined with `mode`.
    /// `stats` is required for CIDEr and ignored otherwise.
    pub fn score(
        self,
        candidate: &[String],
        references: &[Vec<String>],
        stats: Option<&CiderCorpusStats>,
        per_reference: Option<Aggregation>,
    ) -> Result<f64, BaselineError> {
        if references.is_empty() {
            return Err(BaselineError::NoReferences);
        }
        let joint = |refs: &[Vec<String>]| -> Result<f64, BaselineError> {
            match self {
                Baseline::Bleu1 => bleu(candidate, refs, 1),
                Baseline::Bleu4 => bleu(candidate, refs, 4),
                Baseline::RougeL => rouge_l(candidate, refs),
                Baseline::Cider => {
                    let stats = stats.ok_or(BaselineError::CorpusTooSmall(0))?;
                    stats.score(candidate, refs)
                }
            }
        };
        match per_reference {
            None => joint(references),
            Some(mode) => {
                let scores = references
                    .iter()
                    .map(|r| joint(std::slice::from_ref(r)))
                    .collect::<Result<Vec<_>, _>>()?;
                aggregate_over_refs(&scores, mode)
            }
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        match key.as_str() {
            "bleu1" => Ok(Baseline::Bleu1),
            "bleu4" => Ok(Baseline::Bleu4),
            "rougel" => Ok(Baseline::RougeL),
            "cider" => Ok(Baseline::Cider),
            _ => Err(BaselineError::UnknownMetric(s.to_string())),
        }
    }
}
