//! Rank correlation, pairwise accuracy, rater agreement and score
//! distributions for judging a caption metric against humans.

mod alpha;
mod histogram;
mod kendall;
mod pascal;
mod report;
mod significance;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use alpha::{krippendorff_alpha, RatingsMatrix};
pub use histogram::{histogram_csv, score_histogram};
pub use kendall::{kendall_counts, kendall_tau, kendall_tau_b, kendall_tau_c, PairCounts};
pub use pascal::{pascal_accuracy, pascal_outcomes, sign_test, TieRule};
pub use report::{markdown_table, MetricReport};
pub use significance::{significance, EXACT_MAX_N};

use crate::corpus::DatasetKind;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("inputs have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("correlation is undefined: {0}")]
    Undefined(String),
    #[error("score {0} lies outside [0, 1]")]
    OutOfRange(f64),
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("invalid ratings: {0}")]
    Ratings(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TauVariant {
    TauB,
    TauC,
}

impl TauVariant {
    /// Flickr8k uses tau-c; Composite and CapEval1k use tau-b.
    pub fn for_dataset(kind: DatasetKind) -> Self {
        match kind {
            DatasetKind::Flickr8k => TauVariant::TauC,
            _ => TauVariant::TauB,
        }
    }
}

impl std::str::FromStr for TauVariant {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "b" | "taub" => Ok(TauVariant::TauB),
            "c" | "tauc" => Ok(TauVariant::TauC),
            _ => Err(StatsError::Undefined(format!("unknown tau variant `{s}`"))),
        }
    }
}

/// How a p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignificanceMethod {
    /// Exact null distribution of the score over all permutations.
    Exact,
    /// Normal approximation with the tie-corrected variance.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub coefficient: f64,
    /// Two-sided, against the null of no association.
    pub p_value: f64,
    pub n: usize,
    pub variant: TauVariant,
    pub method: SignificanceMethod,
    pub concordant: u64,
    pub discordant: u64,
}
