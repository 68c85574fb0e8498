use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use umiclab::baselines::{Aggregation, DEFAULT_REFERENCES};
use umiclab::corpus::SynthConfig;
use umiclab::evalstats::TieRule;
use umiclab::negatives::BundleConfig;
use umiclab::scorer::{ScorerConfig, Vocab};
use umiclab::trainer::TrainConfig;

use crate::error::{Classify, CmdResult};

/// Scorer shape; the vocabulary and feature dimension come from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerShape {
    pub layers: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub max_regions: usize,
    pub max_tokens: usize,
    pub init_std: f64,
    /// Tokens seen fewer times than this in training map to `[UNK]`.
    pub min_count: usize,
}

impl Default for ScorerShape {
    fn default() -> Self {
        let desk = ScorerConfig::desk(Vocab::build(&[], 1), 1);
        Self {
            layers: desk.layers,
            hidden_dim: desk.hidden_dim,
            heads: desk.heads,
            ffn_dim: desk.ffn_dim,
            max_regions: desk.max_regions,
            max_tokens: desk.max_tokens,
            init_std: desk.init_std,
            min_count: 1,
        }
    }
}

impl ScorerShape {
    pub fn build(&self, vocab: Vocab, feature_dim: usize) -> ScorerConfig {
        ScorerConfig {
            layers: self.layers,
            hidden_dim: self.hidden_dim,
            heads: self.heads,
            ffn_dim: self.ffn_dim,
            max_regions: self.max_regions,
            max_tokens: self.max_tokens,
            init_std: self.init_std,
            ..ScorerConfig::desk(vocab, feature_dim)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    /// References kept per candidate for reference-based metrics.
    pub references: usize,
    /// `None` scores against all references jointly.
    pub aggregation: Option<Aggregation>,
    pub ties: TieRule,
    pub bins: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            references: DEFAULT_REFERENCES,
            aggregation: Some(Aggregation::Average),
            ties: TieRule::Half,
            bins: 10,
        }
    }
}

/// Contents of a `--config` file. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub synth: SynthConfig,
    pub bundles: BundleConfig,
    pub scorer: ScorerShape,
    pub train: TrainConfig,
    pub eval: EvalSettings,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CmdResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))
            .input()?;
        serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("config {}: {e}", path.display()))
            .input()
    }
}
