use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::ScorerError;
use crate::corpus::Caption;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";

/// Token vocabulary; ids are positions in the list. Specials come first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Serialize for Vocab {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.tokens.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocab {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let tokens = Vec::<String>::deserialize(d)?;
        Vocab::from_tokens(tokens).map_err(serde::de::Error::custom)
    }
}

impl Vocab {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, ScorerError> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i).is_some() {
                return Err(ScorerError::Config(format!("duplicate vocabulary entry `{t}`")));
            }
        }
        for special in [PAD, UNK, CLS] {
            if !ids.contains_key(special) {
                return Err(ScorerError::Config(format!("vocabulary lacks {special}")));
            }
        }
        Ok(Self { tokens, ids })
    }

    /// Specials followed by every caption token seen at least `min_count`
    /// times, sorted.
    pub fn build<'a>(captions: impl IntoIterator<Item = &'a Caption>, min_count: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for c in captions {
            for t in &c.tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut tokens: Vec<String> = [PAD, UNK, CLS].iter().map(|s| s.to_string()).collect();
        tokens.extend(
            counts
                .into_iter()
                .filter(|&(t, n)| n >= min_count && ![PAD, UNK, CLS].contains(&t))
                .map(|(t, _)| t.to_string()),
        );
        Self::from_tokens(tokens).expect("specials present and tokens unique")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id of `token`, or the `[UNK]` id.
    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(self.ids[UNK])
    }

    pub fn pad_id(&self) -> usize {
        self.ids[PAD]
    }

    pub fn cls_id(&self) -> usize {
        self.ids[CLS]
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub vocab: Vocab,
    pub max_regions: usize,
    pub max_tokens: usize,
    /// Region feature dimension `d`; the projection input is `d + 4`.
    pub feature_dim: usize,
    #[serde(default = "default_ln_eps")]
    pub layer_norm_eps: f64,
    /// Standard deviation of embedding-table initialization.
    #[serde(default = "default_init_std")]
    pub init_std: f64,
}

fn default_ln_eps() -> f64 {
    1e-5
}

fn default_init_std() -> f64 {
    0.02
}

impl ScorerConfig {
    /// Desk-scale shape: 2 layers, hidden 128, 4 heads.
    pub fn desk(vocab: Vocab, feature_dim: usize) -> Self {
        Self {
            layers: 2,
            hidden_dim: 128,
            heads: 4,
            ffn_dim: 256,
            vocab,
            max_regions: 36,
            max_tokens: 32,
            feature_dim,
            layer_norm_eps: default_ln_eps(),
            init_std: default_init_std(),
        }
    }

    pub fn validate(&self) -> Result<(), ScorerError> {
        let positive = [
            ("layers", self.layers),
            ("hidden_dim", self.hidden_dim),
            ("heads", self.heads),
            ("ffn_dim", self.ffn_dim),
            ("max_regions", self.max_regions),
            ("max_tokens", self.max_tokens),
            ("feature_dim", self.feature_dim),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ScorerError::Config(format!("{name} must be positive")));
        }
        if !self.hidden_dim.is_multiple_of(self.heads) {
            return Err(ScorerError::Config(format!(
                "hidden_dim {} is not divisible by heads {}",
                self.hidden_dim, self.heads
            )));
        }
        if !(self.layer_norm_eps > 0.0 && self.init_std > 0.0) {
            return Err(ScorerError::Config(
                "layer_norm_eps and init_std must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.heads
    }
}
