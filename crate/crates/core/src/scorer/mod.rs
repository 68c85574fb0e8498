//! Cross-modal scorer: a transformer encodes `[CLS]`, image regions and
//! caption tokens jointly, and a linear head with a sigmoid maps the `[CLS]`
//! output to a score in `(0, 1)`.

mod checkpoint;
mod config;
mod params;
mod transformer;

use ndarray::{s, Array1, Array2};
use thiserror::Error;

pub use checkpoint::{
    checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::{ScorerConfig, Vocab, CLS, PAD, UNK};
pub use params::{LayerParams, ScorerParams, TensorMut, TensorRef};
pub use transformer::{EncoderInput, ForwardCache};

use crate::corpus::{Caption, ImageFeatures};
use crate::seed::derive_rng;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("invalid scorer config: {0}")]
    Config(String),
    #[error("caption `{0}` is empty")]
    EmptyCaption(String),
    #[error("image `{image_id}` has feature dimension {found}, model expects {expected}")]
    FeatureDim {
        image_id: String,
        expected: usize,
        found: usize,
    },
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint io on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Joint encoding of one image/caption pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub cls: Array1<f64>,
    /// `1 + N + T` rows: `[CLS]`, regions, tokens.
    pub sequence: Array2<f64>,
}

/// Anything that can jointly encode an image and a caption.
pub trait CrossModalEncoder: Sync {
    fn hidden_dim(&self) -> usize;
    fn encode(&self, features: &ImageFeatures, caption: &Caption) -> Result<Encoding, ScorerError>;
}

/// `sigmoid(w · cls + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub weight: Array1<f64>,
    pub bias: f64,
}

impl LinearHead {
    pub fn logit(&self, cls: &Array1<f64>) -> f64 {
        self.weight.dot(cls) + self.bias
    }

    pub fn score(&self, cls: &Array1<f64>) -> f64 {
        sigmoid(self.logit(cls))
    }
}

const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function, kept strictly inside `(0, 1)`.
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, ONE_MINUS_ULP)
}

/// Encodes an image/caption pair with any encoder and scores it with `head`.
pub fn score_with(
    encoder: &impl CrossModalEncoder,
    head: &LinearHead,
    features: &ImageFeatures,
    caption: &Caption,
) -> Result<f64, ScorerError> {
    Ok(head.score(&encoder.encode(features, caption)?.cls))
}

/// The trainable scorer: encoder parameters plus scoring head.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    pub config: ScorerConfig,
    pub params: ScorerParams,
}

/// Cached forward pass of one pair, used for gradients.
pub struct ScoredPass {
    pub input: EncoderInput,
    pub cache: ForwardCache,
    pub score: f64,
}

impl ScorerModel {
    /// Seeded initialization; the stream is `derive_rng(seed, "scorer-init", 0)`.
    pub fn init(config: ScorerConfig, seed: u64) -> Result<Self, ScorerError> {
        config.validate()?;
        let params = ScorerParams::init(&config, &mut derive_rng(seed, "scorer-init", 0));
        Ok(Self { config, params })
    }

    pub fn from_parts(config: ScorerConfig, params: ScorerParams) -> Result<Self, ScorerError> {
        config.validate()?;
        let expected = ScorerParams::zeros(&config);
        for ((name, want, _), (_, got, _)) in expected.tensors().into_iter().zip(params.tensors()) {
            if want != got {
                return Err(ScorerError::Config(format!(
                    "tensor {name} has shape {got:?}, expected {want:?}"
                )));
            }
        }
        if expected.layers.len() != params.layers.len() {
            return Err(ScorerError::Config("layer count disagrees with config".into()));
        }
        Ok(Self { config, params })
    }

    pub fn head(&self) -> LinearHead {
        LinearHead {
            weight: self.params.head_w.clone(),
            bias: self.params.head_b[0],
        }
    }

    /// Converts a pair into encoder input. Regions beyond `max_regions` and
    /// tokens beyond `max_tokens` are dropped with a warning. Unknown tokens
    /// map to `[UNK]`; `[PAD]` tokens and all-zero regions are masked.
    pub fn prepare(&self, features: &ImageFeatures, caption: &Caption) -> Result<EncoderInput, ScorerError> {
        let cfg = &self.config;
        if caption.tokens.is_empty() {
            return Err(ScorerError::EmptyCaption(caption.caption_id.clone()));
        }
        if features.dim() != cfg.feature_dim {
            return Err(ScorerError::FeatureDim {
                image_id: features.image_id.clone(),
                expected: cfg.feature_dim,
                found: features.dim(),
            });
        }
        let n = features.num_regions().min(cfg.max_regions);
        if n < features.num_regions() {
            log::warn!(
                "image `{}`: truncating {} regions to {}",
                features.image_id,
                features.num_regions(),
                n
            );
        }
        let t = caption.tokens.len().min(cfg.max_tokens);
        if t < caption.tokens.len() {
            log::warn!(
                "caption `{}`: truncating {} tokens to {}",
                caption.caption_id,
                caption.tokens.len(),
                t
            );
        }
        let d = cfg.feature_dim;
        let mut regions = Array2::zeros((n, d + 4));
        regions
            .slice_mut(s![.., ..d])
            .assign(&features.regions.slice(s![..n, ..]).mapv(f64::from));
        regions
            .slice_mut(s![.., d..])
            .assign(&features.boxes.slice(s![..n, ..]).mapv(f64::from));
        let token_ids: Vec<usize> = caption.tokens[..t].iter().map(|tok| cfg.vocab.id(tok)).collect();

        let pad = cfg.vocab.pad_id();
        let mut key_mask = Vec::with_capacity(1 + n + t);
        key_mask.push(true);
        key_mask.extend(regions.rows().into_iter().map(|r| r.iter().any(|v| *v != 0.0)));
        key_mask.extend(token_ids.iter().map(|&id| id != pad));
        Ok(EncoderInput {
            regions,
            token_ids,
            key_mask,
        })
    }

    pub fn encode_input(&self, input: &EncoderInput) -> Encoding {
        let cache = transformer::forward(&self.config, &self.params, input);
        Encoding {
            cls: cache.output.row(0).to_owned(),
            sequence: cache.output,
        }
    }

    pub fn score(&self, features: &ImageFeatures, caption: &Caption) -> Result<f64, ScorerError> {
        score_with(self, &self.head(), features, caption)
    }

    /// Forward pass that keeps the activations for [`ScorerModel::backward`].
    pub fn forward(&self, features: &ImageFeatures, caption: &Caption) -> Result<ScoredPass, ScorerError> {
        let input = self.prepare(features, caption)?;
        let cache = transformer::forward(&self.config, &self.params, &input);
        let cls = cache.output.row(0);
        let score = sigmoid(self.params.head_w.dot(&cls) + self.params.head_b[0]);
        Ok(ScoredPass { input, cache, score })
    }

    /// Adds `dloss/dscore * dscore/dθ` to `grads`.
    pub fn backward(&self, pass: &ScoredPass, dscore: f64, grads: &mut ScorerParams) {
        let s = pass.score;
        let dlogit = dscore * s * (1.0 - s);
        let cls = pass.cache.output.row(0);
        grads.head_w.scaled_add(dlogit, &cls);
        grads.head_b[0] += dlogit;
        let mut doutput = Array2::zeros(pass.cache.output.raw_dim());
        doutput.row_mut(0).assign(&(&self.params.head_w * dlogit));
        transformer::backward(&self.config, &self.params, &pass.input, &pass.cache, &doutput, grads);
    }
}

/// Anything that maps an image/caption pair to a score.
pub trait CaptionScorer: Sync {
    fn score_pair(&self, features: &ImageFeatures, caption: &Caption) -> Result<f64, ScorerError>;
}

impl CaptionScorer for ScorerModel {
    fn score_pair(&self, features: &ImageFeatures, caption: &Caption) -> Result<f64, ScorerError> {
        self.score(features, caption)
    }
}

/// Adapts a closure to [`CaptionScorer`].
pub struct FnScorer<F>(pub F);

impl<F> CaptionScorer for FnScorer<F>
where
    F: Fn(&ImageFeatures, &Caption) -> f64 + Sync,
{
    fn score_pair(&self, features: &ImageFeatures, caption: &Caption) -> Result<f64, ScorerError> {
        Ok((self.0)(features, caption))
    }
}

impl CrossModalEncoder for ScorerModel {
    fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    fn encode(&self, features: &ImageFeatures, caption: &Caption) -> Result<Encoding, ScorerError> {
        Ok(self.encode_input(&self.prepare(features, caption)?))
    }
}
