//! Synthetic negative captions: keyword substitution, random (and hard)
//! captions of other images, word repetition/removal, and word-order
//! permutation, assembled into one bundle per positive caption.

mod bundle;
mod lexicon;
mod perturb;
mod pos;
mod random;
mod similarity;

use thiserror::Error;

pub use bundle::{
    generate_bundles, make_negative_bundle, BundleConfig, Negative, NegativeBundle, NegativeContext, NegativeTag,
};
pub use lexicon::{build_pos_lexicon, PosLexicon};
pub use perturb::{permute_words, repeat_or_remove, substitute_keywords, RepeatRemove, Substitution, SubstitutionMode};
pub use pos::{LexiconTagger, PosTag, PosTagger};
pub use random::{sample_random_caption, CaptionPool, RandomDraw};
pub use similarity::{build_similarity_index, cosine, SimilarityIndex, DEFAULT_NEIGHBORS};

use crate::corpus::CorpusError;

#[derive(Debug, Error)]
pub enum NegativeError {
    #[error("lexicon has no {0:?} words")]
    LexiconTooSmall(PosTag),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("caption `{0}` cannot be permuted")]
    NotPermutable(String),
    #[error("no caption of another image is available for image `{0}`")]
    NoOtherImages(String),
    #[error("no caption distinct from positive `{0}` exists")]
    NoDistinctCaption(String),
    #[error("malformed bundle: {0}")]
    MalformedBundle(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}
