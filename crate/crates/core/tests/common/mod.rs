#![allow(dead_code)]

use umiclab::corpus::{generate_synthetic_corpus, Caption, FeatureStore, SynthConfig};
use umiclab::negatives::{
    build_pos_lexicon, build_similarity_index, generate_bundles, BundleConfig, CaptionPool, LexiconTagger,
    NegativeBundle, NegativeContext,
};
use umiclab::scorer::{ScorerConfig, Vocab};

pub struct Fixture {
    pub store: FeatureStore,
    pub captions: Vec<Caption>,
    pub train: Vec<NegativeBundle>,
    pub valid: Vec<NegativeBundle>,
    pub vocab: Vocab,
}

/// Synthetic corpus with bundles for every caption; the last `n_valid`
/// images form the validation split.
pub fn fixture(n_images: usize, n_valid: usize, d: usize, seed: u64) -> Fixture {
    let cfg = SynthConfig {
        n_images,
        d,
        ..SynthConfig::default()
    };
    let corpus = generate_synthetic_corpus(&cfg, seed).unwrap();
    let tagger = LexiconTagger;
    let lexicon = build_pos_lexicon(&corpus.captions, &tagger).unwrap();
    let pool = CaptionPool::new(corpus.captions.clone());
    let index = build_similarity_index(&corpus.store, 3).unwrap();
    let ctx = NegativeContext {
        lexicon: &lexicon,
        tagger: &tagger,
        pool: &pool,
        index: &index,
    };
    let bundles = generate_bundles(&corpus.captions, ctx, &BundleConfig::default(), seed).unwrap();
    let split = format!("img{:05}", n_images - n_valid);
    let (valid, train): (Vec<_>, Vec<_>) = bundles.into_iter().partition(|b| b.image_id() >= split.as_str());
    let vocab = Vocab::build(&corpus.captions, 1);
    Fixture {
        store: corpus.store,
        captions: corpus.captions,
        train,
        valid,
        vocab,
    }
}

pub fn small_scorer(vocab: &Vocab, hidden: usize, layers: usize, d: usize) -> ScorerConfig {
    ScorerConfig {
        layers,
        hidden_dim: hidden,
        heads: 2,
        ffn_dim: 2 * hidden,
        vocab: vocab.clone(),
        max_regions: 8,
        max_tokens: 16,
        feature_dim: d,
        layer_norm_eps: 1e-5,
        init_std: 0.02,
    }
}
