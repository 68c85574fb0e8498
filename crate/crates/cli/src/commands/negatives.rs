use std::fs;
use std::path::{Path, PathBuf};

use umiclab::corpus::FeatureStore;
use umiclab::negatives::{
    build_pos_lexicon, build_similarity_index, generate_bundles, CaptionPool, LexiconTagger, NegativeContext,
    NegativeError, SimilarityIndex,
};

use super::{ensure_features, read_captions, read_features, unique_captions, write_jsonl, Ctx};
use crate::error::{input_error, Classify, CmdResult, Failure};
use crate::manifest::sha256_hex;

/// Directory for cached similarity indices.
pub const CACHE_ENV: &str = "UMICLAB_CACHE";

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    captions: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// Output JSONL (default: bundles.jsonl in --out-dir).
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Loads the image-similarity index from `$UMICLAB_CACHE` when a cached copy
/// for these exact feature bytes exists, and builds and caches it otherwise.
fn similarity_index(features_path: &Path, store: &FeatureStore, k: usize) -> CmdResult<SimilarityIndex> {
    let Some(dir) = std::env::var_os(CACHE_ENV).map(PathBuf::from) else {
        return build_similarity_index(store, k).input();
    };
    let bytes = fs::read(features_path).input()?;
    let key = &sha256_hex(&bytes)[..16];
    let path = dir.join(format!("similarity-{key}-k{k}.json"));
    if let Ok(text) = fs::read_to_string(&path) {
        match serde_json::from_str(&text) {
            Ok(index) => {
                log::info!("similarity index from cache {}", path.display());
                return Ok(index);
            }
            Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
        }
    }
    let index = build_similarity_index(store, k).input()?;
    let saved =
        fs::create_dir_all(&dir).and_then(|_| fs::write(&path, serde_json::to_vec(&index).expect("index serializes")));
    if let Err(e) = saved {
        log::warn!("could not write cache {}: {e}", path.display());
    }
    Ok(index)
}

pub fn run(ctx: &Ctx, args: Args) -> CmdResult<()> {
    let seed = ctx.seed();
    let mut rec = ctx.recorder("gen-negatives", seed);
    let cfg = ctx.config.bundles.clone();
    let store = read_features(&args.features, &mut rec)?;
    let captions = read_captions(&args.captions, &mut rec)?;
    if captions.is_empty() {
        return Err(input_error(format!("{} holds no captions", args.captions.display())));
    }
    ensure_features(&unique_captions(&captions), &store)?;

    let tagger = LexiconTagger;
    let lexicon = build_pos_lexicon(&captions, &tagger).input()?;
    let pool = CaptionPool::new(captions.clone());
    let index = similarity_index(&args.features, &store, cfg.neighbors)?;
    let ctx_neg = NegativeContext {
        lexicon: &lexicon,
        tagger: &tagger,
        pool: &pool,
        index: &index,
    };
    let bundles = generate_bundles(&captions, ctx_neg, &cfg, seed).map_err(|e| match e {
        NegativeError::Corpus(_) | NegativeError::LexiconTooSmall(_) | NegativeError::EmptyInput(_) => {
            Failure::Input(e.into())
        }
        other => Failure::Runtime(other.into()),
    })?;
    let fallbacks = bundles.iter().flat_map(|b| &b.negatives).filter(|n| n.fallback).count();
    let out = ctx.out_path(&args.output, "bundles.jsonl");
    write_jsonl(&out, &bundles, &mut rec)?;
    println!(
        "wrote {} bundles to {} ({fallbacks} fallback negatives)",
        bundles.len(),
        out.display()
    );
    rec.finish(&cfg, &ctx.out_dir)?;
    Ok(())
}
