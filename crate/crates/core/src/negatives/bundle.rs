use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lexicon::PosLexicon;
use super::perturb::{permute_words, repeat_or_remove, substitute_keywords, SubstitutionMode};
use super::pos::PosTagger;
use super::random::{sample_random_caption, CaptionPool, RandomDraw};
use super::similarity::SimilarityIndex;
use super::NegativeError;
use crate::corpus::Caption;
use crate::seed::derive_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NegativeTag {
    Substitute,
    Random,
    RepeatRemove,
    Permute,
}

impl NegativeTag {
    pub const ALL: [NegativeTag; 4] = [
        NegativeTag::Substitute,
        NegativeTag::Random,
        NegativeTag::RepeatRemove,
        NegativeTag::Permute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NegativeTag::Substitute => "SUBSTITUTE",
            NegativeTag::Random => "RANDOM",
            NegativeTag::RepeatRemove => "REPEAT_REMOVE",
            NegativeTag::Permute => "PERMUTE",
        }
    }

    fn id_suffix(self) -> &'static str {
        match self {
            NegativeTag::Substitute => "sub",
            NegativeTag::Random => "rand",
            NegativeTag::RepeatRemove => "rr",
            NegativeTag::Permute => "perm",
        }
    }
}

impl std::fmt::Display for NegativeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One corrupted caption paired with the positive's image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Negative {
    pub tag: NegativeTag,
    /// Caption whose `image_id` is the positive's image.
    #[serde(with = "negative_text")]
    pub caption: Caption,
    /// Image the negative text originally described.
    pub source_image_id: String,
    pub attempts: usize,
    /// The tagged strategy could not change the caption; text came from a random draw.
    #[serde(default)]
    pub fallback: bool,
    #[serde(default)]
    pub hard: bool,
    #[serde(default)]
    pub hard_fallback: bool,
}

/// Negatives travel as bare text; ids are rebuilt from the positive on load.
mod negative_text {
    use super::Caption;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Caption, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&c.text)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Caption, D::Error> {
        let text = String::deserialize(d)?;
        Caption::new("", "", text).map_err(serde::de::Error::custom)
    }
}

/// A positive caption and one negative per strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BundleWire")]
pub struct NegativeBundle {
    pub positive: Caption,
    pub negatives: Vec<Negative>,
    /// Master seed and caption index the bundle rng was derived from.
    pub seed: u64,
    pub index: u64,
}

#[derive(Deserialize)]
struct BundleWire {
    positive: Caption,
    negatives: Vec<Negative>,
    seed: u64,
    index: u64,
}

impl TryFrom<BundleWire> for NegativeBundle {
    type Error = NegativeError;

    fn try_from(w: BundleWire) -> Result<Self, NegativeError> {
        let mut negatives = w.negatives;
        for n in &mut negatives {
            n.caption.caption_id = negative_id(&w.positive, n.tag);
            n.caption.image_id = w.positive.image_id.clone();
        }
        let bundle = NegativeBundle {
            positive: w.positive,
            negatives,
            seed: w.seed,
            index: w.index,
        };
        bundle.validate()?;
        Ok(bundle)
    }
}

fn negative_id(positive: &Caption, tag: NegativeTag) -> String {
    format!("{}#{}", positive.caption_id, tag.id_suffix())
}

impl NegativeBundle {
    pub fn validate(&self) -> Result<(), NegativeError> {
        let mut tags: Vec<_> = self.negatives.iter().map(|n| n.tag).collect();
        tags.sort();
        if tags != NegativeTag::ALL {
            return Err(NegativeError::MalformedBundle(format!(
                "bundle for `{}` must hold one negative per tag, got {tags:?}",
                self.positive.caption_id
            )));
        }
        let pos = self.positive.canonical();
        if let Some(n) = self.negatives.iter().find(|n| n.caption.canonical() == pos) {
            return Err(NegativeError::MalformedBundle(format!(
                "{} negative of `{}` equals the positive",
                n.tag, self.positive.caption_id
            )));
        }
        Ok(())
    }

    pub fn image_id(&self) -> &str {
        &self.positive.image_id
    }

    pub fn negative(&self, tag: NegativeTag) -> Option<&Negative> {
        self.negatives.iter().find(|n| n.tag == tag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BundleConfig {
    pub substitute_rate: f64,
    pub substitution_mode: SubstitutionMode,
    pub hard_prob: f64,
    pub repeat_remove_rate: f64,
    /// Tries per strategy before falling back to a random caption.
    pub max_attempts: usize,
    pub neighbors: usize,
}

impl Default for BundleConfig {
    fn default() -> Self {
        Self {
            substitute_rate: 0.3,
            substitution_mode: SubstitutionMode::ExpectedRate,
            hard_prob: 0.5,
            repeat_remove_rate: 0.3,
            max_attempts: 5,
            neighbors: super::similarity::DEFAULT_NEIGHBORS,
        }
    }
}

/// Shared read-only inputs of the generators.
#[derive(Clone, Copy)]
pub struct NegativeContext<'a> {
    pub lexicon: &'a PosLexicon,
    pub tagger: &'a dyn PosTagger,
    pub pool: &'a CaptionPool,
    pub index: &'a SimilarityIndex,
}

/// Builds the four negatives of `positive`, in tag order.
pub fn make_negative_bundle(
    positive: &Caption,
    ctx: NegativeContext<'_>,
    config: &BundleConfig,
    rng: &mut impl Rng,
) -> Result<NegativeBundle, NegativeError> {
    let pos_text = positive.canonical();
    let attempts_max = config.max_attempts.max(1);
    let mut negatives = Vec::with_capacity(4);

    for tag in NegativeTag::ALL {
        let produced = if tag == NegativeTag::Random {
            Some(draw_distinct(positive, ctx, config, rng)?)
        } else {
            let mut found = None;
            for attempt in 1..=attempts_max {
                let candidate = match tag {
                    NegativeTag::Substitute => {
                        substitute_keywords(
                            positive,
                            ctx.lexicon,
                            ctx.tagger,
                            config.substitute_rate,
                            config.substitution_mode,
                            rng,
                        )?
                        .caption
                    }
                    NegativeTag::RepeatRemove => repeat_or_remove(positive, config.repeat_remove_rate, rng)?.caption,
                    NegativeTag::Permute => match permute_words(positive, rng) {
                        Ok(c) => c,
                        Err(NegativeError::NotPermutable(_)) => break,
                        Err(e) => return Err(e),
                    },
                    NegativeTag::Random => unreachable!(),
                };
                if candidate.canonical() != pos_text {
                    found = Some((
                        RandomDraw {
                            caption: candidate,
                            hard: false,
                            hard_fallback: false,
                        },
                        attempt,
                        positive.image_id.clone(),
                    ));
                    break;
                }
            }
            found
        };

        let negative = match produced {
            Some((draw, attempts, source)) => Negative {
                tag,
                caption: draw.caption,
                source_image_id: source,
                attempts,
                fallback: false,
                hard: draw.hard,
                hard_fallback: draw.hard_fallback,
            },
            None => {
                let (draw, attempts, source) = draw_distinct(positive, ctx, config, rng)?;
                Negative {
                    tag,
                    caption: draw.caption,
                    source_image_id: source,
                    attempts: attempts_max + attempts,
                    fallback: true,
                    hard: draw.hard,
                    hard_fallback: draw.hard_fallback,
                }
            }
        };
        negatives.push(Negative {
            caption: Caption {
                caption_id: negative_id(positive, tag),
                image_id: positive.image_id.clone(),
                text: negative.caption.canonical(),
                tokens: negative.caption.tokens,
            },
            ..negative
        });
    }

    Ok(NegativeBundle {
        positive: positive.clone(),
        negatives,
        seed: 0,
        index: 0,
    })
}

/// Random caption of another image whose text differs from the positive.
fn draw_distinct(
    positive: &Caption,
    ctx: NegativeContext<'_>,
    config: &BundleConfig,
    rng: &mut impl Rng,
) -> Result<(RandomDraw, usize, String), NegativeError> {
    let pos_text = positive.canonical();
    let attempts_max = config.max_attempts.max(1);
    for attempt in 1..=attempts_max {
        let draw = sample_random_caption(ctx.pool, &positive.image_id, ctx.index, config.hard_prob, rng)?;
        if draw.caption.canonical() != pos_text {
            let source = draw.caption.image_id.clone();
            return Ok((draw, attempt, source));
        }
    }
    // Every draw collided; scan from a random offset for any distinct caption.
    let all = ctx.pool.captions();
    let start = rng.gen_range(0..all.len());
    all.iter()
        .cycle()
        .skip(start)
        .take(all.len())
        .find(|c| c.image_id != positive.image_id && c.canonical() != pos_text)
        .map(|c| {
            (
                RandomDraw {
                    caption: c.clone(),
                    hard: false,
                    hard_fallback: false,
                },
                attempts_max + 1,
                c.image_id.clone(),
            )
        })
        .ok_or_else(|| NegativeError::NoDistinctCaption(positive.caption_id.clone()))
}

/// One bundle per positive, each from its own rng stream
/// `derive_rng(seed, "bundle", i)`. Output order follows the input and does
/// not depend on the thread count.
pub fn generate_bundles(
    positives: &[Caption],
    ctx: NegativeContext<'_>,
    config: &BundleConfig,
    seed: u64,
) -> Result<Vec<NegativeBundle>, NegativeError> {
    positives
        .par_iter()
        .enumerate()
        .map(|(i, positive)| {
            let mut rng = derive_rng(seed, "bundle", i as u64);
            let mut bundle = make_negative_bundle(positive, ctx, config, &mut rng)?;
            bundle.seed = seed;
            bundle.index = i as u64;
            Ok(bundle)
        })
        .collect()
}
