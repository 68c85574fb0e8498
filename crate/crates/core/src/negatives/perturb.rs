//! Token-level corruptions: keyword substitution, repetition/removal and
//! word-order permutation.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::PosLexicon;
use super::pos::PosTagger;
use super::NegativeError;
use crate::corpus::Caption;

/// How the substitution rate is applied to the eligible (content) tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstitutionMode {
    /// Each content token is selected independently with probability `rate`.
    #[default]
    ExpectedRate,
    /// Exactly `round(rate * eligible)` content tokens are selected.
    ExactCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Substitution {
    pub caption: Caption,
    /// Positions whose token was replaced.
    pub replaced: Vec<usize>,
}

impl Substitution {
    pub fn is_modified(&self) -> bool {
        !self.replaced.is_empty()
    }
}

/// Replaces selected nouns, verbs and adjectives by a different word of the
/// same tag drawn uniformly from `lexicon`. All other tokens stay in place.
pub fn substitute_keywords(
    caption: &Caption,
    lexicon: &PosLexicon,
    tagger: &dyn PosTagger,
    rate: f64,
    mode: SubstitutionMode,
    rng: &mut impl Rng,
) -> Result<Substitution, NegativeError> {
    check_rate(rate)?;
    let tags: Vec<_> = caption.tokens.iter().map(|t| tagger.tag(t)).collect();
    let eligible: Vec<usize> = (0..tags.len())
        .filter(|&i| tags[i].is_content() && lexicon.words(tags[i]).iter().any(|w| *w != caption.tokens[i]))
        .collect();

    let selected: Vec<usize> = match mode {
        SubstitutionMode::ExpectedRate => eligible.iter().copied().filter(|_| rng.gen_bool(rate)).collect(),
        SubstitutionMode::ExactCount => {
            let count = (rate * eligible.len() as f64).round() as usize;
            let mut picked: Vec<usize> = eligible.choose_multiple(rng, count).copied().collect();
            picked.sort_unstable();
            picked
        }
    };

    let mut tokens = caption.tokens.clone();
    for &i in &selected {
        let candidates: Vec<&String> = lexicon.words(tags[i]).iter().filter(|w| **w != tokens[i]).collect();
        tokens[i] = (*candidates.choose(rng).expect("eligible tokens have an alternative")).clone();
    }
    Ok(Substitution {
        caption: Caption::from_tokens(caption.caption_id.clone(), caption.image_id.clone(), tokens)?,
        replaced: selected,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatRemove {
    pub caption: Caption,
    pub repeats: usize,
    pub removes: usize,
}

/// Selects each token with probability `rate`; a selected token is doubled
/// or dropped with equal odds. At least one token always survives.
///
/// Draw order per token: `gen_bool(rate)`, then `gen_bool(0.5)` (true means
/// repeat) if selected.
pub fn repeat_or_remove(caption: &Caption, rate: f64, rng: &mut impl Rng) -> Result<RepeatRemove, NegativeError> {
    check_rate(rate)?;
    let mut tokens = Vec::with_capacity(caption.tokens.len() * 2);
    let (mut repeats, mut removes) = (0, 0);
    for token in &caption.tokens {
        if rng.gen_bool(rate) {
            if rng.gen_bool(0.5) {
                tokens.push(token.clone());
                tokens.push(token.clone());
                repeats += 1;
            } else {
                removes += 1;
            }
        } else {
            tokens.push(token.clone());
        }
    }
    if tokens.is_empty() {
        // Everything was removed: keep the first token.
        tokens.push(caption.tokens[0].clone());
        removes -= 1;
    }
    Ok(RepeatRemove {
        caption: Caption::from_tokens(caption.caption_id.clone(), caption.image_id.clone(), tokens)?,
        repeats,
        removes,
    })
}

/// Uniformly shuffles the tokens, redrawing until the order differs from the
/// input.
pub fn permute_words(caption: &Caption, rng: &mut impl Rng) -> Result<Caption, NegativeError> {
    let tokens = &caption.tokens;
    if tokens.len() < 2 {
        return Err(NegativeError::NotPermutable(caption.caption_id.clone()));
    }
    if tokens.iter().all(|t| *t == tokens[0]) {
        // Every rearrangement reads the same.
        return Err(NegativeError::NotPermutable(caption.caption_id.clone()));
    }
    let mut shuffled = tokens.clone();
    loop {
        shuffled.shuffle(rng);
        if shuffled != *tokens {
            break;
        }
    }
    Ok(Caption::from_tokens(
        caption.caption_id.clone(),
        caption.image_id.clone(),
        shuffled,
    )?)
}

fn check_rate(rate: f64) -> Result<(), NegativeError> {
    if (0.0..=1.0).contains(&rate) {
        Ok(())
    } else {
        Err(NegativeError::InvalidProbability(rate))
    }
}
