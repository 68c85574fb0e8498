use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::pos::{PosTag, PosTagger};
use super::NegativeError;
use crate::corpus::Caption;

/// Content words observed in training captions, grouped by tag in
/// first-seen order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PosLexicon {
    words: BTreeMap<PosTag, Vec<String>>,
}

impl PosLexicon {
    pub fn words(&self, tag: PosTag) -> &[String] {
        self.words.get(&tag).map_or(&[], Vec::as_slice)
    }

    /// Builds a lexicon directly from word lists. Duplicates are dropped.
    pub fn from_lists(lists: impl IntoIterator<Item = (PosTag, Vec<String>)>) -> Result<Self, NegativeError> {
        let mut lex = PosLexicon::default();
        for (tag, words) in lists {
            if !tag.is_content() {
                continue;
            }
            let entry = lex.words.entry(tag).or_default();
            for w in words {
                if !entry.contains(&w) {
                    entry.push(w);
                }
            }
        }
        lex.check()?;
        Ok(lex)
    }

    fn check(&self) -> Result<(), NegativeError> {
        for tag in PosTag::CONTENT {
            if self.words(tag).is_empty() {
                return Err(NegativeError::LexiconTooSmall(tag));
            }
        }
        Ok(())
    }
}

/// Collects every noun, verb and adjective token of `captions` under its tag.
pub fn build_pos_lexicon(captions: &[Caption], tagger: &dyn PosTagger) -> Result<PosLexicon, NegativeError> {
    if captions.is_empty() {
        return Err(NegativeError::EmptyInput("captions"));
    }
    let mut lex = PosLexicon::default();
    let mut seen: HashSet<(PosTag, &str)> = HashSet::new();
    for caption in captions {
        for token in &caption.tokens {
            let tag = tagger.tag(token);
            if tag.is_content() && seen.insert((tag, token.as_str())) {
                lex.words.entry(tag).or_default().push(token.clone());
            }
        }
    }
    lex.check()?;
    Ok(lex)
}
