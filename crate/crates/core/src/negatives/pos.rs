use serde::{Deserialize, Serialize};

use crate::corpus::{SYNTH_ACTIONS, SYNTH_COLORS, SYNTH_OBJECTS};

/// Coarse part-of-speech tags. Only `Noun`, `Verb` and `Adj` are eligible for
/// keyword substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Det,
    Adp,
    Pron,
    Conj,
    Aux,
    Adv,
    Num,
    Punct,
    Other,
}

impl PosTag {
    pub const CONTENT: [PosTag; 3] = [PosTag::Verb, PosTag::Adj, PosTag::Noun];

    pub fn is_content(self) -> bool {
        matches!(self, PosTag::Noun | PosTag::Verb | PosTag::Adj)
    }
}

/// Word-level tagger injected into lexicon building and substitution.
pub trait PosTagger: Sync {
    fn tag(&self, word: &str) -> PosTag;
}

impl<F> PosTagger for F
where
    F: Fn(&str) -> PosTag + Sync,
{
    fn tag(&self, word: &str) -> PosTag {
        self(word)
    }
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "each", "every", "another",
];
const ADPOSITIONS: &[&str] = &[
    "in", "on", "at", "of", "with", "near", "beside", "behind", "under", "over", "by", "to", "from", "into", "onto",
    "next", "front", "inside", "outside", "through", "across", "along", "around", "for", "up", "down", "while",
];
const PRONOUNS: &[&str] = &[
    "he", "she", "it", "they", "his", "her", "its", "their", "there", "someone", "who",
];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "as"];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "has", "have", "had", "can",
];
const ADVERBS: &[&str] = &["together", "very", "also", "not", "very", "outdoors", "away", "here"];
const NUMBERS: &[&str] = &["one", "two", "three", "four", "five", "six", "several", "many"];

/// Closed-class word lists plus the synthetic vocabulary, with suffix rules
/// for open-class words it has not seen.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconTagger;

impl PosTagger for LexiconTagger {
    fn tag(&self, word: &str) -> PosTag {
        let w = word;
        if w.chars().all(|c| !c.is_alphanumeric()) {
            return PosTag::Punct;
        }
        if w.chars().all(|c| c.is_ascii_digit()) || NUMBERS.contains(&w) {
            return PosTag::Num;
        }
        let lists: [(&[&str], PosTag); 10] = [
            (DETERMINERS, PosTag::Det),
            (ADPOSITIONS, PosTag::Adp),
            (PRONOUNS, PosTag::Pron),
            (CONJUNCTIONS, PosTag::Conj),
            (AUXILIARIES, PosTag::Aux),
            (ADVERBS, PosTag::Adv),
            (SYNTH_COLORS, PosTag::Adj),
            (SYNTH_ACTIONS, PosTag::Verb),
            (SYNTH_OBJECTS, PosTag::Noun),
            (
                &[
                    "big", "small", "large", "little", "young", "old", "tall", "empty", "wooden",
                ],
                PosTag::Adj,
            ),
        ];
        if let Some((_, tag)) = lists.iter().find(|(list, _)| list.contains(&w)) {
            return *tag;
        }
        if w.len() > 4 && (w.ends_with("ing") || w.ends_with("ed")) {
            PosTag::Verb
        } else if w.len() > 4 && w.ends_with("ly") {
            PosTag::Adv
        } else if w.len() > 5 && ["ous", "ful", "ive", "ish", "less"].iter().any(|s| w.ends_with(s)) {
            PosTag::Adj
        } else {
            PosTag::Noun
        }
    }
}
