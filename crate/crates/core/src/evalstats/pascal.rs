use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use super::StatsError;
use crate::corpus::Choice;

/// Credit for a triplet whose two candidates get exactly equal scores.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    #[default]
    Half,
    Loss,
}

/// Fraction of triplets where the metric prefers the candidate the humans
/// chose.
pub fn pascal_accuracy(
    scores_b: &[f64],
    scores_c: &[f64],
    choices: &[Choice],
    ties: TieRule,
) -> Result<f64, StatsError> {
    if scores_b.len() != scores_c.len() {
        return Err(StatsError::LengthMismatch(scores_b.len(), scores_c.len()));
    }
    if scores_b.len() != choices.len() {
        return Err(StatsError::LengthMismatch(scores_b.len(), choices.len()));
    }
    if choices.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    let tie_credit = match ties {
        TieRule::Half => 0.5,
        TieRule::Loss => 0.0,
    };
    let credit: f64 = scores_b
        .iter()
        .zip(scores_c)
        .zip(choices)
        .map(|((b, c), choice)| {
            if b == c {
                tie_credit
            } else if (b > c) == (*choice == Choice::B) {
                1.0
            } else {
                0.0
            }
        })
        .sum();
    Ok(credit / choices.len() as f64)
}

/// Agreements and disagreements between metric and humans, ties excluded.
pub fn pascal_outcomes(scores_b: &[f64], scores_c: &[f64], choices: &[Choice]) -> (usize, usize) {
    let mut agree = 0;
    let mut disagree = 0;
    for ((b, c), choice) in scores_b.iter().zip(scores_c).zip(choices) {
        if b != c {
            if (b > c) == (*choice == Choice::B) {
                agree += 1;
            } else {
                disagree += 1;
            }
        }
    }
    (agree, disagree)
}

/// Two-sided exact sign test of `agree` against `disagree` under p = 1/2.
pub fn sign_test(agree: usize, disagree: usize) -> f64 {
    let m = (agree + disagree) as u64;
    if m == 0 {
        return 1.0;
    }
    let binom = Binomial::new(0.5, m).expect("valid binomial");
    (2.0 * binom.cdf(agree.min(disagree) as u64)).min(1.0)
}
