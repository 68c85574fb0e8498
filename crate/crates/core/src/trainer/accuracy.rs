use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::corpus::FeatureStore;
use crate::negatives::{NegativeBundle, NegativeTag};
use crate::scorer::CaptionScorer;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TagAccuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl TagAccuracy {
    fn add(&mut self, won: bool) {
        self.total += 1;
        self.correct += won as usize;
    }

    fn finish(&mut self) {
        self.accuracy = if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        };
    }
}

/// How often the positive outscores each negative, overall and per tag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub overall: TagAccuracy,
    pub per_tag: BTreeMap<NegativeTag, TagAccuracy>,
}

impl DiscriminationReport {
    pub fn tag(&self, tag: NegativeTag) -> f64 {
        self.per_tag.get(&tag).map_or(0.0, |t| t.accuracy)
    }
}

/// Fraction of (positive, negative) pairs with `score(positive) >
/// score(negative)`, scored against the positive's image. A tie is a miss.
pub fn discrimination_accuracy(
    scorer: &impl CaptionScorer,
    bundles: &[NegativeBundle],
    features: &FeatureStore,
) -> Result<DiscriminationReport, TrainError> {
    let outcomes: Vec<Vec<(NegativeTag, bool)>> = bundles
        .par_iter()
        .map(|b| {
            let img = features
                .get(b.image_id())
                .ok_or_else(|| TrainError::MissingFeatures(b.image_id().to_string()))?;
            let pos = scorer.score_pair(img, &b.positive)?;
            b.negatives
                .iter()
                .map(|n| Ok((n.tag, pos > scorer.score_pair(img, &n.caption)?)))
                .collect()
        })
        .collect::<Result<_, TrainError>>()?;

    let mut report = DiscriminationReport::default();
    for (tag, won) in outcomes.into_iter().flatten() {
        report.overall.add(won);
        report.per_tag.entry(tag).or_default().add(won);
    }
    report.overall.finish();
    report.per_tag.values_mut().for_each(TagAccuracy::finish);
    Ok(report)
}
