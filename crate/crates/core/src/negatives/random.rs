use std::collections::HashMap;

use rand::Rng;

use super::similarity::SimilarityIndex;
use super::NegativeError;
use crate::corpus::Caption;

/// Captions grouped by image for negative sampling.
#[derive(Debug, Clone)]
pub struct CaptionPool {
    captions: Vec<Caption>,
    by_image: HashMap<String, Vec<usize>>,
}

impl CaptionPool {
    pub fn new(captions: Vec<Caption>) -> Self {
        let mut by_image: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, c) in captions.iter().enumerate() {
            by_image.entry(c.image_id.clone()).or_default().push(i);
        }
        Self { captions, by_image }
    }

    pub fn captions(&self) -> &[Caption] {
        &self.captions
    }

    pub fn of_image(&self, image_id: &str) -> impl Iterator<Item = &Caption> {
        self.by_image
            .get(image_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.captions[i])
    }

    pub fn num_images(&self) -> usize {
        self.by_image.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomDraw {
    pub caption: Caption,
    /// Drawn from a similar image.
    pub hard: bool,
    /// The hard branch was chosen but the neighbors had no captions.
    pub hard_fallback: bool,
}

/// Draws a caption of another image: with probability `hard_prob` from the
/// target's nearest neighbors, otherwise uniformly over all other images'
/// captions.
pub fn sample_random_caption(
    pool: &CaptionPool,
    target_image_id: &str,
    index: &SimilarityIndex,
    hard_prob: f64,
    rng: &mut impl Rng,
) -> Result<RandomDraw, NegativeError> {
    if !(0.0..=1.0).contains(&hard_prob) {
        return Err(NegativeError::InvalidProbability(hard_prob));
    }
    let target_count = pool.by_image.get(target_image_id).map_or(0, Vec::len);
    if pool.captions.len() == target_count {
        return Err(NegativeError::NoOtherImages(target_image_id.to_string()));
    }

    let mut hard_fallback = false;
    if rng.gen_bool(hard_prob) {
        let candidates: Vec<&Caption> = index
            .neighbors(target_image_id)
            .filter(|n| *n != target_image_id)
            .flat_map(|n| pool.of_image(n))
            .collect();
        if !candidates.is_empty() {
            let pick = candidates[rng.gen_range(0..candidates.len())];
            return Ok(RandomDraw {
                caption: pick.clone(),
                hard: true,
                hard_fallback: false,
            });
        }
        hard_fallback = true;
    }

    loop {
        let pick = &pool.captions[rng.gen_range(0..pool.captions.len())];
        if pick.image_id != target_image_id {
            return Ok(RandomDraw {
                caption: pick.clone(),
                hard: false,
                hard_fallback,
            });
        }
    }
}
