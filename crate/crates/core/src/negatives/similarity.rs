use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::NegativeError;
use crate::corpus::FeatureStore;

pub const DEFAULT_NEIGHBORS: usize = 3;

/// Nearest-neighbor images by descending similarity, excluding the image
/// itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityIndex {
    pub k: usize,
    neighbors: BTreeMap<String, Vec<(String, f64)>>,
}

impl SimilarityIndex {
    /// Builds an index from externally computed rankings, e.g. a retrieval
    /// model. Lists are truncated to `k`.
    pub fn from_rankings(k: usize, rankings: impl IntoIterator<Item = (String, Vec<(String, f64)>)>) -> Self {
        let neighbors = rankings
            .into_iter()
            .map(|(id, mut list)| {
                list.retain(|(n, _)| *n != id);
                list.truncate(k);
                (id, list)
            })
            .collect();
        Self { k, neighbors }
    }

    pub fn neighbors(&self, image_id: &str) -> impl Iterator<Item = &str> {
        self.neighbors
            .get(image_id)
            .into_iter()
            .flatten()
            .map(|(id, _)| id.as_str())
    }

    pub fn neighbors_with_similarity(&self, image_id: &str) -> &[(String, f64)] {
        self.neighbors.get(image_id).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Ranks every other image by cosine similarity of mean-pooled region
/// features; ties go to the smaller image id.
pub fn build_similarity_index(store: &FeatureStore, k: usize) -> Result<SimilarityIndex, NegativeError> {
    if store.len() < 2 {
        return Err(NegativeError::EmptyInput("similarity index needs at least two images"));
    }
    let pooled: Vec<(&str, Vec<f64>)> = store.iter().map(|f| (f.image_id.as_str(), f.mean_region())).collect();
    let mut neighbors = BTreeMap::new();
    for (i, (id, v)) in pooled.iter().enumerate() {
        let mut ranked: Vec<(String, f64)> = pooled
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (other, w))| (other.to_string(), cosine(v, w)))
            .collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        ranked.truncate(k);
        neighbors.insert(id.to_string(), ranked);
    }
    Ok(SimilarityIndex { k, neighbors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ImageFeatures;
    use ndarray::Array2;

    fn image(id: &str, rows: &[&[f32]]) -> ImageFeatures {
        let d = rows[0].len();
        let regions = Array2::from_shape_vec((rows.len(), d), rows.concat()).unwrap();
        let boxes = Array2::from_shape_fn((rows.len(), 4), |(_, c)| if c < 2 { 0.0 } else { 1.0 });
        ImageFeatures::new(id, regions, boxes).unwrap()
    }

    #[test]
    fn identical_images_are_mutual_top_neighbors() {
        let store = FeatureStore::from_images(vec![
            image("a", &[&[1.0, 2.0, 0.5]]),
            image("b", &[&[1.0, 2.0, 0.5]]),
            image("c", &[&[-3.0, 0.1, 0.0]]),
        ])
        .unwrap();
        let idx = build_similarity_index(&store, 3).unwrap();
        let top_a = &idx.neighbors_with_similarity("a")[0];
        assert_eq!(top_a.0, "b");
        assert!((top_a.1 - 1.0).abs() < 1e-12);
        assert_eq!(idx.neighbors("b").next(), Some("a"));
    }

    #[test]
    fn order_matches_brute_force_cosine() {
        // Mean vectors are mixtures of three orthogonal directions.
        let store = FeatureStore::from_images(vec![
            image("u", &[&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]),
            image("v", &[&[0.0, 1.0, 0.0]]),
            image("w", &[&[0.0, 0.0, 1.0]]),
            image("x", &[&[0.9, 0.1, 0.0], &[0.7, 0.5, 0.2]]),
            image("y", &[&[0.1, 0.2, 0.9]]),
        ])
        .unwrap();
        let idx = build_similarity_index(&store, 4).unwrap();
        let means: Vec<(String, Vec<f64>)> = store.iter().map(|f| (f.image_id.clone(), f.mean_region())).collect();
        for (id, v) in &means {
            let mut oracle: Vec<(String, f64)> = means
                .iter()
                .filter(|(o, _)| o != id)
                .map(|(o, w)| {
                    let dot: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                    let n = (v.iter().map(|a| a * a).sum::<f64>() * w.iter().map(|a| a * a).sum::<f64>()).sqrt();
                    (o.clone(), dot / n)
                })
                .collect();
            oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let got: Vec<&str> = idx.neighbors(id).collect();
            let want: Vec<&str> = oracle.iter().map(|(o, _)| o.as_str()).collect();
            assert_eq!(got, want, "neighbors of {id}");
        }
    }

    #[test]
    fn ties_break_by_id_and_k_clamps() {
        let store = FeatureStore::from_images(vec![
            image("c", &[&[1.0, 0.0]]),
            image("b", &[&[0.0, 1.0]]),
            image("a", &[&[0.0, 1.0]]),
        ])
        .unwrap();
        let idx = build_similarity_index(&store, 10).unwrap();
        assert_eq!(idx.neighbors("c").collect::<Vec<_>>(), ["a", "b"]);
        for id in ["a", "b", "c"] {
            assert_eq!(idx.neighbors(id).count(), 2);
            assert!(idx.neighbors(id).all(|n| n != id));
        }
    }

    #[test]
    fn single_image_is_rejected() {
        let store = FeatureStore::from_images(vec![image("a", &[&[1.0]])]).unwrap();
        assert!(build_similarity_index(&store, 3).is_err());
    }
}
