use super::StatsError;

/// `ratings[r][u]` is rater `r`'s score for item `u`, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMatrix {
    ratings: Vec<Vec<Option<f64>>>,
}

impl RatingsMatrix {
    pub fn new(ratings: Vec<Vec<Option<f64>>>) -> Result<Self, StatsError> {
        if ratings.len() < 2 {
            return Err(StatsError::Ratings(format!(
                "need at least 2 raters, got {}",
                ratings.len()
            )));
        }
        let items = ratings[0].len();
        if ratings.iter().any(|r| r.len() != items) {
            return Err(StatsError::Ratings("raters rate different numbers of items".into()));
        }
        if ratings.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(StatsError::Ratings("non-finite rating".into()));
        }
        let m = Self { ratings };
        if m.item_values().all(|v| v.len() < 2) {
            return Err(StatsError::Ratings("no item has two or more ratings".into()));
        }
        Ok(m)
    }

    /// Builds a matrix from items that each list their ratings, with
    /// `None` where a rater did not rate.
    pub fn from_items(items: &[Vec<Option<f64>>]) -> Result<Self, StatsError> {
        let raters = items.iter().map(Vec::len).max().unwrap_or(0);
        let ratings = (0..raters)
            .map(|r| items.iter().map(|it| it.get(r).copied().flatten()).collect())
            .collect();
        Self::new(ratings)
    }

    pub fn raters(&self) -> usize {
        self.ratings.len()
    }

    pub fn items(&self) -> usize {
        self.ratings[0].len()
    }

    fn item_values(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.items()).map(|u| self.ratings.iter().filter_map(|r| r[u]).collect())
    }
}

/// `Σ_{i≠j} (v_i - v_j)²` over ordered pairs.
fn pair_sq_sum(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    2.0 * n * values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
}

/// Krippendorff's alpha at the interval level, `1 - D_o / D_e` with
/// squared differences, from the coincidence of pairable values. Items with
/// fewer than two ratings are not pairable and are dropped.
pub fn krippendorff_alpha(ratings: &RatingsMatrix) -> Result<f64, StatsError> {
    let units: Vec<Vec<f64>> = ratings.item_values().filter(|v| v.len() >= 2).collect();
    let pooled: Vec<f64> = units.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let d_o = units
        .iter()
        .map(|u| pair_sq_sum(u) / (u.len() as f64 - 1.0))
        .sum::<f64>()
        / n;
    let d_e = pair_sq_sum(&pooled) / (n * (n - 1.0));
    if d_e == 0.0 {
        return Err(StatsError::Undefined("all pairable ratings are identical".into()));
    }
    Ok(1.0 - d_o / d_e)
}
