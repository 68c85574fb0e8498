use super::TrainError;

/// Mean over negatives of `max(0, margin - (s_pos - s_neg))`.
pub fn ranking_loss(s_pos: f64, s_negs: &[f64], margin: f64) -> Result<f64, TrainError> {
    if s_negs.is_empty() {
        return Err(TrainError::NoNegatives);
    }
    let total: f64 = s_negs.iter().map(|&s| hinge(s_pos, s, margin)).sum();
    Ok(total / s_negs.len() as f64)
}

/// NaN propagates instead of being clamped away, so a broken model surfaces
/// as a non-finite loss.
pub(super) fn hinge(s_pos: f64, s_neg: f64, margin: f64) -> f64 {
    let v = margin - (s_pos - s_neg);
    if v.is_nan() {
        v
    } else {
        v.max(0.0)
    }
}

/// Derivatives of [`ranking_loss`] with respect to `s_pos` and each `s_neg`.
/// At the hinge kink the zero branch is taken.
pub(super) fn ranking_loss_grad(s_pos: f64, s_negs: &[f64], margin: f64) -> (f64, Vec<f64>) {
    let k = s_negs.len() as f64;
    let dnegs: Vec<f64> = s_negs
        .iter()
        .map(|&s| if margin - (s_pos - s) > 0.0 { 1.0 / k } else { 0.0 })
        .collect();
    (-dnegs.iter().sum::<f64>(), dnegs)
}
