use super::ngram::{NGramProfile, MAX_ORDER};
use super::BaselineError;

/// Stand-in numerator for an order with no clipped matches.
pub const BLEU_EPSILON: f64 = 1e-9;

/// Sentence-level BLEU with uniform weights over orders `1..=max_n`.
///
/// Clipped counts use the maximum count of each n-gram over all references.
/// Orders longer than the candidate have no n-grams and are left out of the
/// geometric mean. The brevity penalty uses the reference length closest to
/// the candidate length, preferring the shorter one on a tie.
pub fn bleu(candidate: &[String], references: &[Vec<String>], max_n: usize) -> Result<f64, BaselineError> {
    if references.is_empty() {
        return Err(BaselineError::NoReferences);
    }
    if !(1..=MAX_ORDER).contains(&max_n) {
        return Err(BaselineError::BadOrder(max_n));
    }
    if candidate.is_empty() {
        log::warn!("BLEU of an empty candidate is 0");
        return Ok(0.0);
    }
    let cand = NGramProfile::new(candidate, max_n);
    let refs: Vec<NGramProfile> = references.iter().map(|r| NGramProfile::new(r, max_n)).collect();

    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 1..=max_n {
        let total = cand.total(n);
        if total == 0 {
            continue;
        }
        let clipped: usize = cand
            .order(n)
            .iter()
            .map(|(g, &c)| {
                let max_ref = refs
                    .iter()
                    .map(|r| r.order(n).get(g).copied().unwrap_or(0))
                    .max()
                    .unwrap_or(0);
                c.min(max_ref)
            })
            .sum();
        let numerator = if clipped == 0 { BLEU_EPSILON } else { clipped as f64 };
        log_sum += (numerator / total as f64).ln();
        orders += 1;
    }
    let precision = (log_sum / orders as f64).exp();

    let c = candidate.len();
    let r = references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap();
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    Ok((precision * bp).clamp(0.0, 1.0))
}
