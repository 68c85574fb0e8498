use super::BaselineError;

/// Recall weight of the ROUGE-L F-measure.
pub const ROUGE_BETA: f64 = 1.2;

/// Length of the longest common subsequence.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(candidate: &[String], references: &[Vec<String>]) -> Result<f64, BaselineError> {
    rouge_l_beta(candidate, references, ROUGE_BETA)
}

/// Maximum over references of `(1 + β²) P R / (R + β² P)`.
pub fn rouge_l_beta(candidate: &[String], references: &[Vec<String>], beta: f64) -> Result<f64, BaselineError> {
    if references.is_empty() {
        return Err(BaselineError::NoReferences);
    }
    let b2 = beta * beta;
    Ok(references
        .iter()
        .map(|r| {
            let lcs = lcs_len(candidate, r);
            if lcs == 0 {
                return 0.0;
            }
            let p = lcs as f64 / candidate.len() as f64;
            let rec = lcs as f64 / r.len() as f64;
            (1.0 + b2) * p * rec / (rec + b2 * p)
        })
        .fold(0.0, f64::max))
}
