use super::StatsError;

/// Counts of scores in `bins` equal-width bins over `[0, 1]`. The first bin
/// is `[0, 1/b]` and bin `i > 0` is `(i/b, (i+1)/b]`.
pub fn score_histogram(scores: &[f64], bins: usize) -> Result<Vec<usize>, StatsError> {
    if bins == 0 {
        return Err(StatsError::NoBins);
    }
    let b = bins as f64;
    let mut counts = vec![0; bins];
    for &s in scores {
        if !(0.0..=1.0).contains(&s) {
            return Err(StatsError::OutOfRange(s));
        }
        let mut i = ((s * b).ceil() as usize).saturating_sub(1).min(bins - 1);
        // Correct for rounding in `s * b` against the exact edges.
        if i > 0 && s <= i as f64 / b {
            i -= 1;
        } else if i + 1 < bins && s > (i + 1) as f64 / b {
            i += 1;
        }
        counts[i] += 1;
    }
    Ok(counts)
}

/// `bin_start,bin_end,count` rows.
pub fn histogram_csv(counts: &[usize]) -> String {
    let b = counts.len() as f64;
    let mut out = String::from("bin_start,bin_end,count\n");
    for (i, c) in counts.iter().enumerate() {
        out.push_str(&format!("{},{},{c}\n", i as f64 / b, (i + 1) as f64 / b));
    }
    out
}
