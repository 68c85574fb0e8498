use std::cmp::Ordering;

use super::significance::significance;
use super::{CorrelationResult, StatsError, TauVariant};

/// Pair classification of two paired samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    pub n: usize,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in x (including those also tied in y).
    pub ties_x: u64,
    pub ties_y: u64,
    /// Pairs tied in both.
    pub ties_xy: u64,
    /// Sizes of the groups of equal x values, and of equal y values.
    pub x_groups: Vec<usize>,
    pub y_groups: Vec<usize>,
}

impl PairCounts {
    pub fn total_pairs(&self) -> u64 {
        let n = self.n as u64;
        n * n.saturating_sub(1) / 2
    }

    /// `C - D`.
    pub fn score(&self) -> i64 {
        self.concordant as i64 - self.discordant as i64
    }

    pub fn has_ties(&self) -> bool {
        self.ties_x > 0 || self.ties_y > 0
    }
}

fn cmp(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).expect("inputs are checked to be finite")
}

fn group_sizes(sorted: impl Iterator<Item = f64>) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for v in sorted {
        if prev == Some(v) {
            *out.last_mut().unwrap() += 1;
        } else {
            out.push(1);
        }
        prev = Some(v);
    }
    out
}

fn tied_pairs(groups: &[usize]) -> u64 {
    groups.iter().map(|&t| (t as u64) * (t as u64 - 1) / 2).sum()
}

/// Counts strict inversions of `v` while merge-sorting it.
fn inversions(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = inversions(&mut v[..mid], buf) + inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            count += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..]);
    v.copy_from_slice(buf);
    count
}

/// Concordant, discordant and tied pair counts in `O(n log n)`.
pub fn kendall_counts(x: &[f64], y: &[f64]) -> Result<PairCounts, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            got: x.len(),
        });
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(StatsError::Undefined(format!("non-finite value {v}")));
    }
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| cmp(x[a], x[b]).then(cmp(y[a], y[b])));
    let x_groups = group_sizes(idx.iter().map(|&i| x[i]));

    let mut ties_xy = 0;
    let mut run = 1u64;
    for w in idx.windows(2) {
        if x[w[0]] == x[w[1]] && y[w[0]] == y[w[1]] {
            run += 1;
        } else {
            ties_xy += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties_xy += run * (run - 1) / 2;

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let discordant = inversions(&mut ys, &mut Vec::with_capacity(n));
    let y_groups = group_sizes(ys.iter().copied());

    let ties_x = tied_pairs(&x_groups);
    let ties_y = tied_pairs(&y_groups);
    let total = (n as u64) * (n as u64 - 1) / 2;
    let concordant = total + ties_xy - ties_x - ties_y - discordant;
    Ok(PairCounts {
        n,
        concordant,
        discordant,
        ties_x,
        ties_y,
        ties_xy,
        x_groups,
        y_groups,
    })
}

/// `(C - D) / sqrt((n0 - n1)(n0 - n2))`.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    kendall_tau(x, y, TauVariant::TauB)
}

/// `2m(C - D) / (n²(m - 1))` with `m` the smaller number of distinct values.
pub fn kendall_tau_c(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    kendall_tau(x, y, TauVariant::TauC)
}

pub fn kendall_tau(x: &[f64], y: &[f64], variant: TauVariant) -> Result<CorrelationResult, StatsError> {
    let c = kendall_counts(x, y)?;
    let s = c.score() as f64;
    let coefficient = match variant {
        TauVariant::TauB => {
            let n0 = c.total_pairs();
            let denom = ((n0 - c.ties_x) as f64 * (n0 - c.ties_y) as f64).sqrt();
            if denom == 0.0 {
                return Err(StatsError::Undefined("a sample is constant".into()));
            }
            s / denom
        }
        TauVariant::TauC => {
            let m = c.x_groups.len().min(c.y_groups.len());
            if m < 2 {
                return Err(StatsError::Undefined(
                    "a sample has fewer than two distinct values".into(),
                ));
            }
            let n = c.n as f64;
            2.0 * m as f64 * s / (n * n * (m as f64 - 1.0))
        }
    };
    let (p_value, method) = significance(&c);
    Ok(CorrelationResult {
        coefficient: coefficient.clamp(-1.0, 1.0),
        p_value,
        n: c.n,
        variant,
        method,
        concordant: c.concordant,
        discordant: c.discordant,
    })
}
