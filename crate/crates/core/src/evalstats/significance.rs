use super::kendall::PairCounts;
use super::SignificanceMethod;

/// Largest tie-free sample size tested with the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

/// Number of permutations of `n` items with `k` inversions, for all `k`.
fn inversion_counts(n: usize) -> Vec<u128> {
    let mut dist = vec![1u128];
    for m in 2..=n {
        let len = dist.len() + m - 1;
        let mut next = vec![0u128; len];
        // Prefix sums turn the width-m window sum into O(1) per entry.
        let mut prefix = vec![0u128; dist.len() + 1];
        for (i, v) in dist.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        for (k, slot) in next.iter_mut().enumerate() {
            let hi = (k + 1).min(dist.len());
            let lo = k.saturating_sub(m - 1).min(hi);
            *slot = prefix[hi] - prefix[lo];
        }
        dist = next;
    }
    dist
}

fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

/// Two-sided p-value for `S = C - D` under the null of no association.
///
/// Without ties and for `n ≤ EXACT_MAX_N` the exact permutation
/// distribution of the discordant count is used. Otherwise `S` is compared
/// with a normal distribution using the tie-corrected variance. A test on
/// `S` serves both tau variants.
pub fn significance(c: &PairCounts) -> (f64, SignificanceMethod) {
    let n = c.n;
    if !c.has_ties() && n <= EXACT_MAX_N {
        let dist = inversion_counts(n);
        let total: u128 = dist.iter().sum();
        let d = c.discordant as usize;
        let lower: u128 = dist[..=d].iter().sum();
        let upper: u128 = dist[d..].iter().sum();
        let tail = lower.min(upper) as f64 / total as f64;
        return ((2.0 * tail).min(1.0), SignificanceMethod::Exact);
    }

    let nf = n as f64;
    let poly = |t: usize| {
        let t = t as f64;
        (
            t * (t - 1.0) * (2.0 * t + 5.0),
            t * (t - 1.0),
            t * (t - 1.0) * (t - 2.0),
        )
    };
    let sums = |groups: &[usize]| {
        groups
            .iter()
            .map(|&t| poly(t))
            .fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
    };
    let (xt, x1, x2) = sums(&c.x_groups);
    let (yt, y1, y2) = sums(&c.y_groups);
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let mut var = (v0 - xt - yt) / 18.0 + x1 * y1 / (2.0 * nf * (nf - 1.0));
    if n > 2 {
        var += x2 * y2 / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    }
    if var <= 0.0 {
        return (1.0, SignificanceMethod::Normal);
    }
    let z = c.score() as f64 / var.sqrt();
    (
        erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0),
        SignificanceMethod::Normal,
    )
}
