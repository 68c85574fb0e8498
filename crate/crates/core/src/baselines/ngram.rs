use std::collections::HashMap;

pub const MAX_ORDER: usize = 4;

/// Counts of all n-grams of one order.
pub fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if n == 0 {
        return out;
    }
    for w in tokens.windows(n) {
        *out.entry(w).or_insert(0) += 1;
    }
    out
}

/// N-gram counts for orders `1..=max_n` of one caption.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramProfile<'a> {
    /// `orders[n - 1]` holds the n-gram counts.
    pub orders: Vec<HashMap<&'a [String], usize>>,
    pub len: usize,
}

impl<'a> NGramProfile<'a> {
    pub fn new(tokens: &'a [String], max_n: usize) -> Self {
        Self {
            orders: (1..=max_n).map(|n| ngrams(tokens, n)).collect(),
            len: tokens.len(),
        }
    }

    pub fn order(&self, n: usize) -> &HashMap<&'a [String], usize> {
        &self.orders[n - 1]
    }

    /// `max(0, len - n + 1)`.
    pub fn total(&self, n: usize) -> usize {
        self.order(n).values().sum()
    }
}
