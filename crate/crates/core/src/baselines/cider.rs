use std::collections::{BTreeMap, HashMap};

use super::ngram::{ngrams, MAX_ORDER};
use super::BaselineError;

/// Document frequencies of reference n-grams, one document per image.
#[derive(Debug, Clone, PartialEq)]
pub struct CiderCorpusStats {
    /// `df[n - 1]` maps an n-gram to the number of images whose references contain it.
    pub df: Vec<HashMap<Vec<String>, usize>>,
    pub num_images: usize,
}

/// Ordered so that norms and dot products sum in a fixed order and repeated
/// calls agree bit for bit.
type TfIdf<'a> = (BTreeMap<&'a [String], f64>, f64);

impl CiderCorpusStats {
    /// `references[i]` holds the reference captions of image `i`.
    pub fn new(references: &[Vec<Vec<String>>]) -> Result<Self, BaselineError> {
        if references.len() < 2 {
            return Err(BaselineError::CorpusTooSmall(references.len()));
        }
        let mut df: Vec<HashMap<Vec<String>, usize>> = vec![HashMap::new(); MAX_ORDER];
        for refs in references {
            for (n, table) in (1..=MAX_ORDER).zip(df.iter_mut()) {
                let mut seen: Vec<&[String]> = refs.iter().flat_map(|r| ngrams(r, n).into_keys()).collect();
                seen.sort();
                seen.dedup();
                for g in seen {
                    *table.entry(g.to_vec()).or_insert(0) += 1;
                }
            }
        }
        Ok(Self {
            df,
            num_images: references.len(),
        })
    }

    pub fn idf(&self, n: usize, gram: &[String]) -> f64 {
        let df = self.df[n - 1].get(gram).copied().unwrap_or(0).max(1);
        (self.num_images as f64 / df as f64).ln()
    }

    fn weigh<'a>(&self, n: usize, counts: &HashMap<&'a [String], usize>) -> TfIdf<'a> {
        let v: BTreeMap<&[String], f64> = counts.iter().map(|(g, &c)| (*g, c as f64 * self.idf(n, g))).collect();
        let norm = v.values().map(|x| x * x).sum::<f64>().sqrt();
        (v, norm)
    }

    fn vector<'a>(&self, tokens: &'a [String], n: usize) -> TfIdf<'a> {
        self.weigh(n, &ngrams(tokens, n))
    }

    /// Cosine similarity of the TF-IDF weighted order-`n` count vectors;
    /// 0 when either vector is zero.
    pub fn tfidf_cosine(&self, n: usize, a: &HashMap<&[String], usize>, b: &HashMap<&[String], usize>) -> f64 {
        let (av, an) = self.weigh(n, a);
        let (bv, bn) = self.weigh(n, b);
        cosine(&av, an, &bv, bn)
    }

    /// Mean over orders 1..=4 of ten times the mean cosine similarity between
    /// the candidate's and each reference's TF-IDF vectors.
    pub fn score(&self, candidate: &[String], references: &[Vec<String>]) -> Result<f64, BaselineError> {
        if references.is_empty() {
            return Err(BaselineError::NoReferences);
        }
        let mut total = 0.0;
        for n in 1..=MAX_ORDER {
            let (cv, cn) = self.vector(candidate, n);
            let mut sum = 0.0;
            for r in references {
                let (rv, rn) = self.vector(r, n);
                sum += cosine(&cv, cn, &rv, rn);
            }
            total += 10.0 * sum / references.len() as f64;
        }
        Ok(total / MAX_ORDER as f64)
    }
}

fn cosine(a: &BTreeMap<&[String], f64>, an: f64, b: &BTreeMap<&[String], f64>, bn: f64) -> f64 {
    if an == 0.0 || bn == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().filter_map(|(g, x)| b.get(g).map(|y| x * y)).sum();
    dot / (an * bn)
}

/// Scores every candidate of every image; `candidates[i]` are the
/// candidates for image `i`, whose references are `references[i]`.
pub fn cider(candidates: &[Vec<Vec<String>>], references: &[Vec<Vec<String>>]) -> Result<Vec<Vec<f64>>, BaselineError> {
    if candidates.len() != references.len() {
        return Err(BaselineError::Misaligned {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    let stats = CiderCorpusStats::new(references)?;
    candidates
        .iter()
        .zip(references)
        .map(|(cands, refs)| cands.iter().map(|c| stats.score(c, refs)).collect())
        .collect()
}
