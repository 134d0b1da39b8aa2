use std::collections::{HashMap, HashSet};

use super::{ngram_counts, MetricError, TokenSeq};

const MAX_ORDER: usize = 4;
pub const CIDER_MAX: f64 = 10.0;
/// Standard deviation of the length-difference penalty, in tokens.
pub const CIDER_SIGMA: f64 = 6.0;

/// Document frequencies of 1..4-grams over a fixed reference pool. One
/// document is the set of all references for one video.
#[derive(Debug, Clone, Default)]
pub struct NGramProfile {
    documents: usize,
    df: Vec<HashMap<Vec<String>, usize>>,
}

impl NGramProfile {
    pub fn from_documents<'a, I, D>(docs: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a TokenSeq>,
    {
        let mut df: Vec<HashMap<Vec<String>, usize>> = vec![HashMap::new(); MAX_ORDER];
        let mut documents = 0;
        for doc in docs {
            documents += 1;
            let mut seen: Vec<HashSet<&[String]>> = vec![HashSet::new(); MAX_ORDER];
            for seq in doc {
                for n in 1..=MAX_ORDER {
                    seen[n - 1].extend(ngram_counts(seq.tokens(), n).into_keys());
                }
            }
            for (table, grams) in df.iter_mut().zip(seen) {
                for gram in grams {
                    *table.entry(gram.to_vec()).or_insert(0) += 1;
                }
            }
        }
        Self { documents, df }
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn document_frequency(&self, gram: &[String]) -> usize {
        match gram.len() {
            n @ 1..=MAX_ORDER => self.df[n - 1].get(gram).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`; strictly
    /// positive, so n-grams shared by every document still carry weight.
    pub fn idf(&self, gram: &[String]) -> f64 {
        let n = self.documents as f64;
        ((1.0 + n) / (1.0 + self.document_frequency(gram) as f64)).ln() + 1.0
    }
}

/// CIDEr-D style consensus score in `[0, 10]`.
///
/// For each reference and each order `n` in `1..=min(4, |hyp|)`, the cosine of
/// the tf-idf n-gram vectors is taken; the per-reference value is the mean
/// over those orders times `exp(-Δ²/(2σ²))` with `Δ` the length difference.
/// The result is the mean over references, scaled by 10.
pub fn cider_segment(hyp: &TokenSeq, refs: &[TokenSeq], idf: &NGramProfile) -> Result<f64, MetricError> {
    if refs.is_empty() {
        return Err(MetricError::NoReferences);
    }
    let orders = hyp.len().min(MAX_ORDER);
    let hyp_vecs: Vec<Weighted> = (1..=orders).map(|n| Weighted::new(hyp.tokens(), n, idf)).collect();
    let mut total = 0.0;
    for r in refs {
        let mut per_order = 0.0;
        for (n, hv) in (1..=orders).zip(&hyp_vecs) {
            per_order += hv.cosine(&Weighted::new(r.tokens(), n, idf));
        }
        let delta = hyp.len() as f64 - r.len() as f64;
        let length_penalty = (-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA)).exp();
        total += per_order / orders as f64 * length_penalty;
    }
    Ok((CIDER_MAX * total / refs.len() as f64).clamp(0.0, CIDER_MAX))
}

struct Weighted<'a> {
    weights: HashMap<&'a [String], f64>,
    norm: f64,
}

impl<'a> Weighted<'a> {
    fn new(tokens: &'a [String], n: usize, idf: &NGramProfile) -> Self {
        let weights: HashMap<&[String], f64> = ngram_counts(tokens, n)
            .into_iter()
            .map(|(g, c)| (g, c as f64 * idf.idf(g)))
            .collect();
        let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
        Self { weights, norm }
    }

    fn cosine(&self, other: &Weighted) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        let dot: f64 = self
            .weights
            .iter()
            .filter_map(|(g, w)| other.weights.get(g).map(|v| w * v))
            .sum();
        (dot / (self.norm * other.norm)).min(1.0)
    }
}
