use std::collections::HashSet;

use super::{SynonymLexicon, TokenSeq};

/// Pluggable sentence-similarity backend in `[0, 1]`.
pub trait SimilarityBackend: Send + Sync {
    fn name(&self) -> &str;
    fn similarity(&self, a: &TokenSeq, b: &TokenSeq) -> f64;
}

/// Lexical stand-in for a semantic similarity service: cosine over binary
/// token-type vectors after synonym canonicalization.
#[derive(Debug, Clone, Default)]
pub struct LexicalSts {
    pub lexicon: Option<SynonymLexicon>,
}

impl SimilarityBackend for LexicalSts {
    fn name(&self) -> &str {
        "lexical-cosine"
    }

    fn similarity(&self, a: &TokenSeq, b: &TokenSeq) -> f64 {
        sts_lexical(a, b, self.lexicon.as_ref())
    }
}

pub fn sts_lexical(s1: &TokenSeq, s2: &TokenSeq, synonyms: Option<&SynonymLexicon>) -> f64 {
    let types = |s: &TokenSeq| -> HashSet<String> {
        s.iter()
            .map(|w| synonyms.map_or(w, |l| l.normalize(w)).to_string())
            .collect()
    };
    let a = types(s1);
    let b = types(s2);
    let overlap = a.intersection(&b).count() as f64;
    (overlap / ((a.len() * b.len()) as f64).sqrt()).clamp(0.0, 1.0)
}
