use super::{SynonymLexicon, TokenSeq};

/// Fragmentation and weighting parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

pub fn meteor_segment(hyp: &TokenSeq, reference: &TokenSeq, synonyms: Option<&SynonymLexicon>) -> f64 {
    meteor_segment_with(hyp, reference, synonyms, MeteorParams::default())
}

/// Best score over several references.
pub fn meteor_multi(hyp: &TokenSeq, refs: &[TokenSeq], synonyms: Option<&SynonymLexicon>, params: MeteorParams) -> f64 {
    refs.iter()
        .map(|r| meteor_segment_with(hyp, r, synonyms, params))
        .fold(0.0, f64::max)
}

/// METEOR-style score: unigram alignment in three greedy stages (exact,
/// Porter stem, synonym group), then
/// `F = P·R / (α·P + (1-α)·R)` and `score = F · (1 - γ·(chunks/matches)^β)`.
pub fn meteor_segment_with(
    hyp: &TokenSeq,
    reference: &TokenSeq,
    synonyms: Option<&SynonymLexicon>,
    params: MeteorParams,
) -> f64 {
    let h = hyp.tokens();
    let r = reference.tokens();
    let mut hyp_to_ref: Vec<Option<usize>> = vec![None; h.len()];
    let mut ref_used = vec![false; r.len()];

    align_stage(&mut hyp_to_ref, &mut ref_used, h, r, |w| Some(w.to_string()));
    align_stage(&mut hyp_to_ref, &mut ref_used, h, r, |w| Some(porter_stemmer::stem(w)));
    if let Some(lex) = synonyms.filter(|l| !l.is_empty()) {
        align_stage(&mut hyp_to_ref, &mut ref_used, h, r, |w| {
            lex.canonical(w).map(str::to_string)
        });
    }

    let matches = hyp_to_ref.iter().filter(|m| m.is_some()).count();
    if matches == 0 {
        return 0.0;
    }
    let precision = matches as f64 / h.len() as f64;
    let recall = matches as f64 / r.len() as f64;
    let f_mean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    let chunks = count_chunks(&hyp_to_ref);
    let penalty = params.gamma * (chunks as f64 / matches as f64).powf(params.beta);
    (f_mean * (1.0 - penalty)).clamp(0.0, 1.0)
}

/// Aligns still-unmatched hypothesis tokens left to right. A token prefers the
/// reference position right after its predecessor's match (extending a
/// chunk); otherwise it takes the leftmost free reference token with the same
/// key.
fn align_stage<F>(hyp_to_ref: &mut [Option<usize>], ref_used: &mut [bool], h: &[String], r: &[String], key: F)
where
    F: Fn(&str) -> Option<String>,
{
    let ref_keys: Vec<Option<String>> = r.iter().map(|w| key(w)).collect();
    for i in 0..h.len() {
        if hyp_to_ref[i].is_some() {
            continue;
        }
        let Some(k) = key(&h[i]) else { continue };
        let free = |j: usize| !ref_used[j] && ref_keys[j].as_deref() == Some(k.as_str());
        let continuation = i
            .checked_sub(1)
            .and_then(|p| hyp_to_ref[p])
            .map(|j| j + 1)
            .filter(|&j| j < r.len() && free(j));
        if let Some(j) = continuation.or_else(|| (0..r.len()).find(|&j| free(j))) {
            hyp_to_ref[i] = Some(j);
            ref_used[j] = true;
        }
    }
}

fn count_chunks(hyp_to_ref: &[Option<usize>]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for (i, m) in hyp_to_ref.iter().enumerate() {
        if let Some(j) = *m {
            match prev {
                Some((pi, pj)) if pi + 1 == i && pj + 1 == j => {}
                _ => chunks += 1,
            }
            prev = Some((i, j));
        }
    }
    chunks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;

    fn t(s: &str) -> TokenSeq {
        tokenize(s).unwrap()
    }

    #[test]
    fn two_token_identity() {
        // P = R = F = 1, one chunk over two matches: 1 - 0.5 * (1/2)^3
        assert!((meteor_segment(&t("a dog"), &t("a dog"), None) - 0.9375).abs() < 1e-12);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(meteor_segment(&t("cats sleep"), &t("a dog runs"), None), 0.0);
    }

    #[test]
    fn stem_stage_matches_plural() {
        // one match via stem: P = R = 1, 1 chunk / 1 match -> 1 - 0.5
        let s = meteor_segment(&t("dogs"), &t("dog"), None);
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn synonym_stage_needs_lexicon() {
        let lex = SynonymLexicon::parse("man,guy");
        assert_eq!(meteor_segment(&t("guy"), &t("man"), None), 0.0);
        assert!((meteor_segment(&t("guy"), &t("man"), Some(&lex)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fragmentation_penalty_counts_chunks() {
        // "b a" vs "a b": 2 matches in 2 chunks -> penalty 0.5 * 1^3
        let s = meteor_segment(&t("b a"), &t("a b"), None);
        assert!((s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn precision_recall_weighting() {
        // hyp "a dog" vs ref "a dog runs fast": P = 1, R = 1/2
        let p: f64 = 1.0;
        let r: f64 = 0.5;
        let f = p * r / (0.9 * p + 0.1 * r);
        let expected = f * (1.0 - 0.5 * (0.5f64).powi(3));
        assert!((meteor_segment(&t("a dog"), &t("a dog runs fast"), None) - expected).abs() < 1e-12);
    }

    #[test]
    fn multi_reference_takes_best() {
        let refs = [t("cats sleep"), t("a dog")];
        let best = meteor_multi(&t("a dog"), &refs, None, MeteorParams::default());
        assert!((best - 0.9375).abs() < 1e-12);
    }
}
