use std::collections::HashMap;

use super::{ngram_counts, MetricError, TokenSeq};

const MAX_ORDER: usize = 4;

/// Sentence-level BLEU against one or more references.
///
/// Clipped n-gram precision for n = 1..4, with add-one smoothing on both
/// numerator and denominator for n >= 2 (so zero unigram overlap still gives
/// 0), geometric mean, times the brevity penalty `min(1, exp(1 - r/c))` where
/// `r` is the reference length closest to the hypothesis length (shorter wins
/// ties).
pub fn bleu_segment(hyp: &TokenSeq, refs: &[TokenSeq]) -> Result<f64, MetricError> {
    if refs.is_empty() {
        return Err(MetricError::NoReferences);
    }
    let hyp_tokens = hyp.tokens();
    let mut log_sum = 0.0;
    for n in 1..=MAX_ORDER {
        let hyp_counts = ngram_counts(hyp_tokens, n);
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in refs {
            for (gram, count) in ngram_counts(r.tokens(), n) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(count);
            }
        }
        let matched: usize = hyp_counts
            .iter()
            .map(|(gram, &c)| c.min(max_ref.get(gram).copied().unwrap_or(0)))
            .sum();
        let total = hyp_tokens.len().saturating_sub(n - 1);
        let precision = if n == 1 {
            if matched == 0 {
                return Ok(0.0);
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        log_sum += precision.ln();
    }
    let geometric = (log_sum / MAX_ORDER as f64).exp();
    Ok((geometric * brevity_penalty(hyp.len(), refs)).clamp(0.0, 1.0))
}

fn brevity_penalty(hyp_len: usize, refs: &[TokenSeq]) -> f64 {
    let closest = refs
        .iter()
        .map(TokenSeq::len)
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .expect("refs nonempty");
    if hyp_len >= closest {
        1.0
    } else {
        (1.0 - closest as f64 / hyp_len as f64).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;

    fn t(s: &str) -> TokenSeq {
        tokenize(s).unwrap()
    }

    #[test]
    fn identity_is_one() {
        for s in ["dog", "a dog", "a dog runs", "a man is riding a red bike down the hill"] {
            assert_eq!(bleu_segment(&t(s), &[t(s)]).unwrap(), 1.0);
        }
    }

    #[test]
    fn no_unigram_overlap_is_zero() {
        assert_eq!(bleu_segment(&t("cats sleep"), &[t("a dog runs")]).unwrap(), 0.0);
    }

    #[test]
    fn worked_example() {
        // p = [3/4, (2+1)/(3+1), (1+1)/(2+1), (0+1)/(1+1)], BP = 1
        let expected = (0.75f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
        let got = bleu_segment(&t("a dog runs fast"), &[t("a dog runs slowly")]).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.658).abs() < 1e-3);
    }

    #[test]
    fn brevity_penalty_applies_to_short_hypotheses() {
        let got = bleu_segment(&t("a dog"), &[t("a dog runs fast")]).unwrap();
        // p = [1, 2/2, 1, 1], BP = exp(1 - 4/2)
        assert!((got - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn closest_reference_length_is_used() {
        let refs = [t("a dog runs fast today"), t("a dog")];
        let got = bleu_segment(&t("a dog"), &refs).unwrap();
        assert_eq!(got, 1.0);
    }

    #[test]
    fn clipping_limits_repeated_words() {
        // unigram: "the" x3 clipped to 1 of 3
        let got = bleu_segment(&t("the the the"), &[t("the cat")]).unwrap();
        let p = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 2.0, 1.0];
        let expected = (p.iter().map(|x: &f64| x.ln()).sum::<f64>() / 4.0).exp();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_refs_rejected() {
        assert_eq!(bleu_segment(&t("a"), &[]), Err(MetricError::NoReferences));
    }
}
