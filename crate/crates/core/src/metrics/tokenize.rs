use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Lowercased word tokens of one sentence. Never empty, never contains an
/// empty token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenSeq(Vec<String>);

/// Lowercases `text` and splits it into word tokens. Every character that is
/// neither alphanumeric nor whitespace is treated as punctuation: it breaks
/// the word it touches and is then discarded.
pub fn tokenize(text: &str) -> Result<TokenSeq, MetricError> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    if tokens.is_empty() {
        return Err(MetricError::EmptyCaption(text.to_string()));
    }
    Ok(TokenSeq(tokens))
}

impl TokenSeq {
    /// Builds a sequence from already-normalized tokens.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, MetricError> {
        if tokens.is_empty() || tokens.iter().any(|t| t.is_empty() || t.contains(char::is_whitespace)) {
            return Err(MetricError::EmptyCaption(tokens.join(" ")));
        }
        Ok(TokenSeq(tokens))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl TryFrom<Vec<String>> for TokenSeq {
    type Error = MetricError;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        TokenSeq::from_tokens(tokens)
    }
}

impl From<TokenSeq> for Vec<String> {
    fn from(seq: TokenSeq) -> Self {
        seq.0
    }
}

/// Multiset of the order-`n` n-grams of `tokens`.
pub fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<String> {
        tokenize(text).unwrap().into_tokens()
    }

    #[test]
    fn lowercases_and_splits() {
        assert_eq!(toks("A toddler and a dog"), ["a", "toddler", "and", "a", "dog"]);
    }

    #[test]
    fn strips_punctuation() {
        assert_eq!(toks("dog."), ["dog"]);
        assert_eq!(toks("a man, riding; a bike!"), ["a", "man", "riding", "a", "bike"]);
        assert_eq!(toks("dog's"), ["dog", "s"]);
    }

    #[test]
    fn punctuation_only_is_empty() {
        assert!(matches!(tokenize("!!!"), Err(MetricError::EmptyCaption(_))));
        assert!(tokenize("   ").is_err());
    }

    #[test]
    fn ngram_multiset() {
        let t = toks("a dog a dog");
        let bi = ngram_counts(&t, 2);
        assert_eq!(bi.len(), 2);
        assert_eq!(bi[&t[0..2]], 2);
        assert!(ngram_counts(&t, 5).is_empty());
    }

    #[test]
    fn from_tokens_rejects_blank() {
        assert!(TokenSeq::from_tokens(vec![]).is_err());
        assert!(TokenSeq::from_tokens(vec!["a".into(), "".into()]).is_err());
        assert!(TokenSeq::from_tokens(vec!["a b".into()]).is_err());
    }
}
