use std::collections::HashMap;
use std::path::Path;

use super::MetricError;

/// Synonym equivalence groups. Each line of the source text is one group of
/// comma-separated lowercase words; groups sharing a word are merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymLexicon {
    canonical: HashMap<String, String>,
}

impl SynonymLexicon {
    pub fn parse(text: &str) -> Self {
        let mut lexicon = SynonymLexicon::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let words: Vec<String> = line
                .split(',')
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect();
            lexicon.add_group(&words);
        }
        lexicon
    }

    pub fn load(path: &Path) -> Result<Self, MetricError> {
        let text = std::fs::read_to_string(path).map_err(|e| MetricError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self::parse(&text))
    }

    pub fn add_group(&mut self, words: &[String]) {
        let Some(first) = words.first() else { return };
        let target = words
            .iter()
            .find_map(|w| self.canonical.get(w).cloned())
            .unwrap_or_else(|| first.clone());
        // merge any other groups this one touches into `target`
        let absorbed: Vec<String> = words
            .iter()
            .filter_map(|w| self.canonical.get(w))
            .filter(|c| **c != target)
            .cloned()
            .collect();
        if !absorbed.is_empty() {
            for value in self.canonical.values_mut() {
                if absorbed.contains(value) {
                    *value = target.clone();
                }
            }
        }
        for w in words {
            self.canonical.insert(w.clone(), target.clone());
        }
    }

    /// Group representative of `word`, if the word is listed.
    pub fn canonical(&self, word: &str) -> Option<&str> {
        self.canonical.get(word).map(String::as_str)
    }

    /// `word`'s representative, or the word itself when unlisted.
    pub fn normalize<'a>(&'a self, word: &'a str) -> &'a str {
        self.canonical(word).unwrap_or(word)
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_and_merging() {
        let lex = SynonymLexicon::parse("man, guy\n# comment\n\nguy, bloke\ncar,automobile");
        assert_eq!(lex.canonical("bloke"), lex.canonical("man"));
        assert_eq!(lex.canonical("car"), lex.canonical("automobile"));
        assert_ne!(lex.canonical("car"), lex.canonical("man"));
        assert_eq!(lex.canonical("dog"), None);
        assert_eq!(lex.normalize("dog"), "dog");
    }

    #[test]
    fn bridging_group_merges_two_existing_groups() {
        let lex = SynonymLexicon::parse("a,b\nc,d\nb,c");
        let rep = lex.canonical("a").unwrap();
        assert!(["b", "c", "d"].iter().all(|w| lex.canonical(w) == Some(rep)));
    }
}
