//! Text preprocessing and the embedding-based similarity measures.
//!
//! Text is turned into a [`BagOfWords`] by splitting on punctuation, white
//! space, dotted paths and camelCase boundaries, lowercasing, dropping English
//! stopwords and Porter-stemming. Bags are compared with an IDF-weighted,
//! max-over-words cosine similarity (see [`SimilarityModel`]).

mod porter;
mod similarity;
mod stopwords;

use alloc::string::String;
use alloc::vec::Vec;

pub use porter::porter_stem;
pub use similarity::{EmbeddingTable, IdfMode, IdfTable, SimilarityModel};
pub use stopwords::{is_stopword, STOPWORDS_VERSION};

/// Ordered multiset of preprocessed tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BagOfWords {
    tokens: Vec<String>,
}

impl BagOfWords {
    /// Wraps already-preprocessed tokens; empty tokens are dropped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = tokens.into_iter().map(Into::into).filter(|t: &String| !t.is_empty()).collect();
        Self { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.iter().any(|t| t == token)
    }

    /// Tokens joined by single spaces; feeding this back to [`preprocess`]
    /// yields the same bag.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Splits raw text into words at non-alphanumeric characters and camelCase
/// boundaries (`newFixedThreadPool` gives `new fixed thread pool`,
/// `HTTPServer` gives `http server`). Case is preserved.
pub fn split_words(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    for run in text.split(|c: char| !c.is_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        let chars: Vec<char> = run.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let prev = chars[i - 1];
            let cur = chars[i];
            let lower_to_upper = (prev.is_lowercase() || prev.is_numeric()) && cur.is_uppercase();
            let acronym_end = prev.is_uppercase()
                && cur.is_uppercase()
                && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if lower_to_upper || acronym_end {
                words.push(chars[start..i].iter().collect());
                start = i;
            }
        }
        words.push(chars[start..].iter().collect());
    }
    words
}

/// Stems to a fixpoint so that re-preprocessing a bag is the identity.
fn stable_stem(word: &str) -> String {
    let mut current = porter_stem(word);
    for _ in 0..8 {
        let next = porter_stem(&current);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

/// Tokenizes, lowercases, removes stopwords and stems `text`.
///
/// A stem that is itself a stopword (`wills` -> `will`) is dropped as well.
pub fn preprocess(text: &str) -> BagOfWords {
    let tokens = split_words(text)
        .into_iter()
        .map(|w| w.to_lowercase())
        .filter(|w| !is_stopword(w))
        .map(|w| stable_stem(&w))
        .filter(|w| !w.is_empty() && !is_stopword(w))
        .collect();
    BagOfWords { tokens }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn toks(bag: &BagOfWords) -> Vec<&str> {
        bag.tokens().iter().map(String::as_str).collect()
    }

    #[test]
    fn preprocess_query() {
        let bag = preprocess("Killing a running thread");
        assert_eq!(toks(&bag), vec!["kill", "run", "thread"]);
    }

    #[test]
    fn preprocess_empty_and_blank() {
        assert!(preprocess("").is_empty());
        assert!(preprocess("   \t\n").is_empty());
        assert!(preprocess("the of a").is_empty());
    }

    #[test]
    fn dotted_path_and_camel_case() {
        assert_eq!(toks(&preprocess("java.lang.Thread.start")), vec!["java", "lang", "thread", "start"]);
        assert_eq!(
            toks(&preprocess("java.util.concurrent.Executor.newFixedThreadPool")),
            vec!["java", "util", "concurr", "executor", "new", "fix", "thread", "pool"]
        );
        assert_eq!(split_words("HTTPServer parseURL"), vec!["HTTP", "Server", "parse", "URL"]);
    }

    #[test]
    fn duplicates_are_kept() {
        assert_eq!(toks(&preprocess("thread Thread threads")), vec!["thread", "thread", "thread"]);
    }

    #[test]
    fn reprocessing_is_identity() {
        let bag = preprocess("Killing a running thread in Java");
        assert_eq!(preprocess(&bag.joined()), bag);
        let bag = preprocess("agreed generalizations wills");
        assert_eq!(preprocess(&bag.joined()), bag);
    }

    proptest! {
        #[test]
        fn preprocess_idempotent(text in "[A-Za-z .,_()]{0,60}") {
            let bag = preprocess(&text);
            prop_assert_eq!(preprocess(&bag.joined()), bag.clone());
            for t in bag.tokens() {
                prop_assert!(!t.is_empty());
                prop_assert!(!is_stopword(t));
            }
        }
    }
}
