use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::BagOfWords;
use crate::error::{Error, Result};
use crate::math;

/// Word vectors keyed by token, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: BTreeMap<String, Vec<f64>>,
    norms: BTreeMap<String, f64>,
}

impl EmbeddingTable {
    /// Builds a table from `(token, vector)` rows. A later row for the same
    /// token replaces the earlier one.
    pub fn new<I>(dimension: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        if dimension == 0 {
            return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
        }
        let mut entries = BTreeMap::new();
        let mut norms = BTreeMap::new();
        for (token, vector) in rows {
            if vector.len() != dimension {
                return Err(Error::DimensionMismatch { token, expected: dimension, found: vector.len() });
            }
            let norm = math::sqrt(vector.iter().map(|x| x * x).sum());
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::ZeroVector(token));
            }
            norms.insert(token.clone(), norm);
            entries.insert(token, vector);
        }
        if entries.is_empty() {
            return Err(Error::NoEmbeddings);
        }
        Ok(Self { dimension, entries, norms })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Cosine similarity of two tokens; 0 when either is out of vocabulary.
    pub fn word_sim(&self, a: &str, b: &str) -> f64 {
        let (Some(va), Some(vb)) = (self.entries.get(a), self.entries.get(b)) else {
            return 0.0;
        };
        if a == b {
            return 1.0;
        }
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        let cos = dot / (self.norms[a] * self.norms[b]);
        cos.clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum IdfMode {
    /// `ln((1 + docs) / (1 + df)) + 1`
    #[default]
    Smoothed,
    /// The raw document frequency used as the weight.
    RawDf,
}

/// Document frequencies over a reference corpus and the IDF weights derived
/// from them.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    doc_count: u64,
    df: BTreeMap<String, u64>,
    mode: IdfMode,
}

impl IdfTable {
    pub fn from_counts<I>(doc_count: u64, df: I, mode: IdfMode) -> Result<Self>
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        if doc_count == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut map = BTreeMap::new();
        for (token, count) in df {
            if count > doc_count {
                return Err(Error::DfExceedsDocs { token, df: count, docs: doc_count });
            }
            map.insert(token, count);
        }
        Ok(Self { doc_count, df: map, mode })
    }

    /// Counts, for every token, the number of documents containing it.
    pub fn build(corpus: &[BagOfWords], mode: IdfMode) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        for doc in corpus {
            let mut seen: Vec<&String> = doc.tokens().iter().collect();
            seen.sort();
            seen.dedup();
            for token in seen {
                *df.entry(token.clone()).or_insert(0) += 1;
            }
        }
        Ok(Self { doc_count: corpus.len() as u64, df, mode })
    }

    pub fn with_mode(mut self, mode: IdfMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> IdfMode {
        self.mode
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn df(&self, token: &str) -> u64 {
        self.df.get(token).copied().unwrap_or(0)
    }

    pub fn document_frequencies(&self) -> impl Iterator<Item = (&str, u64)> {
        self.df.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn weight(&self, token: &str) -> f64 {
        let df = self.df(token) as f64;
        match self.mode {
            IdfMode::Smoothed => math::ln((1.0 + self.doc_count as f64) / (1.0 + df)) + 1.0,
            IdfMode::RawDf => df,
        }
    }
}

/// Embeddings plus IDF weights: everything needed to compare two bags.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    pub embeddings: EmbeddingTable,
    pub idf: IdfTable,
}

impl SimilarityModel {
    pub fn new(embeddings: EmbeddingTable, idf: IdfTable) -> Self {
        Self { embeddings, idf }
    }

    pub fn word_sim(&self, a: &str, b: &str) -> f64 {
        self.embeddings.word_sim(a, b)
    }

    /// Best match of `word` against any token of `bag`; 0 for an empty bag.
    pub fn word_to_bag_sim(&self, word: &str, bag: &BagOfWords) -> f64 {
        bag.tokens()
            .iter()
            .map(|other| self.word_sim(word, other))
            .fold(None, |best: Option<f64>, s| Some(best.map_or(s, |b| b.max(s))))
            .unwrap_or(0.0)
    }

    /// IDF-weighted mean over the words of `query` of their best match in
    /// `text`. Repeated words count once per occurrence.
    pub fn asym_sim(&self, query: &BagOfWords, text: &BagOfWords) -> Result<f64> {
        if query.is_empty() {
            return Err(Error::EmptyQueryBag);
        }
        let mut weighted = 0.0;
        let mut total = 0.0;
        let mut plain = 0.0;
        for word in query.tokens() {
            let sim = self.word_to_bag_sim(word, text);
            let idf = self.idf.weight(word);
            weighted += sim * idf;
            total += idf;
            plain += sim;
        }
        if total > 0.0 {
            Ok(weighted / total)
        } else {
            // Only reachable with raw-df weights when no query word was seen
            // in the reference corpus.
            Ok(plain / query.len() as f64)
        }
    }

    pub fn sym_sim(&self, a: &BagOfWords, b: &BagOfWords) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyBag);
        }
        Ok((self.asym_sim(a, b)? + self.asym_sim(b, a)?) / 2.0)
    }

    /// `sym_sim`, with 0 when either bag is empty.
    pub fn sym_sim_or_zero(&self, a: &BagOfWords, b: &BagOfWords) -> f64 {
        self.sym_sim(a, b).unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::string::ToString;

    fn bag(tokens: &[&str]) -> BagOfWords {
        BagOfWords::from_tokens(tokens.iter().copied())
    }

    fn table(rows: &[(&str, &[f64])]) -> EmbeddingTable {
        let dim = rows[0].1.len();
        EmbeddingTable::new(dim, rows.iter().map(|(t, v)| (t.to_string(), v.to_vec()))).unwrap()
    }

    fn flat_idf() -> IdfTable {
        IdfTable::from_counts(1, vec![], IdfMode::RawDf).unwrap()
    }

    #[test]
    fn word_sim_cases() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0]), ("c", &[1.0, 1.0])]);
        assert_eq!(t.word_sim("a", "a"), 1.0);
        assert_eq!(t.word_sim("a", "b"), 0.0);
        assert!((t.word_sim("c", "a") - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert_eq!(t.word_sim("a", "zzz"), 0.0);
        assert_eq!(t.word_sim("zzz", "zzz"), 0.0);
    }

    #[test]
    fn table_validation() {
        let bad = EmbeddingTable::new(2, vec![("a".to_string(), vec![1.0, 2.0, 3.0])]);
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
        let zero = EmbeddingTable::new(2, vec![("a".to_string(), vec![0.0, 0.0])]);
        assert_eq!(zero, Err(Error::ZeroVector("a".into())));
        assert_eq!(EmbeddingTable::new(2, vec![]), Err(Error::NoEmbeddings));
    }

    #[test]
    fn idf_smoothed_values() {
        let corpus = vec![bag(&["thread", "kill"]), bag(&["thread", "start"])];
        let idf = IdfTable::build(&corpus, IdfMode::Smoothed).unwrap();
        assert_eq!(idf.df("thread"), 2);
        assert!((idf.weight("thread") - 1.0).abs() < 1e-12);
        assert!((idf.weight("kill") - 1.4054651081081644).abs() < 1e-4);
        assert!((idf.weight("unseen") - 2.09861228866811).abs() < 1e-4);
        assert_eq!(IdfTable::build(&[], IdfMode::Smoothed), Err(Error::EmptyCorpus));
        assert_eq!(idf.clone().with_mode(IdfMode::RawDf).weight("thread"), 2.0);
    }

    #[test]
    fn word_to_bag_takes_max() {
        let t = table(&[("w", &[1.0, 0.0]), ("x", &[0.3, 0.9539392014169456]), ("y", &[0.8, 0.6])]);
        let m = SimilarityModel::new(t, flat_idf());
        assert!((m.word_to_bag_sim("w", &bag(&["x", "y"])) - 0.8).abs() < 1e-12);
        assert_eq!(m.word_to_bag_sim("w", &bag(&[])), 0.0);
        assert_eq!(m.word_to_bag_sim("w", &bag(&["x", "w"])), 1.0);
    }

    #[test]
    fn asym_weighted_mean() {
        // sims 0.5 and 1.0, idf weights 1 and 3
        let t = table(&[("p", &[1.0, 0.0]), ("q", &[0.5, 0.8660254037844386]), ("r", &[0.0, 1.0])]);
        let idf = IdfTable::from_counts(10, vec![("p".to_string(), 1), ("r".to_string(), 3)], IdfMode::RawDf).unwrap();
        let m = SimilarityModel::new(t, idf);
        let s = m.asym_sim(&bag(&["p", "r"]), &bag(&["q", "r"])).unwrap();
        // p -> max(cos(p,q)=0.5, cos(p,r)=0) = 0.5 ; r -> 1.0
        assert!((s - 0.875).abs() < 1e-12);
        assert_eq!(m.asym_sim(&bag(&[]), &bag(&["p"])), Err(Error::EmptyQueryBag));
    }

    #[test]
    fn sym_cases() {
        let t = table(&[("a", &[1.0, 0.2]), ("b", &[0.1, 1.0]), ("c", &[0.7, 0.7])]);
        let corpus = vec![bag(&["a"]), bag(&["a", "b"])];
        let m = SimilarityModel::new(t, IdfTable::build(&corpus, IdfMode::Smoothed).unwrap());
        let q = bag(&["a", "b"]);
        let s = bag(&["c"]);
        let expected = (m.asym_sim(&q, &s).unwrap() + m.asym_sim(&s, &q).unwrap()) / 2.0;
        assert_eq!(m.sym_sim(&q, &s).unwrap(), expected);
        assert_eq!(m.sym_sim(&q, &s).unwrap(), m.sym_sim(&s, &q).unwrap());
        assert_eq!(m.sym_sim(&q, &q).unwrap(), 1.0);
        assert_eq!(m.asym_sim(&bag(&["a"]), &q).unwrap(), 1.0);
        assert_eq!(m.sym_sim(&q, &bag(&[])), Err(Error::EmptyBag));
        assert_eq!(m.sym_sim_or_zero(&q, &bag(&[])), 0.0);
    }
}
