//! API corpus, initial recommendation lists and the base recommenders that
//! produce them.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::text::{preprocess, BagOfWords, SimilarityModel};

/// A documented API (method or class) that can be recommended.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiEntry {
    pub id: String,
    pub path: String,
    pub description: String,
    pub path_bag: BagOfWords,
    pub desc_bag: BagOfWords,
}

impl ApiEntry {
    pub fn new(id: impl Into<String>, path: impl Into<String>, description: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let path = path.into();
        let description = description.into();
        if path.trim().is_empty() {
            return Err(Error::EmptyPath(id));
        }
        let path_bag = preprocess(&path);
        let desc_bag = preprocess(&description);
        Ok(Self { id, path, description, path_bag, desc_bag })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ApiCorpus {
    entries: Vec<ApiEntry>,
    index: BTreeMap<String, usize>,
}

impl ApiCorpus {
    /// Fails on the first repeated id, reporting its 0-based position.
    pub fn new(entries: Vec<ApiEntry>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (position, entry) in entries.iter().enumerate() {
            if index.insert(entry.id.clone(), position).is_some() {
                return Err(Error::DuplicateId { id: entry.id.clone(), position });
            }
        }
        Ok(Self { entries, index })
    }

    pub fn get(&self, id: &str) -> Option<&ApiEntry> {
        self.index.get(id).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[ApiEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Path and description bags of every entry, e.g. as an IDF reference
    /// corpus.
    pub fn documents(&self) -> Vec<BagOfWords> {
        self.entries.iter().flat_map(|e| [e.path_bag.clone(), e.desc_bag.clone()]).collect()
    }
}

/// Raw query text with its preprocessed bag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub text: String,
    pub bag: BagOfWords,
}

impl Query {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let bag = preprocess(&text);
        Self { text, bag }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListItem {
    pub api_id: String,
    /// 1-based position in the initial list.
    pub initial_rank: usize,
    pub initial_score: f64,
}

/// The initial top-N list returned by a base recommender.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList {
    query: Query,
    items: Vec<ListItem>,
}

impl RecommendationList {
    /// Builds a list from ids in rank order, with their scores.
    pub fn new(query: Query, ranked: Vec<(String, f64)>) -> Result<Self> {
        let mut seen = BTreeMap::new();
        let mut items = Vec::with_capacity(ranked.len());
        for (i, (api_id, score)) in ranked.into_iter().enumerate() {
            if seen.insert(api_id.clone(), ()).is_some() {
                return Err(Error::InvalidList(format!("duplicate api `{api_id}`")));
            }
            items.push(ListItem { api_id, initial_rank: i + 1, initial_score: score });
        }
        Ok(Self { query, items })
    }

    /// A list from ids only; scores decrease linearly from 1 with rank.
    pub fn from_ids(query: Query, ids: Vec<String>) -> Result<Self> {
        let n = ids.len().max(1) as f64;
        let ranked = ids.into_iter().enumerate().map(|(i, id)| (id, 1.0 - i as f64 / n)).collect();
        Self::new(query, ranked)
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    pub fn items(&self) -> &[ListItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.items.iter().map(|i| i.api_id.clone()).collect()
    }

    pub fn position(&self, api_id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.api_id == api_id)
    }

    pub fn contains(&self, api_id: &str) -> bool {
        self.position(api_id).is_some()
    }
}

/// Corpus and similarity model shared by every stage of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    pub corpus: ApiCorpus,
    pub similarity: SimilarityModel,
}

impl KnowledgeBase {
    pub fn new(corpus: ApiCorpus, similarity: SimilarityModel) -> Self {
        Self { corpus, similarity }
    }

    pub fn entry(&self, id: &str) -> Result<&ApiEntry> {
        self.corpus.get(id).ok_or_else(|| Error::UnknownApi(id.into()))
    }
}

/// Anything that turns a query into an initial ranked list of APIs.
pub trait BaseRecommender {
    fn recommend(&self, query: &Query, kb: &KnowledgeBase, n: usize) -> Result<RecommendationList>;
}

impl<T: BaseRecommender + ?Sized> BaseRecommender for Box<T> {
    fn recommend(&self, query: &Query, kb: &KnowledgeBase, n: usize) -> Result<RecommendationList> {
        (**self).recommend(query, kb, n)
    }
}

impl<T: BaseRecommender + ?Sized> BaseRecommender for &T {
    fn recommend(&self, query: &Query, kb: &KnowledgeBase, n: usize) -> Result<RecommendationList> {
        (**self).recommend(query, kb, n)
    }
}

/// Built-in recommender: ranks every corpus entry by the mean of its path and
/// description similarity to the query.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmbeddingRecommender;

impl EmbeddingRecommender {
    pub fn score(&self, query: &Query, entry: &ApiEntry, sim: &SimilarityModel) -> f64 {
        0.5 * sim.sym_sim_or_zero(&query.bag, &entry.path_bag) + 0.5 * sim.sym_sim_or_zero(&query.bag, &entry.desc_bag)
    }
}

impl BaseRecommender for EmbeddingRecommender {
    fn recommend(&self, query: &Query, kb: &KnowledgeBase, n: usize) -> Result<RecommendationList> {
        if n == 0 {
            return Err(Error::InvalidParameter("list size must be at least 1".into()));
        }
        if kb.corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut scored: Vec<(&ApiEntry, f64)> =
            kb.corpus.entries().iter().map(|e| (e, self.score(query, e, &kb.similarity))).collect();
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.id.cmp(&b.0.id)));
        scored.truncate(n);
        RecommendationList::new(query.clone(), scored.into_iter().map(|(e, s)| (e.id.clone(), s)).collect())
    }
}

/// Replays ranked lists produced by an external tool, keyed by the
/// preprocessed query. Queries without a stored list go to the fallback.
pub struct RankedListRecommender {
    lists: BTreeMap<BagOfWords, Vec<String>>,
    fallback: Option<Box<dyn BaseRecommender + Send + Sync>>,
}

impl RankedListRecommender {
    pub fn new() -> Self {
        Self { lists: BTreeMap::new(), fallback: None }
    }

    pub fn with_fallback(mut self, fallback: Box<dyn BaseRecommender + Send + Sync>) -> Self {
        self.fallback = Some(fallback);
        self
    }

    pub fn insert(&mut self, query: &str, api_ids: Vec<String>) {
        self.lists.insert(preprocess(query), api_ids);
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }
}

impl Default for RankedListRecommender {
    fn default() -> Self {
        Self::new()
    }
}

impl core::fmt::Debug for RankedListRecommender {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RankedListRecommender")
            .field("lists", &self.lists.len())
            .field("fallback", &self.fallback.is_some())
            .finish()
    }
}

impl BaseRecommender for RankedListRecommender {
    fn recommend(&self, query: &Query, kb: &KnowledgeBase, n: usize) -> Result<RecommendationList> {
        if n == 0 {
            return Err(Error::InvalidParameter("list size must be at least 1".into()));
        }
        match self.lists.get(&query.bag) {
            Some(ids) => {
                let mut ids: Vec<String> = ids.iter().filter(|id| kb.corpus.get(id).is_some()).cloned().collect();
                ids.truncate(n);
                RecommendationList::from_ids(query.clone(), ids)
            }
            None => match &self.fallback {
                Some(fallback) => fallback.recommend(query, kb, n),
                None => RecommendationList::from_ids(query.clone(), Vec::new()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{EmbeddingTable, IdfMode, IdfTable};
    use alloc::string::ToString;
    use alloc::vec;

    fn kb() -> KnowledgeBase {
        let corpus = ApiCorpus::new(vec![
            ApiEntry::new("b.two", "pkg.Beta", "parse the json document").unwrap(),
            ApiEntry::new("a.one", "pkg.Alpha", "open a network socket").unwrap(),
            ApiEntry::new("c.three", "pkg.Gamma", "parse the json document").unwrap(),
        ])
        .unwrap();
        let rows = [
            ("pars", [1.0, 0.0, 0.0]),
            ("json", [0.9, 0.1, 0.0]),
            ("document", [0.8, 0.0, 0.2]),
            ("open", [0.0, 1.0, 0.0]),
            ("network", [0.0, 0.9, 0.3]),
            ("socket", [0.0, 0.8, 0.4]),
            ("pkg", [0.0, 0.0, 1.0]),
        ];
        let table = EmbeddingTable::new(3, rows.iter().map(|(t, v)| (t.to_string(), v.to_vec()))).unwrap();
        let idf = IdfTable::build(&corpus.documents(), IdfMode::Smoothed).unwrap();
        KnowledgeBase::new(corpus, SimilarityModel::new(table, idf))
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = ApiCorpus::new(vec![
            ApiEntry::new("x", "a.B", "").unwrap(),
            ApiEntry::new("x", "a.C", "").unwrap(),
        ])
        .unwrap_err();
        assert_eq!(err, Error::DuplicateId { id: "x".into(), position: 1 });
    }

    #[test]
    fn empty_description_accepted() {
        let e = ApiEntry::new("x", "a.B", "").unwrap();
        assert!(e.desc_bag.is_empty());
        assert!(ApiEntry::new("y", "  ", "text").is_err());
    }

    #[test]
    fn base_recommend_ranks_and_breaks_ties_by_id() {
        let kb = kb();
        let list = EmbeddingRecommender.recommend(&Query::new("parse the json document"), &kb, 10).unwrap();
        assert_eq!(list.len(), 3);
        // b.two and c.three have identical text, so they tie; the smaller id wins.
        assert_eq!(list.ids(), vec!["b.two", "c.three", "a.one"]);
        let ranks: Vec<usize> = list.items().iter().map(|i| i.initial_rank).collect();
        assert_eq!(ranks, vec![1, 2, 3]);
        assert!(list.items().windows(2).all(|w| w[0].initial_score >= w[1].initial_score));

        let top = EmbeddingRecommender.recommend(&Query::new("open network socket"), &kb, 1).unwrap();
        assert_eq!(top.ids(), vec!["a.one"]);
        assert!(EmbeddingRecommender.recommend(&Query::new("x"), &kb, 0).is_err());
    }

    #[test]
    fn recommend_is_deterministic() {
        let kb = kb();
        let q = Query::new("json socket");
        let a = EmbeddingRecommender.recommend(&q, &kb, 2).unwrap();
        let b = EmbeddingRecommender.recommend(&q, &kb, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ranked_list_replay_and_fallback() {
        let kb = kb();
        let mut rec = RankedListRecommender::new();
        rec.insert("Open a socket", vec!["c.three".into(), "ghost".into(), "a.one".into()]);
        let list = rec.recommend(&Query::new("open socket"), &kb, 10).unwrap();
        assert_eq!(list.ids(), vec!["c.three", "a.one"]);
        assert!(rec.recommend(&Query::new("unrelated"), &kb, 10).unwrap().is_empty());
        let rec = rec.with_fallback(Box::new(EmbeddingRecommender));
        assert_eq!(rec.recommend(&Query::new("unrelated"), &kb, 2).unwrap().len(), 2);
    }

    #[test]
    fn list_rejects_duplicates() {
        let q = Query::new("x");
        assert!(RecommendationList::from_ids(q, vec!["a".into(), "a".into()]).is_err());
    }
}
