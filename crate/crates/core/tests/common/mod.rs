#![allow(dead_code)]

use feedrank_core::{
    ApiCorpus, ApiEntry, EmbeddingTable, FeedbackRecord, IdfMode, IdfTable, KnowledgeBase, RankedListRecommender,
    SimilarityModel,
};

/// Tiny hand-made vocabulary: `stop`/`kill`/`halt` are near-synonyms, as are
/// `file`/`document`, while `thread` and `read` sit apart.
pub fn embeddings() -> EmbeddingTable {
    let rows = vec![
        ("stop", vec![1.0, 0.1, 0.0, 0.0]),
        ("kill", vec![0.95, 0.15, 0.05, 0.0]),
        ("halt", vec![0.9, 0.2, 0.0, 0.1]),
        ("thread", vec![0.0, 1.0, 0.1, 0.0]),
        ("file", vec![0.0, 0.0, 1.0, 0.2]),
        ("document", vec![0.05, 0.0, 0.95, 0.25]),
        ("read", vec![0.0, 0.1, 0.2, 1.0]),
        ("write", vec![0.1, 0.0, 0.3, 0.9]),
    ];
    EmbeddingTable::new(4, rows.into_iter().map(|(w, v)| (w.to_string(), v))).unwrap()
}

pub fn corpus() -> ApiCorpus {
    let entries = [
        ("t.stop", "lang.Thread.stop", "Forcibly stop the thread."),
        ("t.halt", "lang.Thread.halt", "Halt the running thread."),
        ("f.read", "io.File.read", "Read a file into memory."),
        ("f.write", "io.File.write", "Write a document to a file."),
        ("t.read", "lang.Thread.readState", "Read thread state."),
    ];
    ApiCorpus::new(entries.iter().map(|(i, p, d)| ApiEntry::new(*i, *p, *d).unwrap()).collect()).unwrap()
}

pub fn kb() -> KnowledgeBase {
    let corpus = corpus();
    let idf = IdfTable::build(&corpus.documents(), IdfMode::Smoothed).unwrap();
    KnowledgeBase::new(corpus, SimilarityModel::new(embeddings(), idf))
}

pub fn recommender() -> RankedListRecommender {
    let mut r = RankedListRecommender::new();
    let thread = ["t.read", "f.read", "t.halt", "f.write", "t.stop"];
    let file = ["t.read", "f.write", "t.stop", "f.read", "t.halt"];
    for q in ["stop a thread", "kill the thread", "halt thread"] {
        r.insert(q, thread.iter().map(|s| s.to_string()).collect());
    }
    for q in ["read a file", "read document"] {
        r.insert(q, file.iter().map(|s| s.to_string()).collect());
    }
    r
}

pub fn record(kb: &KnowledgeBase, ts: u64, query: &str, selected: &str, list: &[&str]) -> FeedbackRecord {
    let ids: Vec<String> = list.iter().map(|s| s.to_string()).collect();
    let q = feedrank_core::Query::new(query);
    let rl = feedrank_core::RecommendationList::from_ids(q, ids.clone()).unwrap();
    let features = feedrank_core::features::extract(&rl, &[], kb, &Default::default()).unwrap();
    FeedbackRecord::new("seed", ts, query, selected, ids, features).unwrap()
}
