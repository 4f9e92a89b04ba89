//! Query-aware feature extraction.
//!
//! Every API on the initial list gets a [`FeatureVector`] made of five
//! feedback features (similarities of stored queries whose selected API is
//! this one) followed by the path and description similarities to the query.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::corpus::{ApiEntry, KnowledgeBase, Query, RecommendationList};
use crate::error::{Error, Result};
use crate::feedback::{lookup_similar, FeedbackConfig, FeedbackRecord, SimilarPairSet};
use crate::text::SimilarityModel;

pub const FEEDBACK_DIM: usize = 5;
pub const FEATURE_DIM: usize = FEEDBACK_DIM + 2;
pub const PATH_SIM: usize = FEEDBACK_DIM;
pub const DESC_SIM: usize = FEEDBACK_DIM + 1;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatureVector {
    pub ff: [f64; FEEDBACK_DIM],
    pub path_sim: f64,
    pub desc_sim: f64,
}

impl FeatureVector {
    pub fn new(ff: [f64; FEEDBACK_DIM], path_sim: f64, desc_sim: f64) -> Self {
        Self { ff, path_sim, desc_sim }
    }

    pub fn from_array(values: [f64; FEATURE_DIM]) -> Self {
        let mut ff = [0.0; FEEDBACK_DIM];
        ff.copy_from_slice(&values[..FEEDBACK_DIM]);
        Self { ff, path_sim: values[PATH_SIM], desc_sim: values[DESC_SIM] }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let array: [f64; FEATURE_DIM] =
            values.try_into().map_err(|_| Error::LengthMismatch { expected: FEATURE_DIM, found: values.len() })?;
        Ok(Self::from_array(array))
    }

    /// `(ff1..ff5, path_sim, desc_sim)`
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        out[..FEEDBACK_DIM].copy_from_slice(&self.ff);
        out[PATH_SIM] = self.path_sim;
        out[DESC_SIM] = self.desc_sim;
        out
    }

    pub fn get(&self, index: usize) -> f64 {
        self.to_array()[index]
    }

    pub fn has_feedback(&self) -> bool {
        self.ff.iter().any(|&v| v != 0.0)
    }
}

/// A feature vector with its binary relevance label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledInstance {
    pub features: FeatureVector,
    pub label: u8,
}

impl LabeledInstance {
    pub fn new(features: FeatureVector, label: u8) -> Self {
        Self { features, label }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Alg1Mode {
    /// Per API, the top five similarities of matching tuples.
    #[default]
    PerApi,
    /// Slot `k` holds tuple `k`'s similarity if that tuple matches the API,
    /// else 0, over the first five tuples.
    Literal,
}

/// A stored selection whose API is on the current list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackTuple<'a> {
    pub record: &'a FeedbackRecord,
    pub similarity: f64,
}

/// Similarity of the query to the API's path and description bags. An empty
/// bag on either side contributes 0.
pub fn related_info_features(query: &Query, api: &ApiEntry, sim: &SimilarityModel) -> (f64, f64) {
    (sim.sym_sim_or_zero(&query.bag, &api.path_bag), sim.sym_sim_or_zero(&query.bag, &api.desc_bag))
}

/// Keeps the similar pairs whose selected API is listed, most similar first;
/// equal similarities keep older feedback first.
pub fn collect_tuples<'a>(list: &RecommendationList, similar: &SimilarPairSet<'a>) -> Vec<FeedbackTuple<'a>> {
    let mut tuples: Vec<FeedbackTuple<'a>> = similar
        .iter()
        .filter(|p| list.contains(&p.record.selected_api))
        .map(|p| FeedbackTuple { record: p.record, similarity: p.similarity })
        .collect();
    tuples.sort_by(|a, b| {
        b.similarity
            .partial_cmp(&a.similarity)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.record.timestamp_ms.cmp(&b.record.timestamp_ms))
    });
    tuples
}

/// Feedback features for every listed API from tuples sorted by descending
/// similarity.
pub fn feedback_features(
    list: &RecommendationList,
    tuples: &[FeedbackTuple<'_>],
    mode: Alg1Mode,
) -> BTreeMap<String, [f64; FEEDBACK_DIM]> {
    let mut out = BTreeMap::new();
    for item in list.items() {
        let mut ff = [0.0; FEEDBACK_DIM];
        match mode {
            Alg1Mode::PerApi => {
                let matching = tuples.iter().filter(|t| t.record.selected_api == item.api_id);
                for (slot, tuple) in ff.iter_mut().zip(matching) {
                    *slot = tuple.similarity;
                }
            }
            Alg1Mode::Literal => {
                for (slot, tuple) in ff.iter_mut().zip(tuples) {
                    if tuple.record.selected_api == item.api_id {
                        *slot = tuple.similarity;
                    }
                }
            }
        }
        out.insert(item.api_id.clone(), ff);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    pub feedback: FeedbackConfig,
    pub alg1_mode: Alg1Mode,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self { feedback: FeedbackConfig::default(), alg1_mode: Alg1Mode::PerApi }
    }
}

/// One feature vector per listed API, in list order.
pub fn extract(
    list: &RecommendationList,
    records: &[FeedbackRecord],
    kb: &KnowledgeBase,
    config: &ExtractConfig,
) -> Result<Vec<FeatureVector>> {
    let query = list.query();
    let similar = lookup_similar(query, records, &kb.similarity, &config.feedback);
    let tuples = collect_tuples(list, &similar);
    let ff = feedback_features(list, &tuples, config.alg1_mode);
    list.items()
        .iter()
        .map(|item| {
            let entry = kb.entry(&item.api_id)?;
            let (path_sim, desc_sim) = related_info_features(query, entry, &kb.similarity);
            Ok(FeatureVector::new(ff[&item.api_id], path_sim, desc_sim))
        })
        .collect()
}
