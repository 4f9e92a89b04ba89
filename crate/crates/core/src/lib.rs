//! Feedback-boosted re-ranking of API recommendation lists.
//!
//! Given a natural-language query and an initial list of candidate APIs, the
//! engine computes seven query-aware features per candidate (five feedback
//! similarities and two related-information similarities), scores them with a
//! LambdaMART ranker and a logistic relevance classifier, fuses both scores and
//! re-ranks the list. Every user selection is stored and feeds the next
//! retraining, which happens once per closed session.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, persistence,
//! the HTTP service and the experiment drivers live in the `feedrank` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod active;
pub mod corpus;
pub mod engine;
pub mod features;
pub mod feedback;
pub mod ltr;
pub mod metrics;
pub mod rank;
pub mod stats;
pub mod text;

pub use error::{Error, Result};

pub use active::{ActiveParams, ActivePool, LogRegModel, LogRegParams, OracleStore};
pub use corpus::{
    ApiCorpus, ApiEntry, BaseRecommender, EmbeddingRecommender, KnowledgeBase, Query, RankedListRecommender,
    RecommendationList,
};
pub use engine::{CloseOutcome, EngineConfig, EngineState, Session, SessionState};
pub use features::{Alg1Mode, ExtractConfig, FeatureVector, LabeledInstance, FEATURE_DIM};
pub use feedback::{FeedbackConfig, FeedbackRecord, FeedbackRepository, SimilarPairSet};
pub use ltr::{DeltaMetric, LabeledGroup, LambdaSign, MartModel, MartParams, RegressionTree};
pub use metrics::{MetricSummary, QueryOutcome};
pub use rank::RankedResult;
pub use stats::{a12, bonferroni, mann_whitney_normal, mann_whitney_u, MannWhitney};
pub use text::{BagOfWords, EmbeddingTable, IdfMode, IdfTable, SimilarityModel};
