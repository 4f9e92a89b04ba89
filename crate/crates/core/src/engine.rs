//! The query/feedback/retrain workflow.
//!
//! A [`Session`] answers queries against a fixed [`EngineState`] and turns the
//! user's picks into feedback records. Models are only retrained when a
//! session closes, from the whole feedback repository.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::active::{al_loop, build_pool, train_logreg, ActiveParams, LogRegModel, OracleStore};
use crate::corpus::{BaseRecommender, KnowledgeBase, Query, RecommendationList};
use crate::error::{Error, Result};
use crate::features::{extract, ExtractConfig, FeatureVector};
use crate::feedback::{build_training_groups, FeedbackRecord};
use crate::ltr::{self, MartModel, MartParams};
use crate::rank::{rerank, RankedResult};

pub const DEFAULT_TOP_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub top_n: usize,
    pub extract: ExtractConfig,
    pub mart: MartParams,
    pub active: ActiveParams,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            top_n: DEFAULT_TOP_N,
            extract: ExtractConfig::default(),
            mart: MartParams::default(),
            active: ActiveParams::default(),
        }
    }
}

/// Trained models and their version. No models means cold start.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EngineState {
    pub mart: Option<MartModel>,
    pub logreg: Option<LogRegModel>,
    pub model_version: u64,
}

impl EngineState {
    pub fn cold() -> Self {
        Self::default()
    }

    pub fn is_cold(&self) -> bool {
        self.mart.is_none() && self.logreg.is_none()
    }

    pub fn rerank(&self, list: &RecommendationList, vectors: &[FeatureVector]) -> Result<RankedResult> {
        rerank(list, vectors, self.mart.as_ref(), self.logreg.as_ref(), self.model_version)
    }
}

/// Oracle and session context for the active-learning step of a retrain.
#[derive(Debug, Clone, Copy)]
pub struct ActiveContext<'a> {
    pub oracle: &'a OracleStore,
    pub session_queries: &'a [Query],
    pub session_id: &'a str,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModels {
    pub mart: MartModel,
    pub logreg: LogRegModel,
    /// Oracle-confirmed selections to append to the repository.
    pub oracle_records: Vec<FeedbackRecord>,
}

/// Trains the ranker and the classifier from `records`, running the
/// active-learning loop first when an oracle is given.
pub fn train_models<R: BaseRecommender + ?Sized>(
    records: &[FeedbackRecord],
    kb: &KnowledgeBase,
    recommender: &R,
    config: &EngineConfig,
    active: Option<ActiveContext<'_>>,
) -> Result<TrainedModels> {
    let mut groups = build_training_groups(records)?;
    let labeled: Vec<_> = groups.iter().flat_map(|g| g.instances.iter().copied()).collect();
    let mut oracle_records = Vec::new();
    let logreg = match active {
        Some(ctx) if !ctx.oracle.is_empty() => {
            let pool = build_pool(
                ctx.oracle,
                ctx.session_queries,
                records,
                kb,
                recommender,
                &config.extract,
                &config.active,
            )?;
            let outcome = al_loop(labeled, pool, ctx.oracle, &config.active)?;
            oracle_records = outcome.positive_records(ctx.session_id, ctx.timestamp_ms)?;
            outcome.model
        }
        _ => train_logreg(&labeled, &config.active.logreg)?,
    };
    let base = groups.len() as u64;
    groups.extend(oracle_records.iter().enumerate().map(|(i, r)| r.to_group(base + i as u64)));
    let mart = ltr::train(&groups, &config.mart)?;
    Ok(TrainedModels { mart, logreg, oracle_records })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloseOutcome {
    pub state: EngineState,
    pub retrained: bool,
    pub oracle_records: Vec<FeedbackRecord>,
}

/// Retrains from the repository. An empty repository, or one without any
/// preference pair, leaves the state untouched.
pub fn retrain<R: BaseRecommender + ?Sized>(
    state: &EngineState,
    records: &[FeedbackRecord],
    kb: &KnowledgeBase,
    recommender: &R,
    config: &EngineConfig,
    active: Option<ActiveContext<'_>>,
) -> Result<CloseOutcome> {
    let unchanged = || CloseOutcome { state: state.clone(), retrained: false, oracle_records: Vec::new() };
    if records.is_empty() {
        return Ok(unchanged());
    }
    match train_models(records, kb, recommender, config, active) {
        Ok(models) => Ok(CloseOutcome {
            state: EngineState {
                mart: Some(models.mart),
                logreg: Some(models.logreg),
                model_version: state.model_version + 1,
            },
            retrained: true,
            oracle_records: models.oracle_records,
        }),
        Err(Error::NoPreferencePairs | Error::DegenerateLabels) => {
            log::warn!("feedback has no preference pairs yet; keeping current models");
            Ok(unchanged())
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Open,
    Closed,
}

/// A query answered in a session, kept so a later pick can be recorded
/// against exactly what was shown.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedQuery {
    pub query_id: String,
    pub list: RecommendationList,
    pub features: Vec<FeatureVector>,
    pub result: RankedResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub created_ms: u64,
    state: SessionState,
    queries: Vec<CachedQuery>,
}

impl Session {
    pub fn new(id: impl Into<String>, created_ms: u64) -> Self {
        Self { id: id.into(), created_ms, state: SessionState::Open, queries: Vec::new() }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn is_open(&self) -> bool {
        self.state == SessionState::Open
    }

    pub fn queries(&self) -> &[CachedQuery] {
        &self.queries
    }

    pub fn query(&self, query_id: &str) -> Option<&CachedQuery> {
        self.queries.iter().find(|q| q.query_id == query_id)
    }

    /// Base list, feature extraction against `records`, re-rank; the result
    /// is cached under a new query id.
    pub fn handle_query<R: BaseRecommender + ?Sized>(
        &mut self,
        text: &str,
        kb: &KnowledgeBase,
        recommender: &R,
        state: &EngineState,
        records: &[FeedbackRecord],
        config: &EngineConfig,
    ) -> Result<&CachedQuery> {
        if !self.is_open() {
            return Err(Error::SessionClosed(self.id.clone()));
        }
        let query = Query::new(text);
        let list = recommender.recommend(&query, kb, config.top_n)?;
        let features = extract(&list, records, kb, &config.extract)?;
        let result = state.rerank(&list, &features)?;
        let query_id = format!("q{}", self.queries.len() + 1);
        self.queries.push(CachedQuery { query_id, list, features, result });
        Ok(self.queries.last().expect("just pushed"))
    }

    /// The record for picking `api_id` from the list shown for `query_id`.
    pub fn feedback(&self, query_id: &str, api_id: &str, timestamp_ms: u64) -> Result<FeedbackRecord> {
        if !self.is_open() {
            return Err(Error::SessionClosed(self.id.clone()));
        }
        let cached = self.query(query_id).ok_or_else(|| Error::UnknownQueryId(query_id.into()))?;
        if !cached.list.contains(api_id) {
            return Err(Error::ApiNotInList { query_id: query_id.into(), api: api_id.into() });
        }
        FeedbackRecord::new(
            self.id.clone(),
            timestamp_ms,
            cached.list.query().text.clone(),
            api_id,
            cached.list.ids(),
            cached.features.clone(),
        )
    }

    /// Marks the session closed and returns the queries it issued.
    pub fn close(&mut self) -> Result<Vec<Query>> {
        if !self.is_open() {
            return Err(Error::SessionClosed(self.id.clone()));
        }
        self.state = SessionState::Closed;
        Ok(self.queries.iter().map(|q| q.list.query().clone()).collect())
    }

    /// Closes the session and retrains from `records`.
    #[allow(clippy::too_many_arguments)]
    pub fn close_and_retrain<R: BaseRecommender + ?Sized>(
        &mut self,
        state: &EngineState,
        records: &[FeedbackRecord],
        kb: &KnowledgeBase,
        recommender: &R,
        config: &EngineConfig,
        oracle: Option<&OracleStore>,
        timestamp_ms: u64,
    ) -> Result<CloseOutcome> {
        let queries = self.close()?;
        let active = oracle.map(|oracle| ActiveContext {
            oracle,
            session_queries: &queries,
            session_id: &self.id,
            timestamp_ms,
        });
        retrain(state, records, kb, recommender, config, active)
    }
}
