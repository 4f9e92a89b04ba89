//! Offline evaluation: k-fold cross validation, the feedback-accumulation
//! sweep, the pseudo-user replay and the overhead benchmark.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use feedrank_core::engine::train_models;
use feedrank_core::features::extract;
use feedrank_core::metrics::{MetricSummary, QueryOutcome};
use feedrank_core::{
    a12, mann_whitney_u, BagOfWords, BaseRecommender, EngineConfig, EngineState, Error, FeatureVector,
    FeedbackRecord, KnowledgeBase, Query, RecommendationList,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{AppError, Result};
use crate::formats::DatasetItem;

pub struct Pipeline<'a> {
    pub kb: &'a KnowledgeBase,
    pub recommender: &'a (dyn BaseRecommender + Send + Sync),
    pub config: EngineConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    pub extract_s: f64,
    pub train_s: f64,
    pub rank_s: f64,
}

impl PhaseTimes {
    fn add(&mut self, other: PhaseTimes) {
        self.extract_s += other.extract_s;
        self.train_s += other.train_s;
        self.rank_s += other.rank_s;
    }
}

/// One row of a report. `p` and `a12` compare this configuration's
/// per-repeat Hit@1 against the baseline row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub config: String,
    pub fraction: f64,
    pub hit1: f64,
    pub hit3: f64,
    pub hit5: f64,
    pub map: f64,
    pub mrr: f64,
    pub p: Option<f64>,
    pub a12: Option<f64>,
    pub extract_s: f64,
    pub train_s: f64,
    pub rank_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    /// Per configuration, the metric means of each repeat.
    pub per_repeat: Vec<Vec<Metrics>>,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| AppError::Invalid(format!("report csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| AppError::Invalid(format!("report csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Serializable copy of [`MetricSummary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub hit1: f64,
    pub hit3: f64,
    pub hit5: f64,
    pub map: f64,
    pub mrr: f64,
}

impl From<MetricSummary> for Metrics {
    fn from(m: MetricSummary) -> Self {
        Self { hit1: m.hit1, hit3: m.hit3, hit5: m.hit5, map: m.map, mrr: m.mrr }
    }
}

/// A trained configuration ready to answer test queries.
struct Trained {
    state: EngineState,
    records: Vec<FeedbackRecord>,
}

fn outcome(item: &DatasetItem, ranked: Vec<String>) -> QueryOutcome {
    QueryOutcome::new(item.query.clone(), ranked, item.relevant_apis.iter().cloned())
}

/// Feedback records for `items`: one per relevant API present in the base
/// list. Snapshot features are computed against the other records, leaving
/// out those with the same query, as a mature repository would have seen.
pub fn build_records(pipeline: &Pipeline<'_>, items: &[&DatasetItem], session: &str) -> Result<Vec<FeedbackRecord>> {
    let mut lists = Vec::new();
    let mut records = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let list = pipeline.recommender.recommend(&Query::new(&item.query), pipeline.kb, pipeline.config.top_n)?;
        for api in &item.relevant_apis {
            if list.contains(api) {
                let blank = vec![FeatureVector::default(); list.len()];
                records.push(FeedbackRecord::new(session, i as u64, item.query.clone(), api.clone(), list.ids(), blank)?);
                lists.push(list.clone());
            }
        }
    }
    let features = lists
        .iter()
        .map(|list| {
            let others = without_query(&records, &list.query().bag);
            extract(list, &others, pipeline.kb, &pipeline.config.extract)
        })
        .collect::<feedrank_core::Result<Vec<_>>>()?;
    for (r, f) in records.iter_mut().zip(features) {
        r.features = f;
    }
    Ok(records)
}

fn without_query(records: &[FeedbackRecord], bag: &BagOfWords) -> Vec<FeedbackRecord> {
    records.iter().filter(|r| r.query_bag != *bag).cloned().collect()
}

fn train(pipeline: &Pipeline<'_>, records: Vec<FeedbackRecord>) -> Result<Trained> {
    if records.is_empty() {
        return Ok(Trained { state: EngineState::cold(), records });
    }
    match train_models(&records, pipeline.kb, pipeline.recommender, &pipeline.config, None) {
        Ok(m) => Ok(Trained { state: EngineState { mart: Some(m.mart), logreg: Some(m.logreg), model_version: 1 }, records }),
        Err(Error::NoPreferencePairs | Error::DegenerateLabels) => Ok(Trained { state: EngineState::cold(), records }),
        Err(e) => Err(e.into()),
    }
}

/// Ranks one test query; records with the same query are left out.
fn answer(pipeline: &Pipeline<'_>, trained: &Trained, item: &DatasetItem, times: &mut PhaseTimes) -> Result<QueryOutcome> {
    let query = Query::new(&item.query);
    let list = pipeline.recommender.recommend(&query, pipeline.kb, pipeline.config.top_n)?;
    let t = Instant::now();
    let features = if trained.state.is_cold() {
        Vec::new()
    } else {
        let others = without_query(&trained.records, &query.bag);
        extract(&list, &others, pipeline.kb, &pipeline.config.extract)?
    };
    times.extract_s += t.elapsed().as_secs_f64();
    let t = Instant::now();
    let ranked = if trained.state.is_cold() { list.ids() } else { trained.state.rerank(&list, &features)?.ids() };
    times.rank_s += t.elapsed().as_secs_f64();
    Ok(outcome(item, ranked))
}

fn folds_of(n: usize, folds: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    (0..folds).map(|f| idx.iter().copied().skip(f).step_by(folds).collect()).collect()
}

fn check_dataset(dataset: &[DatasetItem], folds: usize) -> Result<()> {
    if folds < 2 {
        return Err(AppError::Invalid("at least 2 folds are needed".into()));
    }
    if dataset.len() < folds {
        return Err(AppError::Invalid(format!("dataset has {} queries, fewer than {folds} folds", dataset.len())));
    }
    Ok(())
}

/// For each repeat and fold, trains on a growing prefix of the shuffled
/// training fold and evaluates the test fold once per fraction. Prefixes
/// are nested, so a larger fraction always sees a superset of the feedback
/// of a smaller one. Fraction 0 is the base recommender.
pub fn accumulation_experiment(
    dataset: &[DatasetItem],
    pipeline: &Pipeline<'_>,
    fractions: &[f64],
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    check_dataset(dataset, folds)?;
    if fractions.is_empty() || fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(AppError::Invalid("fractions must lie in [0, 1]".into()));
    }
    if repeats == 0 {
        return Err(AppError::Invalid("at least one repeat is needed".into()));
    }
    let mut per_repeat: Vec<Vec<MetricSummary>> = vec![Vec::new(); fractions.len()];
    let mut times = vec![PhaseTimes::default(); fractions.len()];
    for repeat in 0..repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(repeat as u64));
        let split = folds_of(dataset.len(), folds, &mut rng);
        let mut outcomes: Vec<Vec<QueryOutcome>> = vec![Vec::new(); fractions.len()];
        for (f, test) in split.iter().enumerate() {
            let test_set: BTreeSet<usize> = test.iter().copied().collect();
            let mut train_idx: Vec<usize> = (0..dataset.len()).filter(|i| !test_set.contains(i)).collect();
            train_idx.shuffle(&mut rng);
            for (k, &fraction) in fractions.iter().enumerate() {
                let take = (fraction * train_idx.len() as f64).round() as usize;
                let items: Vec<&DatasetItem> = train_idx[..take].iter().map(|&i| &dataset[i]).collect();
                let mut phase = PhaseTimes::default();
                let t = Instant::now();
                let records = build_records(pipeline, &items, &format!("r{repeat}f{f}"))?;
                phase.extract_s += t.elapsed().as_secs_f64();
                let t = Instant::now();
                let trained = train(pipeline, records)?;
                phase.train_s += t.elapsed().as_secs_f64();
                for &i in test {
                    outcomes[k].push(answer(pipeline, &trained, &dataset[i], &mut phase)?);
                }
                times[k].add(phase);
            }
        }
        for (k, o) in outcomes.iter().enumerate() {
            per_repeat[k].push(MetricSummary::compute(o)?);
        }
    }
    let labels: Vec<String> = fractions.iter().map(|f| if *f == 0.0 { "base".into() } else { format!("feedback@{f}") }).collect();
    build_report(labels, fractions.to_vec(), per_repeat, times, repeats)
}

/// Standard k-fold cross validation of the base recommender against the
/// feedback-boosted pipeline with the whole training fold as feedback.
pub fn cross_validate(
    dataset: &[DatasetItem],
    pipeline: &Pipeline<'_>,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    accumulation_experiment(dataset, pipeline, &[0.0, 1.0], folds, repeats, seed)
}

fn build_report(
    labels: Vec<String>,
    fractions: Vec<f64>,
    per_repeat: Vec<Vec<MetricSummary>>,
    times: Vec<PhaseTimes>,
    repeats: usize,
) -> Result<ExperimentReport> {
    let base_hits: Vec<f64> = per_repeat[0].iter().map(|m| m.hit1).collect();
    let mut rows = Vec::new();
    for (k, label) in labels.into_iter().enumerate() {
        let mean = MetricSummary::mean(&per_repeat[k]);
        let hits: Vec<f64> = per_repeat[k].iter().map(|m| m.hit1).collect();
        let (p, effect) = if k == 0 {
            (None, None)
        } else {
            (Some(mann_whitney_u(&hits, &base_hits)?.p), Some(a12(&hits, &base_hits)?))
        };
        let r = repeats as f64;
        rows.push(ReportRow {
            config: label,
            fraction: fractions[k],
            hit1: mean.hit1,
            hit3: mean.hit3,
            hit5: mean.hit5,
            map: mean.map,
            mrr: mean.mrr,
            p,
            a12: effect,
            extract_s: times[k].extract_s / r,
            train_s: times[k].train_s / r,
            rank_s: times[k].rank_s / r,
        });
    }
    let per_repeat = per_repeat.into_iter().map(|v| v.into_iter().map(Metrics::from).collect()).collect();
    Ok(ExperimentReport { rows, per_repeat })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoUserReport {
    pub queries: usize,
    pub selections: usize,
    pub before: Metrics,
    pub after: Metrics,
}

/// Trains once on feedback from every query outside a random sample of
/// `n_queries`, then issues the sampled queries in order. After each answer
/// the simulated user picks the ground-truth API when it is listed; that
/// pick is visible to later queries as feedback but the models are not
/// retrained. `before` is the base recommender on the same queries.
pub fn pseudo_user_experiment(
    dataset: &[DatasetItem],
    pipeline: &Pipeline<'_>,
    n_queries: usize,
    seed: u64,
) -> Result<PseudoUserReport> {
    if n_queries == 0 || n_queries >= dataset.len() {
        return Err(AppError::Invalid(format!("n_queries must be in 1..{}", dataset.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..dataset.len()).collect();
    idx.shuffle(&mut rng);
    let (test, rest) = idx.split_at(n_queries);
    let train_items: Vec<&DatasetItem> = rest.iter().map(|&i| &dataset[i]).collect();
    let mut trained = train(pipeline, build_records(pipeline, &train_items, "pseudo-train")?)?;

    let mut before = Vec::new();
    let mut after = Vec::new();
    let mut selections = 0;
    let mut unused = PhaseTimes::default();
    for (step, &i) in test.iter().enumerate() {
        let item = &dataset[i];
        let query = Query::new(&item.query);
        let list: RecommendationList = pipeline.recommender.recommend(&query, pipeline.kb, pipeline.config.top_n)?;
        before.push(outcome(item, list.ids()));
        let answered = answer(pipeline, &trained, item, &mut unused)?;
        if let Some(api) = answered.ranked.iter().find(|id| answered.relevant.contains(*id)) {
            let features = extract(&list, &trained.records, pipeline.kb, &pipeline.config.extract)?;
            let record = FeedbackRecord::new("pseudo-user", step as u64, item.query.clone(), api.clone(), list.ids(), features)?;
            trained.records.push(record);
            selections += 1;
        }
        after.push(answered);
    }
    Ok(PseudoUserReport {
        queries: n_queries,
        selections,
        before: MetricSummary::compute(&before)?.into(),
        after: MetricSummary::compute(&after)?.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverheadReport {
    pub queries: usize,
    pub records: usize,
    pub extract_s: f64,
    pub train_s: f64,
    pub rank_s: f64,
    pub total_s: f64,
}

fn median(mut xs: Vec<Duration>) -> f64 {
    xs.sort();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2].as_secs_f64()
    } else {
        (xs[n / 2 - 1] + xs[n / 2]).as_secs_f64() / 2.0
    }
}

/// Median wall-clock time per phase: feature extraction and re-ranking per
/// query, and training over `records` repeated `train_runs` times.
pub fn overhead_benchmark(
    pipeline: &Pipeline<'_>,
    records: &[FeedbackRecord],
    queries: &[String],
    train_runs: usize,
) -> Result<OverheadReport> {
    if queries.is_empty() {
        return Err(AppError::Invalid("overhead benchmark needs at least one query".into()));
    }
    let mut train_t = Vec::new();
    let mut state = EngineState::cold();
    for _ in 0..train_runs.max(1) {
        let t = Instant::now();
        let trained = train(pipeline, records.to_vec())?;
        train_t.push(t.elapsed());
        state = trained.state;
    }
    let mut extract_t = Vec::new();
    let mut rank_t = Vec::new();
    for q in queries {
        let list = pipeline.recommender.recommend(&Query::new(q), pipeline.kb, pipeline.config.top_n)?;
        let t = Instant::now();
        let features = extract(&list, records, pipeline.kb, &pipeline.config.extract)?;
        extract_t.push(t.elapsed());
        let t = Instant::now();
        state.rerank(&list, &features)?;
        rank_t.push(t.elapsed());
    }
    let (e, tr, r) = (median(extract_t), median(train_t), median(rank_t));
    Ok(OverheadReport { queries: queries.len(), records: records.len(), extract_s: e, train_s: tr, rank_s: r, total_s: e + tr + r })
}
