//! Active learning: a logistic relevance classifier, least-confidence
//! sampling over an unlabeled pool, and an oracle of curated query/API pairs
//! that annotates the sampled instances.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::corpus::{BaseRecommender, KnowledgeBase, Query, RecommendationList};
use crate::error::{Error, Result};
use crate::features::{extract, ExtractConfig, FeatureVector, LabeledInstance, FEATURE_DIM};
use crate::feedback::FeedbackRecord;
use crate::math;
use crate::text::{preprocess, BagOfWords};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegParams {
    pub l2: f64,
    pub step: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self { l2: 1e-4, step: 0.1, max_iterations: 500, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LogRegModel {
    pub weights: [f64; FEATURE_DIM],
    pub bias: f64,
}

impl LogRegModel {
    pub fn predict_relevance(&self, v: &FeatureVector) -> f64 {
        self.predict_array(&v.to_array())
    }

    fn predict_array(&self, x: &[f64; FEATURE_DIM]) -> f64 {
        let z: f64 = self.weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.bias;
        math::sigmoid(z)
    }
}

/// Full-batch gradient descent on the L2-regularized mean log-loss, starting
/// from all-zero weights. The bias is not regularized.
pub fn train_logreg(instances: &[LabeledInstance], params: &LogRegParams) -> Result<LogRegModel> {
    let positives = instances.iter().filter(|i| i.label > 0).count();
    if positives == 0 || positives == instances.len() {
        return Err(Error::DegenerateLabels);
    }
    let x: Vec<[f64; FEATURE_DIM]> = instances.iter().map(|i| i.features.to_array()).collect();
    let y: Vec<f64> = instances.iter().map(|i| if i.label > 0 { 1.0 } else { 0.0 }).collect();
    let n = x.len() as f64;
    let mut model = LogRegModel::default();
    for _ in 0..params.max_iterations {
        let mut grad_w = [0.0; FEATURE_DIM];
        let mut grad_b = 0.0;
        for (xi, yi) in x.iter().zip(&y) {
            let err = model.predict_array(xi) - yi;
            for (g, v) in grad_w.iter_mut().zip(xi) {
                *g += err * v;
            }
            grad_b += err;
        }
        for (g, w) in grad_w.iter_mut().zip(&model.weights) {
            *g = *g / n + params.l2 * w;
        }
        grad_b /= n;
        let norm = math::sqrt(grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b);
        if norm < params.tolerance {
            break;
        }
        for (w, g) in model.weights.iter_mut().zip(&grad_w) {
            *w -= params.step * g;
        }
        model.bias -= params.step * grad_b;
    }
    Ok(model)
}

/// `1 - max(p, 1 - p)`: 0.5 at p = 0.5, 0 at certainty.
pub fn least_confidence(p: f64) -> f64 {
    1.0 - p.max(1.0 - p)
}

/// Curated query -> relevant API sets, matched on the preprocessed query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleStore {
    entries: BTreeMap<BagOfWords, BTreeSet<String>>,
    queries: Vec<(String, BagOfWords)>,
}

impl OracleStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an answer set; answers for the same normalized query merge.
    pub fn insert(&mut self, query: &str, apis: impl IntoIterator<Item = String>) -> Result<()> {
        let apis: BTreeSet<String> = apis.into_iter().collect();
        if apis.is_empty() {
            return Err(Error::InvalidParameter(alloc::format!("empty answer set for `{query}`")));
        }
        let bag = preprocess(query);
        if !self.entries.contains_key(&bag) {
            self.queries.push((String::from(query), bag.clone()));
        }
        self.entries.entry(bag).or_default().extend(apis);
        Ok(())
    }

    pub fn answers(&self, query: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(&preprocess(query))
    }

    /// Label of `api` for `query`, or `None` when the query is unknown.
    pub fn annotate(&self, query: &str, api: &str) -> Option<u8> {
        self.answers(query).map(|set| u8::from(set.contains(api)))
    }

    /// Raw texts of the distinct stored queries, in insertion order.
    pub fn queries(&self) -> impl Iterator<Item = (&str, &BagOfWords)> {
        self.queries.iter().map(|(q, b)| (q.as_str(), b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolInstance {
    pub query: String,
    pub api_id: String,
    pub features: FeatureVector,
    /// Index of the list this instance was taken from.
    pub group: usize,
}

/// A shown list used as pool source, kept so annotated positives can become
/// feedback records.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolGroup {
    pub query: String,
    pub list: Vec<String>,
    pub features: Vec<FeatureVector>,
}

/// Unlabeled instances for active learning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActivePool {
    pub groups: Vec<PoolGroup>,
    pub instances: Vec<PoolInstance>,
}

impl ActivePool {
    pub fn add_group(&mut self, list: &RecommendationList, features: Vec<FeatureVector>) {
        let group = self.groups.len();
        let query = list.query().text.clone();
        for (item, fv) in list.items().iter().zip(&features) {
            self.instances.push(PoolInstance {
                query: query.clone(),
                api_id: item.api_id.clone(),
                features: *fv,
                group,
            });
        }
        self.groups.push(PoolGroup { query, list: list.ids(), features });
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveParams {
    pub logreg: LogRegParams,
    pub batch: usize,
    pub max_iterations: usize,
    /// Minimum similarity between an oracle query and a session query for the
    /// oracle query's list to enter the pool.
    pub pool_threshold: f64,
    pub top_n: usize,
}

impl Default for ActiveParams {
    fn default() -> Self {
        Self { logreg: LogRegParams::default(), batch: 1, max_iterations: 10, pool_threshold: 0.5, top_n: 10 }
    }
}

/// Indices of the `batch` pool instances with the highest least-confidence
/// uncertainty; ties keep pool order.
pub fn select_uncertain(model: &LogRegModel, pool: &ActivePool, batch: usize) -> Result<Vec<usize>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if batch == 0 {
        return Err(Error::InvalidParameter("batch must be at least 1".into()));
    }
    let mut scored: Vec<(usize, f64)> = pool
        .instances
        .iter()
        .enumerate()
        .map(|(i, inst)| (i, least_confidence(model.predict_relevance(&inst.features))))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(batch).map(|(i, _)| i).collect())
}

/// A positive oracle answer on a pooled instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSelection {
    pub group: usize,
    pub api_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlOutcome {
    pub model: LogRegModel,
    pub labeled: Vec<LabeledInstance>,
    pub pool: ActivePool,
    pub positives: Vec<AnnotatedSelection>,
    pub annotations: usize,
    pub skipped: usize,
}

impl AlOutcome {
    /// Turns positive annotations into feedback records.
    pub fn positive_records(&self, session_id: &str, timestamp_ms: u64) -> Result<Vec<FeedbackRecord>> {
        self.positives
            .iter()
            .map(|sel| {
                let g = &self.pool.groups[sel.group];
                FeedbackRecord::new(session_id, timestamp_ms, g.query.clone(), sel.api_id.clone(), g.list.clone(), g.features.clone())
            })
            .collect()
    }
}

/// Train, pick the most uncertain instances, ask the oracle, grow the labeled
/// set; repeated until `max_iterations` or the pool runs dry. Instances whose
/// query the oracle does not know are dropped with a warning.
pub fn al_loop(
    labeled: Vec<LabeledInstance>,
    mut pool: ActivePool,
    oracle: &OracleStore,
    params: &ActiveParams,
) -> Result<AlOutcome> {
    let mut labeled = labeled;
    let mut model = train_logreg(&labeled, &params.logreg)?;
    let mut positives = Vec::new();
    let mut annotations = 0;
    let mut skipped = 0;
    for _ in 0..params.max_iterations {
        if pool.is_empty() {
            break;
        }
        let mut picked = select_uncertain(&model, &pool, params.batch)?;
        // Remove from the back so earlier indices stay valid.
        picked.sort_unstable_by(|a, b| b.cmp(a));
        let mut grew = false;
        for idx in picked {
            let inst = pool.instances.remove(idx);
            match oracle.annotate(&inst.query, &inst.api_id) {
                Some(label) => {
                    annotations += 1;
                    if label == 1 {
                        positives.push(AnnotatedSelection { group: inst.group, api_id: inst.api_id.clone() });
                    }
                    labeled.push(LabeledInstance::new(inst.features, label));
                    grew = true;
                }
                None => {
                    log::warn!("oracle has no answer for `{}`; instance skipped", inst.query);
                    skipped += 1;
                }
            }
        }
        if grew {
            model = train_logreg(&labeled, &params.logreg)?;
        }
    }
    Ok(AlOutcome { model, labeled, pool, positives, annotations, skipped })
}

/// Pools the lists of oracle queries similar to any of `user_queries`, with
/// features extracted against `records`. Instances whose (query, api) pair is
/// already stored as feedback are left out.
pub fn build_pool<R: BaseRecommender + ?Sized>(
    oracle: &OracleStore,
    user_queries: &[Query],
    records: &[FeedbackRecord],
    kb: &KnowledgeBase,
    recommender: &R,
    extract_config: &ExtractConfig,
    params: &ActiveParams,
) -> Result<ActivePool> {
    let mut pool = ActivePool::default();
    let known: BTreeSet<(&BagOfWords, &str)> =
        records.iter().map(|r| (&r.query_bag, r.selected_api.as_str())).collect();
    for (text, bag) in oracle.queries() {
        if bag.is_empty() {
            continue;
        }
        let similar = user_queries.iter().any(|q| {
            !q.bag.is_empty()
                && q.bag != *bag
                && kb.similarity.sym_sim(&q.bag, bag).is_ok_and(|s| s >= params.pool_threshold)
        });
        if !similar {
            continue;
        }
        let list = recommender.recommend(&Query::new(text), kb, params.top_n)?;
        if list.is_empty() {
            continue;
        }
        let features = extract(&list, records, kb, extract_config)?;
        let start = pool.instances.len();
        pool.add_group(&list, features);
        let mut i = start;
        while i < pool.instances.len() {
            if known.contains(&(bag, pool.instances[i].api_id.as_str())) {
                pool.instances.remove(i);
            } else {
                i += 1;
            }
        }
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn inst(a: f64, b: f64, label: u8) -> LabeledInstance {
        LabeledInstance::new(FeatureVector::new([a, 0.0, 0.0, 0.0, 0.0], 0.0, b), label)
    }

    fn separable() -> Vec<LabeledInstance> {
        vec![
            inst(0.0, 0.1, 0),
            inst(0.1, 0.0, 0),
            inst(0.2, 0.2, 0),
            inst(0.0, 0.3, 0),
            inst(0.9, 0.8, 1),
            inst(1.0, 0.9, 1),
            inst(0.8, 1.0, 1),
            inst(1.0, 1.0, 1),
        ]
    }

    #[test]
    fn logreg_separates_toy_set() {
        let data = separable();
        let m = train_logreg(&data, &LogRegParams::default()).unwrap();
        let correct = data
            .iter()
            .filter(|i| (m.predict_relevance(&i.features) >= 0.5) == (i.label == 1))
            .count();
        assert_eq!(correct, data.len());
        assert_eq!(train_logreg(&data, &LogRegParams::default()).unwrap(), m);
    }

    #[test]
    fn logreg_rejects_single_class() {
        let data = vec![inst(0.0, 0.0, 1), inst(1.0, 1.0, 1)];
        assert_eq!(train_logreg(&data, &LogRegParams::default()), Err(Error::DegenerateLabels));
    }

    #[test]
    fn prediction_cases() {
        let zero = LogRegModel::default();
        assert_eq!(zero.predict_relevance(&FeatureVector::new([0.3; 5], 0.2, 0.9)), 0.5);
        let sat = LogRegModel { weights: [0.0; FEATURE_DIM], bias: 50.0 };
        let p = sat.predict_relevance(&FeatureVector::default());
        assert!((p - 1.0).abs() < 1e-9 && p < 1.0);
        let m = LogRegModel { weights: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -2.0], bias: 0.1 };
        let lo = m.predict_relevance(&FeatureVector::new([0.2, 0.0, 0.0, 0.0, 0.0], 0.0, 0.5));
        let hi = m.predict_relevance(&FeatureVector::new([0.7, 0.0, 0.0, 0.0, 0.0], 0.0, 0.5));
        assert!(hi >= lo);
    }

    fn pool_with_probs(probs: &[f64]) -> (LogRegModel, ActivePool) {
        // weights[0] = 1, bias 0: feature value is the logit
        let model = LogRegModel { weights: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], bias: 0.0 };
        let mut pool = ActivePool::default();
        for (i, p) in probs.iter().enumerate() {
            let logit = libm::log(p / (1.0 - p));
            pool.instances.push(PoolInstance {
                query: format!("q{i}"),
                api_id: format!("a{i}"),
                features: FeatureVector::new([logit, 0.0, 0.0, 0.0, 0.0], 0.0, 0.0),
                group: 0,
            });
        }
        (model, pool)
    }

    #[test]
    fn least_confidence_selection() {
        let (m, p) = pool_with_probs(&[0.95, 0.55]);
        assert_eq!(select_uncertain(&m, &p, 1).unwrap(), vec![1]);
        let (m, p) = pool_with_probs(&[0.5, 0.9]);
        assert_eq!(select_uncertain(&m, &p, 1).unwrap(), vec![0]);
        let (m, p) = pool_with_probs(&[0.5, 0.6, 0.99]);
        assert_eq!(select_uncertain(&m, &p, 2).unwrap(), vec![0, 1]);
        assert_eq!(select_uncertain(&m, &ActivePool::default(), 1), Err(Error::EmptyPool));
    }

    #[test]
    fn oracle_labels() {
        let mut o = OracleStore::new();
        o.insert("Stopping a thread", vec!["Thread.interrupt".into()]).unwrap();
        assert_eq!(o.annotate("stopping the threads", "Thread.interrupt"), Some(1));
        assert_eq!(o.annotate("stopping a thread", "Thread.start"), Some(0));
        assert_eq!(o.annotate("parse json", "Thread.start"), None);
        assert!(o.insert("x", Vec::<String>::new()).is_err());
    }

    #[test]
    fn loop_exhausts_small_pool_and_skips_unknown() {
        let mut oracle = OracleStore::new();
        oracle.insert("q0", vec!["a0".into()]).unwrap();
        oracle.insert("q1", vec!["zz".into()]).unwrap();
        let (_, pool) = pool_with_probs(&[0.2, 0.6, 0.7]);
        let labeled = separable();
        let before = labeled.len() + pool.len();
        let out = al_loop(labeled, pool, &oracle, &ActiveParams::default()).unwrap();
        assert!(out.pool.is_empty());
        assert_eq!(out.annotations, 2);
        assert_eq!(out.skipped, 1);
        assert_eq!(out.labeled.len() + out.pool.len() + out.skipped, before);
        assert_eq!(out.positives, vec![AnnotatedSelection { group: 0, api_id: "a0".into() }]);
    }

    #[test]
    fn loop_with_zero_iterations_keeps_initial_model() {
        let labeled = separable();
        let initial = train_logreg(&labeled, &LogRegParams::default()).unwrap();
        let (_, pool) = pool_with_probs(&[0.4, 0.6]);
        let params = ActiveParams { max_iterations: 0, ..ActiveParams::default() };
        let out = al_loop(labeled.clone(), pool, &OracleStore::new(), &params).unwrap();
        assert_eq!(out.model, initial);
        assert_eq!(out.labeled, labeled);
        assert_eq!(out.pool.len(), 2);
    }
}
