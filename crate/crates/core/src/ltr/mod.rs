//! LambdaMART: boosted regression trees fitted to pairwise lambda gradients.
//!
//! Each boosting round scores every training instance with the partial model,
//! computes per-instance lambdas (pairwise gradients scaled by the change in
//! AP or NDCG a swap would cause) and their second-order weights, fits a
//! regularized tree to them and appends it with weight `learning_rate`.

mod lambda;
mod tree;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, LabeledInstance, FEATURE_DIM};

pub use lambda::{average_precision, group_lambdas, ndcg, pair_lambda, rank_positions, swap_delta};
pub use tree::{fit_tree, Node, RegressionTree};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DeltaMetric {
    #[default]
    Map,
    Ndcg,
}

/// Exponent convention of the pair lambda.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LambdaSign {
    /// `1 / (1 + exp(sigma * (s_i - s_j)))`: vanishes for well-ordered pairs.
    #[default]
    Standard,
    /// `1 / (1 + exp(-sigma * (s_i - s_j)))`.
    Flipped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub sigma: f64,
    /// Per-leaf complexity penalty: minimum gain for a split.
    pub gamma: f64,
    /// L2 penalty on leaf weights.
    pub beta: f64,
    pub delta_metric: DeltaMetric,
    pub lambda_sign: LambdaSign,
}

impl Default for MartParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            learning_rate: 0.1,
            max_leaves: 8,
            min_samples_leaf: 1,
            sigma: 1.0,
            gamma: 0.3,
            beta: 1.0,
            delta_metric: DeltaMetric::Map,
            lambda_sign: LambdaSign::Standard,
        }
    }
}

impl MartParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [("learning_rate", self.learning_rate), ("sigma", self.sigma), ("beta", self.beta)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if self.max_leaves == 0 || self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter("max_leaves and min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

/// The instances shown for one query, labeled 1 for the selected API.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGroup {
    pub id: u64,
    pub instances: Vec<LabeledInstance>,
}

impl LabeledGroup {
    pub fn has_both_labels(&self) -> bool {
        self.instances.iter().any(|i| i.label > 0) && self.instances.iter().any(|i| i.label == 0)
    }
}

/// Weighted sum of regression trees.
#[derive(Debug, Clone, PartialEq)]
pub struct MartModel {
    pub params: MartParams,
    trees: Vec<RegressionTree>,
    weights: Vec<f64>,
}

impl MartModel {
    pub fn empty(params: MartParams) -> Self {
        Self { params, trees: Vec::new(), weights: Vec::new() }
    }

    pub fn from_parts(params: MartParams, trees: Vec<RegressionTree>, weights: Vec<f64>) -> Result<Self> {
        if trees.len() != weights.len() {
            return Err(Error::LengthMismatch { expected: trees.len(), found: weights.len() });
        }
        Ok(Self { params, trees, weights })
    }

    pub fn push(&mut self, tree: RegressionTree, weight: f64) {
        self.trees.push(tree);
        self.weights.push(weight);
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn score(&self, v: &FeatureVector) -> f64 {
        self.score_array(&v.to_array())
    }

    pub fn score_array(&self, x: &[f64; FEATURE_DIM]) -> f64 {
        self.trees.iter().zip(&self.weights).map(|(t, w)| w * t.predict(x)).sum()
    }

    pub fn score_all(&self, vectors: &[FeatureVector]) -> Vec<f64> {
        vectors.iter().map(|v| self.score(v)).collect()
    }
}

/// Trains a LambdaMART model. Deterministic for fixed inputs.
pub fn train(groups: &[LabeledGroup], params: &MartParams) -> Result<MartModel> {
    params.validate()?;
    if !groups.iter().any(LabeledGroup::has_both_labels) {
        return Err(Error::NoPreferencePairs);
    }
    let mut model = MartModel::empty(*params);
    let x: Vec<[f64; FEATURE_DIM]> =
        groups.iter().flat_map(|g| g.instances.iter().map(|i| i.features.to_array())).collect();
    let offsets: Vec<usize> = groups
        .iter()
        .scan(0usize, |acc, g| {
            let start = *acc;
            *acc += g.instances.len();
            Some(start)
        })
        .collect();
    let mut scores = alloc::vec![0.0; x.len()];
    let mut lambdas = alloc::vec![0.0; x.len()];
    let mut hessians = alloc::vec![0.0; x.len()];
    for _ in 0..params.n_trees {
        for (group, &start) in groups.iter().zip(&offsets) {
            let end = start + group.instances.len();
            let (l, h) = group_lambdas(group, &scores[start..end], params);
            lambdas[start..end].copy_from_slice(&l);
            hessians[start..end].copy_from_slice(&h);
        }
        let tree = tree::fit_tree_arrays(&x, &lambdas, &hessians, params);
        for (s, xi) in scores.iter_mut().zip(&x) {
            *s += params.learning_rate * tree.predict(xi);
        }
        model.push(tree, params.learning_rate);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn separable_groups(n: usize) -> Vec<LabeledGroup> {
        (0..n)
            .map(|g| {
                let instances = (0..6)
                    .map(|k| {
                        let positive = k == (g % 6);
                        let desc = if positive { 0.8 + 0.01 * (g % 5) as f64 } else { 0.1 + 0.05 * k as f64 };
                        let path = ((g * 7 + k * 3) % 10) as f64 / 10.0;
                        LabeledInstance::new(FeatureVector::new([0.0; 5], path, desc), u8::from(positive))
                    })
                    .collect();
                LabeledGroup { id: g as u64, instances }
            })
            .collect()
    }

    #[test]
    fn score_is_weighted_sum() {
        let mut m = MartModel::empty(MartParams::default());
        assert_eq!(m.score(&FeatureVector::default()), 0.0);
        m.push(RegressionTree::leaf(0.2), 1.0);
        m.push(RegressionTree::leaf(0.5), 0.1);
        assert!((m.score(&FeatureVector::default()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn needs_preference_pairs() {
        let g = LabeledGroup { id: 0, instances: vec![LabeledInstance::new(FeatureVector::default(), 1)] };
        assert_eq!(train(&[g], &MartParams::default()), Err(Error::NoPreferencePairs));
    }

    #[test]
    fn zero_trees_scores_zero() {
        let p = MartParams { n_trees: 0, ..MartParams::default() };
        let m = train(&separable_groups(3), &p).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.score(&FeatureVector::new([0.0; 5], 0.3, 0.9)), 0.0);
    }

    #[test]
    fn learns_separable_feature_deterministically() {
        let groups = separable_groups(20);
        let p = MartParams { n_trees: 30, ..MartParams::default() };
        let a = train(&groups, &p).unwrap();
        let b = train(&groups, &p).unwrap();
        assert_eq!(a, b);
        for g in &groups {
            let scores: Vec<f64> = g.instances.iter().map(|i| a.score(&i.features)).collect();
            let top = rank_positions(&scores).iter().position(|&p| p == 0).unwrap();
            assert_eq!(g.instances[top].label, 1);
        }
    }

    #[test]
    fn params_validation() {
        assert!(MartParams { beta: 0.0, ..MartParams::default() }.validate().is_err());
        assert!(MartParams { max_leaves: 0, ..MartParams::default() }.validate().is_err());
        assert!(MartParams::default().validate().is_ok());
    }
}
