//! Regression trees grown best-first on lambda targets with Newton leaves.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::MartParams;
use crate::features::{FeatureVector, FEATURE_DIM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// `x[feature] <= threshold` goes to `left`.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// A binary regression tree stored as a node arena rooted at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        Self { nodes: vec![Node::Leaf { value }] }
    }

    /// Builds a tree from nodes; returns `None` if children are out of range,
    /// a feature index is invalid, or a node is unreachable/shared.
    pub fn from_nodes(nodes: Vec<Node>) -> Option<Self> {
        if nodes.is_empty() {
            return None;
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if core::mem::replace(seen.get_mut(i)?, true) {
                return None;
            }
            if let Node::Split { feature, left, right, .. } = nodes[i] {
                if feature >= FEATURE_DIM {
                    return None;
                }
                stack.push(left);
                stack.push(right);
            }
        }
        seen.iter().all(|&s| s).then_some(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { value } => Some(*value),
                Node::Split { .. } => None,
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64; FEATURE_DIM]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// Nodes in preorder, children referenced by their preorder index.
    pub fn preorder(&self) -> Vec<Node> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            order.push(i);
            if let Node::Split { left, right, .. } = self.nodes[i] {
                stack.push(right);
                stack.push(left);
            }
        }
        let mut new_index = vec![0; self.nodes.len()];
        for (pos, &old) in order.iter().enumerate() {
            new_index[old] = pos;
        }
        order
            .iter()
            .map(|&old| match self.nodes[old] {
                Node::Split { feature, threshold, left, right } => {
                    Node::Split { feature, threshold, left: new_index[left], right: new_index[right] }
                }
                leaf => leaf,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Growing {
    node: usize,
    samples: Vec<usize>,
    best: Option<SplitCandidate>,
}

fn score_term(g: f64, h: f64, beta: f64) -> f64 {
    let denom = h + beta;
    if denom > 0.0 {
        g * g / denom
    } else {
        0.0
    }
}

pub(crate) fn leaf_value(g: f64, h: f64, beta: f64) -> f64 {
    let denom = h + beta;
    if denom > 0.0 {
        g / denom
    } else {
        0.0
    }
}

fn best_split(
    samples: &[usize],
    x: &[[f64; FEATURE_DIM]],
    lambdas: &[f64],
    hessians: &[f64],
    grad: f64,
    hess: f64,
    params: &MartParams,
) -> Option<SplitCandidate> {
    let min_leaf = params.min_samples_leaf.max(1);
    if samples.len() < 2 * min_leaf {
        return None;
    }
    let parent = score_term(grad, hess, params.beta);
    let mut best: Option<SplitCandidate> = None;
    let mut sorted = samples.to_vec();
    for feature in 0..FEATURE_DIM {
        sorted.sort_by(|&a, &b| x[a][feature].partial_cmp(&x[b][feature]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        let (mut gl, mut hl) = (0.0, 0.0);
        for k in 0..sorted.len() - 1 {
            let s = sorted[k];
            gl += lambdas[s];
            hl += hessians[s];
            let left_n = k + 1;
            let right_n = sorted.len() - left_n;
            if left_n < min_leaf || right_n < min_leaf {
                continue;
            }
            let v = x[s][feature];
            let next = x[sorted[k + 1]][feature];
            if v == next {
                continue;
            }
            let gain = 0.5
                * (score_term(gl, hl, params.beta) + score_term(grad - gl, hess - hl, params.beta) - parent);
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate { feature, threshold: v + (next - v) / 2.0, gain });
            }
        }
    }
    best.filter(|b| b.gain > params.gamma)
}

/// Fits one tree to lambda targets. Leaves take `sum(lambda) / (sum(h) + beta)`;
/// a split is kept only when its gain exceeds `gamma`. Leaves are expanded
/// best-gain first until `max_leaves` is reached.
pub fn fit_tree(vectors: &[FeatureVector], lambdas: &[f64], hessians: &[f64], params: &MartParams) -> RegressionTree {
    let x: Vec<[f64; FEATURE_DIM]> = vectors.iter().map(FeatureVector::to_array).collect();
    fit_tree_arrays(&x, lambdas, hessians, params)
}

pub(crate) fn fit_tree_arrays(
    x: &[[f64; FEATURE_DIM]],
    lambdas: &[f64],
    hessians: &[f64],
    params: &MartParams,
) -> RegressionTree {
    let n = x.len();
    let samples: Vec<usize> = (0..n).collect();
    let grad: f64 = lambdas.iter().sum();
    let hess: f64 = hessians.iter().sum();
    let mut nodes = vec![Node::Leaf { value: leaf_value(grad, hess, params.beta) }];
    if n == 0 {
        return RegressionTree { nodes };
    }
    let best = best_split(&samples, x, lambdas, hessians, grad, hess, params);
    let mut open = vec![Growing { node: 0, samples, best }];
    let mut leaves = 1;
    while leaves < params.max_leaves {
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.best.map(|b| (i, b.gain)))
            .fold(None, |acc: Option<(usize, f64)>, (i, gain)| match acc {
                Some((_, g)) if g >= gain => acc,
                _ => Some((i, gain)),
            });
        let Some((idx, _)) = pick else { break };
        let growing = open.swap_remove(idx);
        let split = growing.best.expect("picked leaf has a split");
        let (left_s, right_s): (Vec<usize>, Vec<usize>) =
            growing.samples.iter().partition(|&&s| x[s][split.feature] <= split.threshold);
        let mut children = [0usize; 2];
        for (slot, part) in children.iter_mut().zip([left_s, right_s]) {
            let g: f64 = part.iter().map(|&s| lambdas[s]).sum();
            let h: f64 = part.iter().map(|&s| hessians[s]).sum();
            let node = nodes.len();
            nodes.push(Node::Leaf { value: leaf_value(g, h, params.beta) });
            let best = best_split(&part, x, lambdas, hessians, g, h, params);
            open.push(Growing { node, samples: part, best });
            *slot = node;
        }
        nodes[growing.node] =
            Node::Split { feature: split.feature, threshold: split.threshold, left: children[0], right: children[1] };
        leaves += 1;
    }
    // Growth order depends on gains; storing preorder gives every tree one
    // canonical layout.
    let grown = RegressionTree { nodes };
    RegressionTree { nodes: grown.preorder() }
}
