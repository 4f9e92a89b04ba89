//! Pairwise lambda gradients.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{DeltaMetric, LabeledGroup, LambdaSign, MartParams};
use crate::math;

/// Average precision of binary labels listed in rank order.
pub fn average_precision(labels: &[u8]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &label) in labels.iter().enumerate() {
        if label > 0 {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

fn dcg(labels: &[u8]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(k, &l)| ((1u64 << l.min(63)) as f64 - 1.0) / math::log2(k as f64 + 2.0))
        .sum()
}

/// NDCG with gain `2^label - 1` and discount `1 / log2(1 + rank)`.
pub fn ndcg(labels: &[u8]) -> f64 {
    let mut ideal = labels.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let best = dcg(&ideal);
    if best == 0.0 {
        0.0
    } else {
        dcg(labels) / best
    }
}

pub fn metric_value(labels: &[u8], metric: DeltaMetric) -> f64 {
    match metric {
        DeltaMetric::Map => average_precision(labels),
        DeltaMetric::Ndcg => ndcg(labels),
    }
}

/// `|metric(after swapping positions i and j) - metric(before)|` for labels
/// given in current rank order (0-based positions).
pub fn swap_delta(ranked_labels: &[u8], i: usize, j: usize, metric: DeltaMetric) -> f64 {
    if ranked_labels[i] == ranked_labels[j] {
        return 0.0;
    }
    let before = metric_value(ranked_labels, metric);
    let mut swapped = ranked_labels.to_vec();
    swapped.swap(i, j);
    (metric_value(&swapped, metric) - before).abs()
}

/// Lambda of a pair where `i` is preferred over `j`. With the standard sign
/// it vanishes as `s_i - s_j` grows; [`LambdaSign::Flipped`] flips the exponent.
pub fn pair_lambda(s_i: f64, s_j: f64, delta: f64, sigma: f64, sign: LambdaSign) -> f64 {
    -sigma * delta * pair_rho(s_i, s_j, sigma, sign)
}

fn pair_rho(s_i: f64, s_j: f64, sigma: f64, sign: LambdaSign) -> f64 {
    let gap = sigma * (s_i - s_j);
    match sign {
        LambdaSign::Standard => 1.0 / (1.0 + math::exp(gap)),
        LambdaSign::Flipped => 1.0 / (1.0 + math::exp(-gap)),
    }
}

/// Positions of instances when sorted by descending score, ties by index.
pub fn rank_positions(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut positions = vec![0; scores.len()];
    for (pos, &idx) in order.iter().enumerate() {
        positions[idx] = pos;
    }
    positions
}

/// Per-instance lambdas and second-order weights for one group.
///
/// Positive lambdas push an instance up. For each pair with differing labels
/// the preferred instance gains `sigma * delta * rho` and the other loses the
/// same amount; both accumulate `sigma^2 * delta * rho * (1 - rho)`.
pub fn group_lambdas(group: &LabeledGroup, scores: &[f64], params: &MartParams) -> (Vec<f64>, Vec<f64>) {
    let n = group.instances.len();
    let mut lambdas = vec![0.0; n];
    let mut hessians = vec![0.0; n];
    if n < 2 {
        return (lambdas, hessians);
    }
    let positions = rank_positions(scores);
    let mut ranked_labels = vec![0u8; n];
    for (idx, inst) in group.instances.iter().enumerate() {
        ranked_labels[positions[idx]] = inst.label;
    }
    let sigma = params.sigma;
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (group.instances[i].label, group.instances[j].label);
            if li <= lj {
                continue;
            }
            let delta = swap_delta(&ranked_labels, positions[i], positions[j], params.delta_metric);
            if delta == 0.0 {
                continue;
            }
            let rho = pair_rho(scores[i], scores[j], sigma, params.lambda_sign);
            let lambda = sigma * delta * rho;
            lambdas[i] += lambda;
            lambdas[j] -= lambda;
            let h = sigma * sigma * delta * rho * (1.0 - rho);
            hessians[i] += h;
            hessians[j] += h;
        }
    }
    (lambdas, hessians)
}
