//! Score fusion and re-ranking.
//!
//! The final score of the API at initial position `pos` is its min-max
//! normalized LambdaMART score plus `2 / (3 * pos)` times the classifier's
//! relevance probability.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::active::LogRegModel;
use crate::corpus::RecommendationList;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::ltr::MartModel;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedItem {
    pub api_id: String,
    pub pred_score: f64,
    pub initial_rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub items: Vec<RankedItem>,
    pub model_version: u64,
}

impl RankedResult {
    pub fn ids(&self) -> Vec<String> {
        self.items.iter().map(|i| i.api_id.clone()).collect()
    }

    /// 1-based rank of `api_id` in the result.
    pub fn rank_of(&self, api_id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.api_id == api_id).map(|p| p + 1)
    }
}

/// Min-max normalization to [0, 1]; all-equal input maps to 0.5.
pub fn normalize_scores(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if !(range > 0.0) {
        return Ok(vec![0.5; scores.len()]);
    }
    Ok(scores.iter().map(|s| (s - min) / range).collect())
}

/// Position weight of the relevance term.
pub fn mu(position: usize) -> f64 {
    2.0 / (3.0 * position as f64)
}

/// `normalized_i + mu(pos_i) * relev_i`, positions 1-based.
pub fn combine(scores: &[f64], relevs: &[f64], positions: &[usize]) -> Result<Vec<f64>> {
    if relevs.len() != scores.len() {
        return Err(Error::LengthMismatch { expected: scores.len(), found: relevs.len() });
    }
    if positions.len() != scores.len() {
        return Err(Error::LengthMismatch { expected: scores.len(), found: positions.len() });
    }
    if positions.contains(&0) {
        return Err(Error::InvalidParameter("positions are 1-based".into()));
    }
    let normalized = normalize_scores(scores)?;
    Ok(normalized.iter().zip(relevs).zip(positions).map(|((n, r), &p)| n + mu(p) * r).collect())
}

/// Orders items by descending fused score; ties keep the better initial rank.
pub fn order_by_score(list: &RecommendationList, pred: &[f64], model_version: u64) -> RankedResult {
    let mut items: Vec<RankedItem> = list
        .items()
        .iter()
        .zip(pred)
        .map(|(item, &s)| RankedItem { api_id: item.api_id.clone(), pred_score: s, initial_rank: item.initial_rank })
        .collect();
    items.sort_by(|a, b| {
        b.pred_score.partial_cmp(&a.pred_score).unwrap_or(Ordering::Equal).then(a.initial_rank.cmp(&b.initial_rank))
    });
    RankedResult { items, model_version }
}

/// Re-ranks `list` with the trained models. Without models the initial order
/// is returned with zero scores.
pub fn rerank(
    list: &RecommendationList,
    vectors: &[FeatureVector],
    mart: Option<&MartModel>,
    logreg: Option<&LogRegModel>,
    model_version: u64,
) -> Result<RankedResult> {
    if vectors.len() != list.len() {
        return Err(Error::LengthMismatch { expected: list.len(), found: vectors.len() });
    }
    if list.is_empty() {
        return Ok(RankedResult { items: Vec::new(), model_version });
    }
    if mart.is_none() && logreg.is_none() {
        return Ok(order_by_score(list, &vec![0.0; list.len()], model_version));
    }
    let scores: Vec<f64> = match mart {
        Some(m) => m.score_all(vectors),
        None => vec![0.0; vectors.len()],
    };
    let relevs: Vec<f64> = match logreg {
        Some(c) => vectors.iter().map(|v| c.predict_relevance(v)).collect(),
        None => vec![0.0; vectors.len()],
    };
    let positions: Vec<usize> = list.items().iter().map(|i| i.initial_rank).collect();
    let pred = combine(&scores, &relevs, &positions)?;
    Ok(order_by_score(list, &pred, model_version))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Query;
    use crate::ltr::{MartParams, RegressionTree};
    use alloc::format;

    #[test]
    fn normalization() {
        assert_eq!(normalize_scores(&[2.0, 1.0, 0.0]).unwrap(), vec![1.0, 0.5, 0.0]);
        assert_eq!(normalize_scores(&[3.0, 3.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(normalize_scores(&[]), Err(Error::EmptyInput));
        let s = [0.3, -1.2, 4.0, 2.5];
        let t: Vec<f64> = s.iter().map(|x| 3.5 * x - 7.0).collect();
        let (a, b) = (normalize_scores(&s).unwrap(), normalize_scores(&t).unwrap());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn fusion_example() {
        let out = combine(&[2.0, 1.0, 0.0], &[0.5, 0.9, 0.1], &[1, 2, 3]).unwrap();
        let expected = [1.0 + 1.0 / 3.0, 0.5 + 0.3, 0.1 * 2.0 / 9.0];
        for (o, e) in out.iter().zip(expected) {
            assert!((o - e).abs() < 1e-12);
        }
        assert!((out[0] - 1.33333).abs() < 1e-5 && (out[1] - 0.8).abs() < 1e-5 && (out[2] - 0.02222).abs() < 1e-5);
        assert_eq!(combine(&[2.0, 1.0, 0.0], &[0.0; 3], &[1, 2, 3]).unwrap(), vec![1.0, 0.5, 0.0]);
        let single = combine(&[7.0], &[0.3], &[1]).unwrap();
        assert!((single[0] - (0.5 + 2.0 / 3.0 * 0.3)).abs() < 1e-15);
        assert!(combine(&[1.0], &[0.1, 0.2], &[1]).is_err());
    }

    fn list(n: usize) -> RecommendationList {
        RecommendationList::from_ids(Query::new("q"), (0..n).map(|i| format!("api{i}")).collect()).unwrap()
    }

    #[test]
    fn cold_start_keeps_order() {
        let l = list(5);
        let r = rerank(&l, &vec![FeatureVector::default(); 5], None, None, 0).unwrap();
        assert_eq!(r.ids(), l.ids());
        assert!(r.items.iter().all(|i| i.pred_score == 0.0));
    }

    #[test]
    fn relevance_moves_item_up() {
        let l = list(4);
        let mut vs = vec![FeatureVector::default(); 4];
        vs[3].desc_sim = 1.0;
        let mart = MartModel::empty(MartParams::default());
        let clf = LogRegModel { weights: [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 30.0], bias: -10.0 };
        let r = rerank(&l, &vs, Some(&mart), Some(&clf), 3).unwrap();
        // all LTR scores equal (0.5); relevance decides, item 3 is near-certain
        assert_eq!(r.items[0].api_id, "api3");
        assert_eq!(r.model_version, 3);

        let mut m = MartModel::empty(MartParams::default());
        m.push(RegressionTree::leaf(1.0), 1.0);
        let r = rerank(&l, &vs, Some(&m), None, 1).unwrap();
        assert_eq!(r.ids(), l.ids());
        assert!(rerank(&l, &vs[..2], Some(&m), None, 1).is_err());
    }
}
