//! Ranking quality metrics over a set of evaluated queries.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A ranked answer list and the ground-truth relevant ids for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub query_id: String,
    pub ranked: Vec<String>,
    pub relevant: BTreeSet<String>,
}

impl QueryOutcome {
    pub fn new(query_id: impl Into<String>, ranked: Vec<String>, relevant: impl IntoIterator<Item = String>) -> Self {
        Self { query_id: query_id.into(), ranked, relevant: relevant.into_iter().collect() }
    }

    /// 1-based positions of relevant items in the ranked list.
    pub fn relevant_positions(&self) -> Vec<usize> {
        self.ranked
            .iter()
            .enumerate()
            .filter(|(_, id)| self.relevant.contains(*id))
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn first_relevant(&self) -> Option<usize> {
        self.ranked.iter().position(|id| self.relevant.contains(id)).map(|p| p + 1)
    }

    /// Mean over relevant positions `k` of (relevant in top k) / k; 0 when
    /// nothing relevant was returned.
    pub fn average_precision(&self) -> f64 {
        let positions = self.relevant_positions();
        if positions.is_empty() {
            return 0.0;
        }
        let sum: f64 = positions.iter().enumerate().map(|(i, &k)| (i + 1) as f64 / k as f64).sum();
        sum / positions.len() as f64
    }
}

fn scored(outcomes: &[QueryOutcome]) -> Result<Vec<&QueryOutcome>> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let kept: Vec<&QueryOutcome> = outcomes
        .iter()
        .filter(|o| {
            if o.relevant.is_empty() {
                log::warn!("query `{}` has no relevant apis; excluded", o.query_id);
                false
            } else {
                true
            }
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(kept)
}

/// Share of queries with a relevant item in the top `k`.
pub fn hit_at_k(outcomes: &[QueryOutcome], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let kept = scored(outcomes)?;
    let hits = kept.iter().filter(|o| o.first_relevant().is_some_and(|r| r <= k)).count();
    Ok(hits as f64 / kept.len() as f64)
}

pub fn mean_average_precision(outcomes: &[QueryOutcome]) -> Result<f64> {
    let kept = scored(outcomes)?;
    Ok(kept.iter().map(|o| o.average_precision()).sum::<f64>() / kept.len() as f64)
}

/// Mean of `1 / rank` of the first relevant item; misses contribute 0.
pub fn mean_reciprocal_rank(outcomes: &[QueryOutcome]) -> Result<f64> {
    let kept = scored(outcomes)?;
    let sum: f64 = kept.iter().map(|o| o.first_relevant().map_or(0.0, |r| 1.0 / r as f64)).sum();
    Ok(sum / kept.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricSummary {
    pub hit1: f64,
    pub hit3: f64,
    pub hit5: f64,
    pub map: f64,
    pub mrr: f64,
}

impl MetricSummary {
    pub fn compute(outcomes: &[QueryOutcome]) -> Result<Self> {
        Ok(Self {
            hit1: hit_at_k(outcomes, 1)?,
            hit3: hit_at_k(outcomes, 3)?,
            hit5: hit_at_k(outcomes, 5)?,
            map: mean_average_precision(outcomes)?,
            mrr: mean_reciprocal_rank(outcomes)?,
        })
    }

    pub fn mean(items: &[MetricSummary]) -> Self {
        if items.is_empty() {
            return Self::default();
        }
        let n = items.len() as f64;
        let sum = |f: fn(&MetricSummary) -> f64| items.iter().map(f).sum::<f64>() / n;
        Self { hit1: sum(|m| m.hit1), hit3: sum(|m| m.hit3), hit5: sum(|m| m.hit5), map: sum(|m| m.map), mrr: sum(|m| m.mrr) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    /// Outcome whose single relevant item sits at `pos` (None = missing).
    fn at(pos: Option<usize>, len: usize) -> QueryOutcome {
        let ranked: Vec<String> = (1..=len).map(|i| format!("a{i}")).collect();
        let relevant = match pos {
            Some(p) => vec![format!("a{p}")],
            None => vec!["absent".into()],
        };
        QueryOutcome::new("q", ranked, relevant)
    }

    #[test]
    fn hit_at_k_examples() {
        let o = [at(Some(1), 20), at(Some(3), 20), at(Some(11), 20)];
        assert!((hit_at_k(&o, 3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(hit_at_k(&o, 20).unwrap(), hit_at_k(&o, 100).unwrap());
        assert_eq!(hit_at_k(&[at(None, 5), at(None, 5)], 5).unwrap(), 0.0);
        assert!(hit_at_k(&[], 1).is_err());
        assert!(hit_at_k(&o, 0).is_err());
    }

    #[test]
    fn map_examples() {
        let two = QueryOutcome::new("q", vec!["x".into(), "y".into(), "z".into()], vec!["x".into(), "z".into()]);
        assert!((mean_average_precision(&[two]).unwrap() - 0.8333333333).abs() < 1e-9);
        assert_eq!(mean_average_precision(&[at(Some(1), 10)]).unwrap(), 1.0);
        assert!((mean_average_precision(&[at(Some(10), 10)]).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(mean_average_precision(&[at(None, 10)]).unwrap(), 0.0);
    }

    #[test]
    fn mrr_examples() {
        let o = [at(Some(1), 5), at(Some(2), 5), at(Some(4), 5)];
        assert!((mean_reciprocal_rank(&o).unwrap() - 0.5833333333).abs() < 1e-9);
        assert_eq!(mean_reciprocal_rank(&[at(Some(1), 3), at(Some(1), 3)]).unwrap(), 1.0);
        assert_eq!(mean_reciprocal_rank(&[at(None, 3)]).unwrap(), 0.0);
    }

    #[test]
    fn empty_relevant_sets_are_excluded() {
        let empty = QueryOutcome::new("e", vec!["a1".into()], Vec::<String>::new());
        let o = [at(Some(1), 3), empty.clone()];
        assert_eq!(mean_average_precision(&o).unwrap(), 1.0);
        assert!(mean_average_precision(&[empty]).is_err());
    }
}
