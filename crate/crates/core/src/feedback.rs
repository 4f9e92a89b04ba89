//! The feedback repository: stored query/selection pairs with the list and
//! feature snapshots they were made on.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::Query;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, LabeledInstance};
use crate::ltr::LabeledGroup;
use crate::text::{preprocess, BagOfWords, SimilarityModel};

pub const DEFAULT_EPSILON: f64 = 0.64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackConfig {
    /// Minimum query similarity for a stored pair to count as similar.
    pub epsilon: f64,
}

impl FeedbackConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside [0, 1]")));
        }
        Ok(Self { epsilon })
    }
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self { epsilon: DEFAULT_EPSILON }
    }
}

/// One user selection: the query, the chosen API and what was shown.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackRecord {
    pub session_id: String,
    /// UTC milliseconds.
    pub timestamp_ms: u64,
    pub query: String,
    pub query_bag: BagOfWords,
    pub selected_api: String,
    /// Ids of the list shown, in display order.
    pub list: Vec<String>,
    /// Feature vector of each listed API, same order as `list`.
    pub features: Vec<FeatureVector>,
}

impl FeedbackRecord {
    pub fn new(
        session_id: impl Into<String>,
        timestamp_ms: u64,
        query: impl Into<String>,
        selected_api: impl Into<String>,
        list: Vec<String>,
        features: Vec<FeatureVector>,
    ) -> Result<Self> {
        let query = query.into();
        let record = Self {
            session_id: session_id.into(),
            timestamp_ms,
            query_bag: preprocess(&query),
            query,
            selected_api: selected_api.into(),
            list,
            features,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.list.contains(&self.selected_api) {
            return Err(Error::InvalidRecord(format!("selected api `{}` is not in the list", self.selected_api)));
        }
        if self.features.len() != self.list.len() {
            return Err(Error::InvalidRecord(format!(
                "{} feature vectors for {} listed apis",
                self.features.len(),
                self.list.len()
            )));
        }
        let mut ids: Vec<&String> = self.list.iter().collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRecord("duplicate api in list".into()));
        }
        Ok(())
    }

    /// 0-based position of the selected API in the snapshot.
    pub fn selected_position(&self) -> usize {
        self.list.iter().position(|id| *id == self.selected_api).unwrap_or(0)
    }

    /// The snapshot as a labeled group: 1 for the selection, 0 otherwise.
    pub fn to_group(&self, id: u64) -> LabeledGroup {
        let instances = self
            .list
            .iter()
            .zip(&self.features)
            .map(|(api, fv)| LabeledInstance::new(*fv, u8::from(*api == self.selected_api)))
            .collect();
        LabeledGroup { id, instances }
    }
}

/// In-memory, append-only store of feedback records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeedbackRepository {
    records: Vec<FeedbackRecord>,
}

impl FeedbackRepository {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<FeedbackRecord>) -> Result<Self> {
        for r in &records {
            r.validate()?;
        }
        Ok(Self { records })
    }

    pub fn append(&mut self, record: FeedbackRecord) -> Result<()> {
        record.validate()?;
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[FeedbackRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarPair<'a> {
    pub record: &'a FeedbackRecord,
    pub similarity: f64,
}

/// Stored pairs whose query is at least epsilon-similar to the current one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarPairSet<'a> {
    entries: Vec<SimilarPair<'a>>,
}

impl<'a> SimilarPairSet<'a> {
    pub fn from_pairs(entries: Vec<SimilarPair<'a>>) -> Self {
        Self { entries }
    }

    pub fn iter(&self) -> impl Iterator<Item = &SimilarPair<'a>> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Records whose query similarity to `query` is at least `epsilon`, in
/// repository order.
pub fn lookup_similar<'a>(
    query: &Query,
    records: &'a [FeedbackRecord],
    sim: &SimilarityModel,
    config: &FeedbackConfig,
) -> SimilarPairSet<'a> {
    if query.bag.is_empty() {
        return SimilarPairSet::default();
    }
    let entries = records
        .iter()
        .filter_map(|record| {
            let similarity = sim.sym_sim(&record.query_bag, &query.bag).ok()?;
            (similarity >= config.epsilon).then_some(SimilarPair { record, similarity })
        })
        .collect();
    SimilarPairSet { entries }
}

/// One labeled group per record; the group id is the record's index.
pub fn build_training_groups(records: &[FeedbackRecord]) -> Result<Vec<LabeledGroup>> {
    if records.is_empty() {
        return Err(Error::NoTrainingData);
    }
    Ok(records.iter().enumerate().map(|(i, r)| r.to_group(i as u64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("api{i}")).collect()
    }

    fn rec(selected: usize, n: usize) -> FeedbackRecord {
        FeedbackRecord::new("s1", 1, "parse json", format!("api{selected}"), ids(n), vec![FeatureVector::default(); n])
            .unwrap()
    }

    #[test]
    fn record_validation() {
        let bad = FeedbackRecord::new("s", 0, "q", "other", ids(3), vec![FeatureVector::default(); 3]);
        assert!(matches!(bad, Err(Error::InvalidRecord(_))));
        let bad = FeedbackRecord::new("s", 0, "q", "api0", ids(3), vec![FeatureVector::default(); 2]);
        assert!(matches!(bad, Err(Error::InvalidRecord(_))));
    }

    #[test]
    fn append_grows_repository() {
        let mut repo = FeedbackRepository::new();
        repo.append(rec(0, 10)).unwrap();
        assert_eq!(repo.len(), 1);
        let mut broken = rec(0, 10);
        broken.selected_api = "nope".to_string();
        assert!(repo.append(broken).is_err());
        assert_eq!(repo.len(), 1);
    }

    #[test]
    fn training_groups() {
        assert_eq!(build_training_groups(&[]), Err(Error::NoTrainingData));
        let groups = build_training_groups(&[rec(3, 10)]).unwrap();
        assert_eq!(groups.len(), 1);
        let labels: Vec<u8> = groups[0].instances.iter().map(|i| i.label).collect();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 1);
        assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 9);
        assert_eq!(labels[3], 1);

        let groups = build_training_groups(&[rec(0, 10), rec(1, 5), rec(4, 5)]).unwrap();
        assert_eq!(groups.len(), 3);
        let total: u32 = groups.iter().flat_map(|g| &g.instances).map(|i| u32::from(i.label)).sum();
        assert_eq!(total, 3);
        assert_eq!(groups[0].instances[0].label, 1);
        assert_eq!(groups.iter().map(|g| g.id).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn epsilon_bounds() {
        assert!(FeedbackConfig::new(1.5).is_err());
        assert_eq!(FeedbackConfig::default().epsilon, 0.64);
    }
}
