//! Generator for the synthetic evaluation suite: an invented vocabulary with
//! synonym clusters, an API corpus organised in object families, paraphrased
//! queries per (action, object) intent, and a deliberately noisy base
//! recommender expressed as ranked lists.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use feedrank_core::text::{is_stopword, porter_stem, preprocess};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{AppError, Result};
use crate::formats::{self, CorpusLine, DatasetItem, OracleLine, RankedListLine};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub objects: usize,
    pub actions: usize,
    pub synonyms: usize,
    pub paraphrases: usize,
    pub oracle_paraphrases: usize,
    pub dim: usize,
    /// Spread of a synonym around its cluster centre.
    pub synonym_noise: f64,
    pub list_len: usize,
    /// Chance that the base list misses the target entirely.
    pub miss_rate: f64,
    /// Chance that a paraphrase uses a vague verb instead of its action.
    pub vague_rate: f64,
    /// Chance that a description word is swapped for an unrelated one.
    pub description_noise: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 7,
            objects: 10,
            actions: 4,
            synonyms: 4,
            paraphrases: 5,
            oracle_paraphrases: 2,
            dim: 32,
            synonym_noise: 0.3,
            list_len: 10,
            miss_rate: 0.1,
            vague_rate: 0.15,
            description_noise: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSuite {
    pub corpus: Vec<CorpusLine>,
    pub embeddings: Vec<(String, Vec<f64>)>,
    pub dim: usize,
    pub ranked_lists: Vec<RankedListLine>,
    pub dataset: Vec<DatasetItem>,
    pub oracle: Vec<OracleLine>,
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aiou";
const FILLERS: usize = 6;
const DISTRACTOR_ACTIONS: usize = 4;

struct Words<'a> {
    rng: &'a mut ChaCha8Rng,
    used: BTreeSet<String>,
}

impl Words<'_> {
    /// A fresh lowercase pseudo-word that survives preprocessing unchanged.
    fn fresh(&mut self) -> String {
        loop {
            let syllables = self.rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(*CONSONANTS.choose(self.rng).expect("non-empty") as char);
                w.push(*VOWELS.choose(self.rng).expect("non-empty") as char);
            }
            if !is_stopword(&w) && porter_stem(&w) == w && self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
}

/// Orthonormal directions by Gram-Schmidt over Gaussian draws.
fn orthonormal(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < count {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

/// Rounded so the in-memory suite equals what is read back from disk.
fn jitter(rng: &mut ChaCha8Rng, base: &[f64], noise: f64) -> Vec<f64> {
    let scale = noise / (base.len() as f64).sqrt();
    base.iter()
        .map(|b| {
            let z: f64 = rng.sample(StandardNormal);
            ((b + scale * z) * 1e6).round() / 1e6
        })
        .collect()
}

struct Cluster {
    words: Vec<String>,
}

pub fn generate(p: &SynthParams) -> Result<SynthSuite> {
    if p.objects == 0 || p.actions == 0 || p.synonyms == 0 || p.paraphrases == 0 || p.list_len < 2 {
        return Err(AppError::Invalid("synthetic suite needs at least one of everything".into()));
    }
    let clusters_needed = p.objects + p.actions + DISTRACTOR_ACTIONS + FILLERS + 1;
    if clusters_needed > p.dim {
        return Err(AppError::Invalid(format!("dim must be at least {clusters_needed}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let bases = orthonormal(&mut rng, clusters_needed, p.dim);
    let mut words = Words { rng: &mut rng, used: BTreeSet::new() };

    let mut embeddings = Vec::new();
    let mut clusters = Vec::new();
    for i in 0..clusters_needed {
        let is_filler = i >= p.objects + p.actions + DISTRACTOR_ACTIONS && i < clusters_needed - 1;
        let size = if is_filler { 1 } else if i >= p.objects + p.actions { 2 } else { p.synonyms };
        clusters.push(Cluster { words: (0..size).map(|_| words.fresh()).collect() });
    }
    for (cluster, base) in clusters.iter().zip(&bases) {
        for w in &cluster.words {
            let v = jitter(&mut rng, base, p.synonym_noise);
            embeddings.push((w.clone(), v));
        }
    }
    let objects = &clusters[..p.objects];
    let actions = &clusters[p.objects..p.objects + p.actions];
    let extra_actions = &clusters[p.objects + p.actions..p.objects + p.actions + DISTRACTOR_ACTIONS];
    let fillers: Vec<&str> = clusters[p.objects + p.actions + DISTRACTOR_ACTIONS..clusters_needed - 1]
        .iter()
        .map(|c| c.words[0].as_str())
        .collect();
    let vague = &clusters[clusters_needed - 1].words;

    // Per object: one target per action, one variant of each target with a
    // filler qualifier, and distractors built on unrelated actions.
    let mut corpus = Vec::new();
    let mut targets = vec![vec![String::new(); p.actions]; p.objects];
    let mut family: Vec<Vec<String>> = vec![Vec::new(); p.objects];
    for (o, obj) in objects.iter().enumerate() {
        let class = capitalize(&obj.words[0]);
        let add = |rng: &mut ChaCha8Rng, method: String, verb: &str, corpus: &mut Vec<CorpusLine>| {
            let path = format!("synth.{class}.{method}");
            let obj_word = obj.words.choose(rng).expect("non-empty").clone();
            let mut desc: Vec<String> = vec![verb.to_string(), "the".into(), obj_word];
            for _ in 0..2 {
                desc.push(fillers.choose(rng).expect("non-empty").to_string());
            }
            for w in desc.iter_mut() {
                if w != "the" && rng.random_bool(p.description_noise) {
                    let c = &clusters[rng.random_range(0..clusters.len())];
                    *w = c.words.choose(rng).expect("non-empty").clone();
                }
            }
            let mut description = capitalize(&desc.join(" "));
            description.push('.');
            corpus.push(CorpusLine { id: path.clone(), path: path.clone(), description });
            path
        };
        for (a, act) in actions.iter().enumerate() {
            let verb = act.words.choose(&mut rng).expect("non-empty").clone();
            let id = add(&mut rng, act.words[0].clone(), &verb, &mut corpus);
            targets[o][a] = id.clone();
            family[o].push(id);
            let q = fillers[(o + a) % fillers.len()];
            let verb = act.words.choose(&mut rng).expect("non-empty").clone();
            let id = add(&mut rng, format!("{}{}", act.words[0], capitalize(q)), &verb, &mut corpus);
            family[o].push(id);
        }
        for act in extra_actions {
            let verb = act.words.choose(&mut rng).expect("non-empty").clone();
            let id = add(&mut rng, act.words[0].clone(), &verb, &mut corpus);
            family[o].push(id);
        }
    }
    let all_ids: Vec<String> = corpus.iter().map(|c| c.id.clone()).collect();

    let mut seen_bags = BTreeSet::new();
    let mut paraphrase = |rng: &mut ChaCha8Rng, o: usize, a: usize| -> String {
        loop {
            let verb = if rng.random_bool(p.vague_rate) {
                vague.choose(rng).expect("non-empty")
            } else {
                actions[a].words.choose(rng).expect("non-empty")
            };
            let noun = objects[o].words.choose(rng).expect("non-empty");
            let mut parts = vec![verb.as_str(), noun.as_str()];
            if rng.random_bool(0.5) {
                parts.push(fillers.choose(rng).expect("non-empty"));
            }
            parts.shuffle(rng);
            let text = if rng.random_bool(0.3) { format!("how to {}", parts.join(" ")) } else { parts.join(" ") };
            let mut key: Vec<String> = preprocess(&text).tokens().to_vec();
            key.sort();
            if seen_bags.insert(key) {
                return text;
            }
        }
    };

    let mut dataset = Vec::new();
    let mut oracle = Vec::new();
    let mut queries: Vec<(String, String)> = Vec::new();
    for o in 0..p.objects {
        for a in 0..p.actions {
            for _ in 0..p.paraphrases {
                let q = paraphrase(&mut rng, o, a);
                dataset.push(DatasetItem { query: q.clone(), relevant_apis: vec![targets[o][a].clone()] });
                queries.push((q, targets[o][a].clone()));
            }
            for _ in 0..p.oracle_paraphrases {
                let q = paraphrase(&mut rng, o, a);
                oracle.push(OracleLine { query: q.clone(), apis: vec![targets[o][a].clone()] });
                queries.push((q, targets[o][a].clone()));
            }
        }
    }

    // Base lists: target at a rank skewed towards the top, or missing;
    // the rest drawn mostly from the target's family.
    let weights: Vec<f64> = (1..=p.list_len).map(|r| 1.0 / (r as f64).sqrt()).collect();
    let total: f64 = weights.iter().sum();
    let mut ranked_lists = Vec::new();
    for (query, target) in &queries {
        let o = family.iter().position(|f| f.contains(target)).expect("target in a family");
        let mut mates: Vec<&String> = family[o].iter().filter(|id| *id != target).collect();
        mates.shuffle(&mut rng);
        let mut others: Vec<&String> = all_ids.iter().filter(|id| !family[o].contains(id)).collect();
        others.shuffle(&mut rng);
        let mate_count = (p.list_len * 6 / 10).min(mates.len());
        let mut list: Vec<String> = mates[..mate_count].iter().map(|s| s.to_string()).collect();
        list.extend(others.iter().take(p.list_len - mate_count).map(|s| s.to_string()));
        list.shuffle(&mut rng);
        list.truncate(p.list_len);
        if !rng.random_bool(p.miss_rate) {
            let mut x = rng.random_range(0.0..total);
            let mut rank = p.list_len - 1;
            for (i, w) in weights.iter().enumerate() {
                if x < *w {
                    rank = i;
                    break;
                }
                x -= w;
            }
            list.pop();
            list.insert(rank.min(list.len()), target.clone());
        }
        ranked_lists.push(RankedListLine { query: query.clone(), api_ids: list });
    }

    Ok(SynthSuite { corpus, embeddings, dim: p.dim, ranked_lists, dataset, oracle })
}

impl SynthSuite {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        formats::write_jsonl(&dir.join(crate::workspace::CORPUS), &self.corpus)?;
        formats::write_jsonl(&dir.join(crate::workspace::RANKED_LISTS), &self.ranked_lists)?;
        formats::write_jsonl(&dir.join(crate::workspace::DATASET), &self.dataset)?;
        formats::write_jsonl(&dir.join(crate::workspace::ORACLE), &self.oracle)?;
        let mut emb = format!("{} {}\n", self.embeddings.len(), self.dim);
        for (w, v) in &self.embeddings {
            emb.push_str(w);
            for x in v {
                write!(emb, " {x}").expect("string write");
            }
            emb.push('\n');
        }
        let path = dir.join(crate::workspace::EMBEDDINGS);
        std::fs::write(&path, emb).map_err(|e| AppError::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let p = SynthParams::default();
        let a = generate(&p).unwrap();
        assert_eq!(a, generate(&p).unwrap());
        assert_eq!(a.dataset.len(), 200);
        assert_eq!(a.corpus.len(), 120);
        assert_eq!(a.ranked_lists.len(), 200 + 80);
        assert!(a.ranked_lists.iter().all(|l| l.api_ids.len() == 10));
        let other = generate(&SynthParams { seed: 8, ..p }).unwrap();
        assert_ne!(a.dataset, other.dataset);
    }

    #[test]
    fn words_survive_preprocessing() {
        let s = generate(&SynthParams::default()).unwrap();
        for (w, _) in &s.embeddings {
            assert_eq!(preprocess(w).tokens(), [w.clone()]);
        }
    }

    #[test]
    fn lists_hold_unique_known_ids() {
        let s = generate(&SynthParams::default()).unwrap();
        let ids: BTreeSet<&String> = s.corpus.iter().map(|c| &c.id).collect();
        for l in &s.ranked_lists {
            let set: BTreeSet<&String> = l.api_ids.iter().collect();
            assert_eq!(set.len(), l.api_ids.len());
            assert!(set.iter().all(|id| ids.contains(id)));
        }
    }
}
