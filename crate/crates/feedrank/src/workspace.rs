//! A data directory and what is loaded from it.
//!
//! ```text
//! corpus.jsonl         required
//! embeddings.txt       required
//! idf.tsv              optional, otherwise counted over the corpus
//! ranked_lists.jsonl   optional base lists; unknown queries fall back to
//!                      embedding retrieval
//! oracle.jsonl         optional, enables active learning at session close
//! dataset.jsonl        optional, for the eval commands
//! feedback.jsonl       feedback log, created on first append
//! model.txt            last trained models
//! ```

use std::path::{Path, PathBuf};

use feedrank_core::{
    BaseRecommender, EmbeddingRecommender, IdfMode, IdfTable, KnowledgeBase, OracleStore, SimilarityModel,
};

use crate::error::Result;
use crate::formats::{self, DatasetItem};

pub const CORPUS: &str = "corpus.jsonl";
pub const EMBEDDINGS: &str = "embeddings.txt";
pub const IDF: &str = "idf.tsv";
pub const RANKED_LISTS: &str = "ranked_lists.jsonl";
pub const ORACLE: &str = "oracle.jsonl";
pub const DATASET: &str = "dataset.jsonl";
pub const FEEDBACK: &str = "feedback.jsonl";
pub const MODEL: &str = "model.txt";

pub type Recommender = Box<dyn BaseRecommender + Send + Sync>;

pub struct Workspace {
    pub dir: PathBuf,
    pub kb: KnowledgeBase,
    pub recommender: Recommender,
    pub oracle: Option<OracleStore>,
}

impl Workspace {
    pub fn load(dir: impl Into<PathBuf>, idf_mode: IdfMode) -> Result<Self> {
        let dir = dir.into();
        let corpus = formats::read_corpus(&dir.join(CORPUS))?;
        let embeddings = formats::read_embeddings(&dir.join(EMBEDDINGS))?;
        let idf_path = dir.join(IDF);
        let idf = if idf_path.exists() {
            formats::read_idf(&idf_path, idf_mode)?
        } else {
            IdfTable::build(&corpus.documents(), idf_mode)?
        };
        let kb = KnowledgeBase::new(corpus, SimilarityModel::new(embeddings, idf));
        let lists_path = dir.join(RANKED_LISTS);
        let recommender: Recommender = if lists_path.exists() {
            Box::new(formats::read_ranked_lists(&lists_path)?.with_fallback(Box::new(EmbeddingRecommender)))
        } else {
            Box::new(EmbeddingRecommender)
        };
        let oracle_path = dir.join(ORACLE);
        let oracle = if oracle_path.exists() { Some(formats::read_oracle(&oracle_path)?) } else { None };
        Ok(Self { dir, kb, recommender, oracle })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn dataset(&self) -> Result<Vec<DatasetItem>> {
        formats::read_dataset(&self.dir.join(DATASET))
    }
}

pub fn feedback_path(dir: &Path) -> PathBuf {
    dir.join(FEEDBACK)
}
