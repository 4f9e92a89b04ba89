//! On-disk formats: embedding and IDF text files, JSON Lines for the corpus,
//! ranked lists, oracle, dataset and feedback log, the feature CSV dump and
//! the model file.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use feedrank_core::ltr::Node;
use feedrank_core::{
    ApiCorpus, ApiEntry, EmbeddingTable, EngineState, FeatureVector, FeedbackRecord, IdfMode, IdfTable,
    LogRegModel, MartModel, MartParams, OracleStore, RankedListRecommender, RegressionTree, FEATURE_DIM,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::names;

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    Ok(BufReader::new(file).lines().enumerate().map(|(i, l)| (i + 1, l)))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| AppError::io(path, e))
}

/// Parses `token v1 .. vD` lines, optionally preceded by a `<count> <dim>`
/// header.
pub fn parse_embeddings(text: &str, path: &Path) -> Result<EmbeddingTable> {
    let mut dim: Option<usize> = None;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if n == 1 && parts.len() == 2 && parts.iter().all(|p| p.parse::<usize>().is_ok()) {
            dim = Some(parts[1].parse().expect("checked"));
            continue;
        }
        let token = parts[0].to_string();
        let vector = parts[1..]
            .iter()
            .map(|p| p.parse::<f64>().map_err(|_| AppError::format(path, n, format!("bad number `{p}`"))))
            .collect::<Result<Vec<f64>>>()?;
        let want = *dim.get_or_insert(vector.len());
        if vector.len() != want || want == 0 {
            return Err(AppError::format(path, n, format!("expected {want} values for `{token}`, found {}", vector.len())));
        }
        rows.push((token, vector));
    }
    let dim = dim.ok_or_else(|| AppError::format(path, 0, "no embeddings"))?;
    EmbeddingTable::new(dim, rows).map_err(|e| AppError::format(path, 0, e.to_string()))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_embeddings(&text, path)
}

pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let mut out = format!("{} {}\n", table.len(), table.dimension());
    for (token, v) in table.iter() {
        out.push_str(token);
        for x in v {
            write!(out, " {x}").expect("string write");
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// `#docs=<N>` header, then `token<TAB>df` lines.
pub fn read_idf(path: &Path, mode: IdfMode) -> Result<IdfTable> {
    let mut docs = None;
    let mut df = Vec::new();
    for (n, line) in open_lines(path)? {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(v) = line.strip_prefix("#docs=") {
            docs = Some(v.trim().parse::<u64>().map_err(|_| AppError::format(path, n, "bad #docs header"))?);
            continue;
        }
        let (token, count) = line.split_once('\t').ok_or_else(|| AppError::format(path, n, "expected token<TAB>df"))?;
        let count = count.trim().parse::<u64>().map_err(|_| AppError::format(path, n, "bad df"))?;
        df.push((token.to_string(), count));
    }
    let docs = docs.ok_or_else(|| AppError::format(path, 1, "missing #docs header"))?;
    IdfTable::from_counts(docs, df, mode).map_err(|e| AppError::format(path, 0, e.to_string()))
}

pub fn write_idf(path: &Path, idf: &IdfTable) -> Result<()> {
    let mut out = format!("#docs={}\n", idf.doc_count());
    for (token, df) in idf.document_frequencies() {
        writeln!(out, "{token}\t{df}").expect("string write");
    }
    write_file(path, &out)
}

/// Reads JSON Lines into `T`, naming the line of any malformed entry.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in open_lines(path)? {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| AppError::format(path, n, e.to_string()))?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable"));
        out.push('\n');
    }
    write_file(path, &out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusLine {
    pub id: String,
    pub path: String,
    pub description: String,
}

pub fn read_corpus(path: &Path) -> Result<ApiCorpus> {
    let mut entries = Vec::new();
    for (n, line) in open_lines(path)? {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let c: CorpusLine = serde_json::from_str(&line).map_err(|e| AppError::format(path, n, e.to_string()))?;
        entries.push(ApiEntry::new(c.id, c.path, c.description).map_err(|e| AppError::format(path, n, e.to_string()))?);
    }
    ApiCorpus::new(entries).map_err(|e| AppError::format(path, 0, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedListLine {
    pub query: String,
    pub api_ids: Vec<String>,
}

pub fn read_ranked_lists(path: &Path) -> Result<RankedListRecommender> {
    let mut rec = RankedListRecommender::new();
    for line in read_jsonl::<RankedListLine>(path)? {
        rec.insert(&line.query, line.api_ids);
    }
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleLine {
    pub query: String,
    pub apis: Vec<String>,
}

pub fn read_oracle(path: &Path) -> Result<OracleStore> {
    let mut store = OracleStore::new();
    for line in read_jsonl::<OracleLine>(path)? {
        store.insert(&line.query, line.apis)?;
    }
    Ok(store)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub query: String,
    pub relevant_apis: Vec<String>,
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetItem>> {
    read_jsonl(path)
}

/// A feedback log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackLine {
    pub session: String,
    pub ts: u64,
    pub query: String,
    pub selected: String,
    pub list: Vec<String>,
    pub features: Vec<[f64; FEATURE_DIM]>,
}

impl From<&FeedbackRecord> for FeedbackLine {
    fn from(r: &FeedbackRecord) -> Self {
        Self {
            session: r.session_id.clone(),
            ts: r.timestamp_ms,
            query: r.query.clone(),
            selected: r.selected_api.clone(),
            list: r.list.clone(),
            features: r.features.iter().map(FeatureVector::to_array).collect(),
        }
    }
}

impl TryFrom<FeedbackLine> for FeedbackRecord {
    type Error = feedrank_core::Error;

    fn try_from(l: FeedbackLine) -> Result<Self, Self::Error> {
        let features = l.features.into_iter().map(FeatureVector::from_array).collect();
        FeedbackRecord::new(l.session, l.ts, l.query, l.selected, l.list, features)
    }
}

pub fn feedback_to_line(record: &FeedbackRecord) -> String {
    serde_json::to_string(&FeedbackLine::from(record)).expect("serializable")
}

pub fn feedback_from_line(line: &str) -> std::result::Result<FeedbackRecord, String> {
    let parsed: FeedbackLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    FeedbackRecord::try_from(parsed).map_err(|e| e.to_string())
}

pub const FEATURE_CSV_HEADER: [&str; 9] = ["api_id", "ff1", "ff2", "ff3", "ff4", "ff5", "path_sim", "desc_sim", "label"];

/// Writes one row per `(api_id, features, label)`.
pub fn write_feature_csv<W: Write>(out: W, rows: &[(String, FeatureVector, u8)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| AppError::Invalid(format!("feature csv: {e}"));
    w.write_record(FEATURE_CSV_HEADER).map_err(wrap)?;
    for (id, fv, label) in rows {
        let mut rec = vec![id.clone()];
        rec.extend(fv.to_array().iter().map(|x| x.to_string()));
        rec.push(label.to_string());
        w.write_record(&rec).map_err(wrap)?;
    }
    w.flush().map_err(|e| AppError::Invalid(format!("feature csv: {e}")))
}

const MODEL_MAGIC: &str = "feedrank-model v1";

fn params_line(p: &MartParams) -> String {
    format!(
        "params n_trees={} learning_rate={:?} max_leaves={} min_samples_leaf={} sigma={:?} gamma={:?} beta={:?} delta_metric={} lambda_sign={}",
        p.n_trees,
        p.learning_rate,
        p.max_leaves,
        p.min_samples_leaf,
        p.sigma,
        p.gamma,
        p.beta,
        names::delta_metric_name(p.delta_metric),
        names::lambda_sign_name(p.lambda_sign),
    )
}

/// Text serialization of an engine state. Floats use Rust's shortest
/// round-trip representation, so parsing gives back identical values.
pub fn model_to_string(state: &EngineState) -> String {
    let mut out = format!("{MODEL_MAGIC}\nversion {}\n", state.model_version);
    if let Some(m) = &state.mart {
        out.push_str(&params_line(&m.params));
        out.push('\n');
        writeln!(out, "trees {}", m.trees().len()).expect("string write");
        for (tree, w) in m.trees().iter().zip(m.weights()) {
            let nodes = tree.preorder();
            writeln!(out, "tree {w:?} {}", nodes.len()).expect("string write");
            for node in nodes {
                match node {
                    Node::Split { feature, threshold, left, right } => {
                        writeln!(out, "S {feature} {threshold:?} {left} {right}").expect("string write")
                    }
                    Node::Leaf { value } => writeln!(out, "L {value:?}").expect("string write"),
                }
            }
        }
    }
    if let Some(c) = &state.logreg {
        out.push_str("logreg");
        for w in c.weights.iter().chain(std::iter::once(&c.bias)) {
            write!(out, " {w:?}").expect("string write");
        }
        out.push('\n');
    }
    out
}

struct Cursor<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    path: &'a Path,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<Option<&'a str>> {
        Ok(self.lines.next().map(|(i, l)| {
            self.line = i + 1;
            l
        }))
    }

    fn expect(&mut self) -> Result<&'a str> {
        self.next()?.ok_or_else(|| AppError::format(self.path, self.line + 1, "unexpected end of model file"))
    }

    fn err(&self, msg: impl Into<String>) -> AppError {
        AppError::format(self.path, self.line, msg)
    }

    fn num<T: std::str::FromStr>(&self, s: Option<&str>) -> Result<T> {
        s.and_then(|s| s.parse().ok()).ok_or_else(|| self.err("bad number"))
    }
}

fn parse_params(line: &str, c: &Cursor<'_>) -> Result<MartParams> {
    let mut p = MartParams::default();
    for kv in line.split_whitespace().skip(1) {
        let (k, v) = kv.split_once('=').ok_or_else(|| c.err(format!("bad param `{kv}`")))?;
        match k {
            "n_trees" => p.n_trees = c.num(Some(v))?,
            "learning_rate" => p.learning_rate = c.num(Some(v))?,
            "max_leaves" => p.max_leaves = c.num(Some(v))?,
            "min_samples_leaf" => p.min_samples_leaf = c.num(Some(v))?,
            "sigma" => p.sigma = c.num(Some(v))?,
            "gamma" => p.gamma = c.num(Some(v))?,
            "beta" => p.beta = c.num(Some(v))?,
            "delta_metric" => p.delta_metric = names::delta_metric(v).ok_or_else(|| c.err("bad delta_metric"))?,
            "lambda_sign" => p.lambda_sign = names::lambda_sign(v).ok_or_else(|| c.err("bad lambda_sign"))?,
            _ => return Err(c.err(format!("unknown param `{k}`"))),
        }
    }
    Ok(p)
}

pub fn parse_model(text: &str, path: &Path) -> Result<EngineState> {
    let mut c = Cursor { lines: text.lines().enumerate().peekable(), path, line: 0 };
    if c.expect()? != MODEL_MAGIC {
        return Err(c.err("not a feedrank model file"));
    }
    let version_line = c.expect()?;
    let model_version = c.num(version_line.strip_prefix("version "))?;
    let mut state = EngineState { mart: None, logreg: None, model_version };
    while let Some(line) = c.next()? {
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with("params ") {
            let params = parse_params(line, &c)?;
            let count_line = c.expect()?;
            let count: usize = c.num(count_line.strip_prefix("trees "))?;
            let mut model = MartModel::empty(params);
            for _ in 0..count {
                let head = c.expect()?;
                let mut parts = head.split_whitespace();
                if parts.next() != Some("tree") {
                    return Err(c.err("expected `tree`"));
                }
                let weight: f64 = c.num(parts.next())?;
                let n: usize = c.num(parts.next())?;
                let mut nodes = Vec::with_capacity(n);
                for _ in 0..n {
                    let l = c.expect()?;
                    let mut f = l.split_whitespace();
                    nodes.push(match f.next() {
                        Some("S") => Node::Split {
                            feature: c.num(f.next())?,
                            threshold: c.num(f.next())?,
                            left: c.num(f.next())?,
                            right: c.num(f.next())?,
                        },
                        Some("L") => Node::Leaf { value: c.num(f.next())? },
                        _ => return Err(c.err("expected a node line")),
                    });
                }
                let tree = RegressionTree::from_nodes(nodes).ok_or_else(|| c.err("malformed tree"))?;
                model.push(tree, weight);
            }
            state.mart = Some(model);
        } else if let Some(rest) = line.strip_prefix("logreg") {
            let vals = rest
                .split_whitespace()
                .map(|v| c.num::<f64>(Some(v)))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != FEATURE_DIM + 1 {
                return Err(c.err(format!("logreg needs {} values", FEATURE_DIM + 1)));
            }
            let mut weights = [0.0; FEATURE_DIM];
            weights.copy_from_slice(&vals[..FEATURE_DIM]);
            state.logreg = Some(LogRegModel { weights, bias: vals[FEATURE_DIM] });
        } else {
            return Err(c.err(format!("unexpected line `{line}`")));
        }
    }
    Ok(state)
}

pub fn read_model(path: &Path) -> Result<EngineState> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_model(&text, path)
}

/// Writes to a sibling temp file and renames, so readers never see a
/// half-written model.
pub fn write_model(path: &Path, state: &EngineState) -> Result<()> {
    let tmp = path.with_extension("tmp");
    write_file(&tmp, &model_to_string(state))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use feedrank_core::ltr::{train, LabeledGroup};
    use feedrank_core::LabeledInstance;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn embeddings_with_and_without_header() {
        let t = parse_embeddings("2 3\nfoo 1 0 0\nbar 0 1 0.5\n", p()).unwrap();
        assert_eq!((t.len(), t.dimension()), (2, 3));
        let t = parse_embeddings("foo 1 2\nbar 3 4\n", p()).unwrap();
        assert_eq!(t.dimension(), 2);
    }

    #[test]
    fn embedding_width_error_names_line() {
        let err = parse_embeddings("foo 1 0 0\nbar 0 1\n", p()).unwrap_err();
        assert!(matches!(err, AppError::Format { line: 2, .. }), "{err}");
        let err = parse_embeddings("foo 1 x\n", p()).unwrap_err();
        assert!(matches!(err, AppError::Format { line: 1, .. }));
    }

    #[test]
    fn feedback_line_round_trip() {
        let r = FeedbackRecord::new(
            "s",
            7,
            "stop thread",
            "b",
            vec!["a".into(), "b".into()],
            vec![FeatureVector::default(), FeatureVector::from_array([0.1, 0.0, 0.0, 0.0, 0.0, 1.0 / 3.0, 0.7])],
        )
        .unwrap();
        let back = feedback_from_line(&feedback_to_line(&r)).unwrap();
        assert_eq!(back, r);
        assert!(feedback_from_line(r#"{"session":"s","ts":1,"query":"q","selected":"z","list":["a"],"features":[[0,0,0,0,0,0,0]]}"#).is_err());
    }

    #[test]
    fn model_round_trip_is_exact() {
        let groups: Vec<LabeledGroup> = (0..12)
            .map(|g| LabeledGroup {
                id: g,
                instances: (0..5)
                    .map(|k| {
                        let x = [0.0, 0.1 * k as f64, 0.0, 0.0, 0.0, (g as f64 * 0.37 + k as f64 * 0.11) % 1.0, 0.2];
                        LabeledInstance::new(FeatureVector::from_array(x), u8::from(k == (g % 5) as usize))
                    })
                    .collect(),
            })
            .collect();
        let mart = train(&groups, &MartParams { n_trees: 15, ..MartParams::default() }).unwrap();
        let logreg = LogRegModel { weights: [0.1, -0.2, 1.0 / 3.0, 0.0, 5e-17, 2.0, -1.5], bias: 0.25 };
        let state = EngineState { mart: Some(mart), logreg: Some(logreg), model_version: 4 };
        let text = model_to_string(&state);
        let back = parse_model(&text, p()).unwrap();
        assert_eq!(back, state);
        assert_eq!(model_to_string(&back), text);

        let cold = EngineState::cold();
        assert_eq!(parse_model(&model_to_string(&cold), p()).unwrap(), cold);
    }

    #[test]
    fn model_errors_carry_line() {
        let err = parse_model("feedrank-model v1\nversion 1\nlogreg 1 2\n", p()).unwrap_err();
        assert!(matches!(err, AppError::Format { line: 3, .. }));
        assert!(parse_model("something else\n", p()).is_err());
    }

    #[test]
    fn feature_csv_header() {
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &[("a".into(), FeatureVector::default(), 1)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("api_id,ff1,ff2,ff3,ff4,ff5,path_sim,desc_sim,label\na,0,0,0,0,0,0,0,1"));
    }
}
