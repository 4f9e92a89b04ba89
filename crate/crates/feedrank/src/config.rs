//! Flat `key = value` configuration. Every command-line flag has a key of
//! the same name with dashes replaced by underscores; flags win over the
//! file.

use std::path::{Path, PathBuf};

use feedrank_core::{
    ActiveParams, Alg1Mode, DeltaMetric, EngineConfig, ExtractConfig, FeedbackConfig, IdfMode, LambdaSign, MartParams,
};

use crate::error::{AppError, Result};
use crate::names;

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub epsilon: f64,
    pub trees: usize,
    pub learning_rate: f64,
    pub top_n: usize,
    pub delta_metric: DeltaMetric,
    pub seed: u64,
    pub addr: String,
    pub data_dir: PathBuf,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub sigma: f64,
    pub gamma: f64,
    pub beta: f64,
    pub lambda_sign: LambdaSign,
    pub idf_mode: IdfMode,
    pub alg1_mode: Alg1Mode,
    pub al_iterations: usize,
    pub al_batch: usize,
    pub pool_threshold: f64,
    pub folds: usize,
    pub repeats: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let mart = MartParams::default();
        let active = ActiveParams::default();
        Self {
            epsilon: FeedbackConfig::default().epsilon,
            trees: mart.n_trees,
            learning_rate: mart.learning_rate,
            top_n: feedrank_core::engine::DEFAULT_TOP_N,
            delta_metric: mart.delta_metric,
            seed: 42,
            addr: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("data"),
            max_leaves: mart.max_leaves,
            min_samples_leaf: mart.min_samples_leaf,
            sigma: mart.sigma,
            gamma: mart.gamma,
            beta: mart.beta,
            lambda_sign: mart.lambda_sign,
            idf_mode: IdfMode::Smoothed,
            alg1_mode: Alg1Mode::PerApi,
            al_iterations: active.max_iterations,
            al_batch: active.batch,
            pool_threshold: active.pool_threshold,
            folds: 10,
            repeats: 5,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| AppError::Config(format!("invalid value `{value}` for `{key}`")))
}

impl Settings {
    /// Applies one setting. Keys accept dashes or underscores.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let bad = |what: &str| AppError::Config(format!("invalid {what} `{value}`"));
        match key.as_str() {
            "epsilon" => self.epsilon = parse(&key, value)?,
            "trees" => self.trees = parse(&key, value)?,
            "learning_rate" => self.learning_rate = parse(&key, value)?,
            "top_n" => self.top_n = parse(&key, value)?,
            "delta_metric" => self.delta_metric = names::delta_metric(value).ok_or_else(|| bad("delta_metric"))?,
            "seed" => self.seed = parse(&key, value)?,
            "addr" => self.addr = value.to_string(),
            "data_dir" => self.data_dir = PathBuf::from(value),
            "max_leaves" => self.max_leaves = parse(&key, value)?,
            "min_samples_leaf" => self.min_samples_leaf = parse(&key, value)?,
            "sigma" => self.sigma = parse(&key, value)?,
            "gamma" => self.gamma = parse(&key, value)?,
            "beta" => self.beta = parse(&key, value)?,
            "lambda_sign" => self.lambda_sign = names::lambda_sign(value).ok_or_else(|| bad("lambda_sign"))?,
            "idf_mode" => self.idf_mode = names::idf_mode(value).ok_or_else(|| bad("idf_mode"))?,
            "alg1_mode" => self.alg1_mode = names::alg1_mode(value).ok_or_else(|| bad("alg1_mode"))?,
            "al_iterations" => self.al_iterations = parse(&key, value)?,
            "al_batch" => self.al_batch = parse(&key, value)?,
            "pool_threshold" => self.pool_threshold = parse(&key, value)?,
            "folds" => self.folds = parse(&key, value)?,
            "repeats" => self.repeats = parse(&key, value)?,
            _ => return Err(AppError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a config file. Blank lines and lines starting with `#` are
    /// skipped.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| AppError::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(k, v).map_err(|e| AppError::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        self.apply_str(&text)
    }

    /// Checks every value; problems come back as configuration errors.
    pub fn engine_config(&self) -> Result<EngineConfig> {
        let mart = MartParams {
            n_trees: self.trees,
            learning_rate: self.learning_rate,
            max_leaves: self.max_leaves,
            min_samples_leaf: self.min_samples_leaf,
            sigma: self.sigma,
            gamma: self.gamma,
            beta: self.beta,
            delta_metric: self.delta_metric,
            lambda_sign: self.lambda_sign,
        };
        mart.validate().map_err(invalid)?;
        if self.top_n == 0 {
            return Err(AppError::Config("top_n must be at least 1".into()));
        }
        if self.al_batch == 0 {
            return Err(AppError::Config("al_batch must be at least 1".into()));
        }
        Ok(EngineConfig {
            top_n: self.top_n,
            extract: ExtractConfig { feedback: FeedbackConfig::new(self.epsilon).map_err(invalid)?, alg1_mode: self.alg1_mode },
            mart,
            active: ActiveParams {
                batch: self.al_batch,
                max_iterations: self.al_iterations,
                pool_threshold: self.pool_threshold,
                top_n: self.top_n,
                ..ActiveParams::default()
            },
        })
    }
}

fn invalid(e: feedrank_core::Error) -> AppError {
    AppError::Config(e.to_string())
}
