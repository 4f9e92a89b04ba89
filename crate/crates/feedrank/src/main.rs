use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use feedrank::config::Settings;
use feedrank::error::{AppError, Result};
use feedrank::experiments::{self, Pipeline};
use feedrank::repository::{self, FeedbackLog};
use feedrank::service::{self, AppState};
use feedrank::workspace::{self, Workspace};
use feedrank::{formats, names, synth};
use feedrank_core::engine::retrain;
use feedrank_core::features::extract;
use feedrank_core::{BaseRecommender, EngineState, Query};

#[derive(Parser, Debug)]
#[command(name = "feedrank", version, about = "Feedback-boosted re-ranking of API recommendations")]
struct Cli {
    /// Flat key=value file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    trees: Option<usize>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    #[arg(long, global = true)]
    top_n: Option<usize>,
    /// map or ndcg
    #[arg(long, global = true)]
    delta_metric: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        addr: Option<String>,
        /// Static files served under /ui.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Re-rank one query with the current models and feedback.
    Query {
        text: String,
        #[arg(long)]
        json: bool,
        /// Also dump the feature vectors as CSV to this file.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Retrain from the feedback log and write the model file.
    Train,
    #[command(subcommand)]
    Eval(Eval),
    /// Write the synthetic evaluation suite to a directory.
    GenSynth {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ReportOut {
    /// Folds per repeat.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Write `<out>.csv` and `<out>.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Eval {
    Cv(ReportOut),
    Accumulate {
        #[command(flatten)]
        report: ReportOut,
        #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
        fractions: Vec<f64>,
    },
    PseudoUser {
        #[arg(long, default_value_t = 50)]
        n_queries: usize,
    },
    Overhead {
        /// Feedback records to train on, built from the dataset.
        #[arg(long, default_value_t = 1000)]
        records: usize,
        #[arg(long, default_value_t = 3)]
        train_runs: usize,
    },
}

fn settings(cli: &Cli, addr: Option<&str>) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &cli.config {
        s.apply_file(path)?;
    }
    if let Some(v) = cli.epsilon {
        s.epsilon = v;
    }
    if let Some(v) = cli.trees {
        s.trees = v;
    }
    if let Some(v) = cli.learning_rate {
        s.learning_rate = v;
    }
    if let Some(v) = cli.top_n {
        s.top_n = v;
    }
    if let Some(v) = &cli.delta_metric {
        s.delta_metric = names::delta_metric(v).ok_or_else(|| AppError::Config(format!("invalid delta_metric `{v}`")))?;
    }
    if let Some(v) = cli.seed {
        s.seed = v;
    }
    if let Some(v) = &cli.data_dir {
        s.data_dir = v.clone();
    }
    if let Some(v) = addr {
        s.addr = v.to_string();
    }
    Ok(s)
}

/// Saved models if present, otherwise trained from the log.
fn initial_state(ws: &Workspace, records: &[feedrank_core::FeedbackRecord], s: &Settings) -> Result<EngineState> {
    let model = ws.path(workspace::MODEL);
    if model.exists() {
        return formats::read_model(&model);
    }
    let out = retrain(&EngineState::cold(), records, &ws.kb, &ws.recommender, &s.engine_config()?, None)?;
    Ok(out.state)
}

fn write_report(report: &experiments::ExperimentReport, out: Option<&Path>) -> Result<()> {
    let csv = report.to_csv()?;
    print!("{csv}");
    if let Some(out) = out {
        let csv_path = out.with_extension("csv");
        std::fs::write(&csv_path, csv).map_err(|e| AppError::io(&csv_path, e))?;
        let json_path = out.with_extension("json");
        std::fs::write(&json_path, report.to_json()).map_err(|e| AppError::io(&json_path, e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let addr = match &cli.command {
        Command::Serve { addr, .. } => addr.clone(),
        _ => None,
    };
    let s = settings(&cli, addr.as_deref())?;
    let config = s.engine_config()?;
    match cli.command {
        Command::GenSynth { out } => {
            let suite = synth::generate(&synth::SynthParams { seed: cli.seed.unwrap_or(7), ..Default::default() })?;
            suite.write_to(&out)?;
            println!("wrote {} queries, {} apis to {}", suite.dataset.len(), suite.corpus.len(), out.display());
        }
        Command::Serve { ui, .. } => {
            let ws = Workspace::load(&s.data_dir, s.idf_mode)?;
            let log = FeedbackLog::open(workspace::feedback_path(&s.data_dir))?;
            let state = initial_state(&ws, log.records(), &s)?;
            let model_path = ws.path(workspace::MODEL);
            let app = AppState::new(ws, config, log, state, Some(model_path));
            let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::Invalid(e.to_string()))?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(&s.addr).await.map_err(|e| AppError::Invalid(format!("bind {}: {e}", s.addr)))?;
                log::info!("listening on {}", s.addr);
                axum::serve(listener, service::router(app, ui))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
                    .map_err(|e| AppError::Invalid(e.to_string()))
            })?;
        }
        Command::Query { text, json, features } => {
            let ws = Workspace::load(&s.data_dir, s.idf_mode)?;
            let repo = repository::load(&workspace::feedback_path(&s.data_dir))?;
            let state = initial_state(&ws, repo.records(), &s)?;
            let list = ws.recommender.recommend(&Query::new(&text), &ws.kb, config.top_n)?;
            let vectors = extract(&list, repo.records(), &ws.kb, &config.extract)?;
            let result = state.rerank(&list, &vectors)?;
            if let Some(path) = features {
                let rows: Vec<_> = list.ids().into_iter().zip(vectors.iter().copied()).map(|(id, v)| (id, v, 0u8)).collect();
                let file = std::fs::File::create(&path).map_err(|e| AppError::io(&path, e))?;
                formats::write_feature_csv(file, &rows)?;
            }
            if json {
                let items: Vec<_> = result
                    .items
                    .iter()
                    .enumerate()
                    .map(|(i, it)| serde_json::json!({"rank": i + 1, "api_id": it.api_id, "pred_score": it.pred_score}))
                    .collect();
                println!("{}", serde_json::json!({"model_version": result.model_version, "items": items}));
            } else {
                for (i, it) in result.items.iter().enumerate() {
                    println!("{:>2}  {:<50} {:.4}", i + 1, it.api_id, it.pred_score);
                }
            }
        }
        Command::Train => {
            let ws = Workspace::load(&s.data_dir, s.idf_mode)?;
            let repo = repository::load(&workspace::feedback_path(&s.data_dir))?;
            let current = match ws.path(workspace::MODEL) {
                p if p.exists() => formats::read_model(&p)?,
                _ => EngineState::cold(),
            };
            let out = retrain(&current, repo.records(), &ws.kb, &ws.recommender, &config, None)?;
            if out.retrained {
                formats::write_model(&ws.path(workspace::MODEL), &out.state)?;
                println!("trained on {} records; model version {}", repo.len(), out.state.model_version);
            } else {
                println!("nothing to learn from {} records; models unchanged", repo.len());
            }
        }
        Command::Eval(eval) => {
            let ws = Workspace::load(&s.data_dir, s.idf_mode)?;
            let dataset = ws.dataset()?;
            let pipeline = Pipeline { kb: &ws.kb, recommender: ws.recommender.as_ref(), config };
            match eval {
                Eval::Cv(r) => {
                    let report = experiments::cross_validate(
                        &dataset,
                        &pipeline,
                        r.folds.unwrap_or(s.folds),
                        r.repeats.unwrap_or(s.repeats),
                        s.seed,
                    )?;
                    write_report(&report, r.out.as_deref())?;
                }
                Eval::Accumulate { report: r, fractions } => {
                    let report = experiments::accumulation_experiment(
                        &dataset,
                        &pipeline,
                        &fractions,
                        r.folds.unwrap_or(s.folds),
                        r.repeats.unwrap_or(s.repeats),
                        s.seed,
                    )?;
                    write_report(&report, r.out.as_deref())?;
                }
                Eval::PseudoUser { n_queries } => {
                    let report = experiments::pseudo_user_experiment(&dataset, &pipeline, n_queries, s.seed)?;
                    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
                }
                Eval::Overhead { records, train_runs } => {
                    // Some queries miss their target, so oversample and cut.
                    let items: Vec<&formats::DatasetItem> = dataset.iter().cycle().take(records * 2).collect();
                    let mut recs = experiments::build_records(&pipeline, &items, "overhead")?;
                    recs.truncate(records);
                    let queries: Vec<String> = dataset.iter().map(|d| d.query.clone()).collect();
                    let report = experiments::overhead_benchmark(&pipeline, &recs, &queries, train_runs)?;
                    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ AppError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
