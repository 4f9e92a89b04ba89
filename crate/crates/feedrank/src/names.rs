//! String names for the core enums, shared by the config file, CLI and model
//! file.

use feedrank_core::{Alg1Mode, DeltaMetric, IdfMode, LambdaSign};

pub fn delta_metric(s: &str) -> Option<DeltaMetric> {
    match s.to_ascii_lowercase().as_str() {
        "map" => Some(DeltaMetric::Map),
        "ndcg" => Some(DeltaMetric::Ndcg),
        _ => None,
    }
}

pub fn delta_metric_name(m: DeltaMetric) -> &'static str {
    match m {
        DeltaMetric::Map => "map",
        DeltaMetric::Ndcg => "ndcg",
    }
}

pub fn lambda_sign(s: &str) -> Option<LambdaSign> {
    match s.to_ascii_lowercase().as_str() {
        "standard" => Some(LambdaSign::Standard),
        "flipped" => Some(LambdaSign::Flipped),
        _ => None,
    }
}

pub fn lambda_sign_name(s: LambdaSign) -> &'static str {
    match s {
        LambdaSign::Standard => "standard",
        LambdaSign::Flipped => "flipped",
    }
}

pub fn idf_mode(s: &str) -> Option<IdfMode> {
    match s.to_ascii_lowercase().as_str() {
        "smoothed" => Some(IdfMode::Smoothed),
        "raw" | "raw_df" | "rawdf" => Some(IdfMode::RawDf),
        _ => None,
    }
}

pub fn idf_mode_name(m: IdfMode) -> &'static str {
    match m {
        IdfMode::Smoothed => "smoothed",
        IdfMode::RawDf => "raw_df",
    }
}

pub fn alg1_mode(s: &str) -> Option<Alg1Mode> {
    match s.to_ascii_lowercase().as_str() {
        "per_api" | "perapi" => Some(Alg1Mode::PerApi),
        "literal" => Some(Alg1Mode::Literal),
        _ => None,
    }
}

pub fn alg1_mode_name(m: Alg1Mode) -> &'static str {
    match m {
        Alg1Mode::PerApi => "per_api",
        Alg1Mode::Literal => "literal",
    }
}
