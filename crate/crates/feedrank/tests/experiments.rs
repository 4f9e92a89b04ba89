mod common;

use feedrank::experiments::{self, Pipeline};
use feedrank::formats::DatasetItem;
use feedrank::workspace::Workspace;
use feedrank_core::{BaseRecommender, IdfMode, Query};

fn synth() -> (Workspace, Vec<DatasetItem>) {
    let ws = Workspace::load(common::data("synth"), IdfMode::Smoothed).unwrap();
    let ds = ws.dataset().unwrap();
    (ws, ds)
}

#[test]
fn one_row_per_fraction_and_zero_is_the_base() {
    let (ws, ds) = synth();
    let p = Pipeline { kb: &ws.kb, recommender: ws.recommender.as_ref(), config: Default::default() };
    let r = experiments::accumulation_experiment(&ds[..80], &p, &[0.0, 0.5, 1.0], 4, 1, 3).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert_eq!(r.rows[0].config, "base");
    assert!(r.rows[0].p.is_none() && r.rows[1].p.is_some());
    let fractions: Vec<f64> = r.rows.iter().map(|row| row.fraction).collect();
    assert_eq!(fractions, [0.0, 0.5, 1.0]);

    // Every query is tested exactly once per repeat, so the base row is the
    // base recommender's Hit@1 over the whole subset.
    let hits = ds[..80]
        .iter()
        .filter(|d| {
            let list = ws.recommender.recommend(&Query::new(&d.query), &ws.kb, 10).unwrap();
            d.relevant_apis.contains(&list.ids()[0])
        })
        .count();
    assert!((r.rows[0].hit1 - hits as f64 / 80.0).abs() < 1e-12);
    assert!(r.rows.iter().all(|row| (0.0..=1.0).contains(&row.hit1) && row.hit1 <= row.hit3 && row.hit3 <= row.hit5));
    assert_eq!(r.per_repeat.len(), 3);
    assert!(r.per_repeat.iter().all(|runs| runs.len() == 1));

    let again = experiments::accumulation_experiment(&ds[..80], &p, &[0.0, 0.5, 1.0], 4, 1, 3).unwrap();
    let hits = |r: &experiments::ExperimentReport| r.rows.iter().map(|row| (row.hit1, row.map)).collect::<Vec<_>>();
    assert_eq!(hits(&r), hits(&again));

    let csv = r.to_csv().unwrap();
    assert_eq!(csv.lines().count(), 4);
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn bad_parameters_are_rejected() {
    let (ws, ds) = synth();
    let p = Pipeline { kb: &ws.kb, recommender: ws.recommender.as_ref(), config: Default::default() };
    assert!(experiments::accumulation_experiment(&ds, &p, &[1.5], 10, 1, 0).is_err());
    assert!(experiments::accumulation_experiment(&ds, &p, &[0.5], 1, 1, 0).is_err());
    assert!(experiments::pseudo_user_experiment(&ds, &p, 0, 0).is_err());
}

#[test]
fn pseudo_user_selections_are_bounded() {
    let (ws, ds) = synth();
    let p = Pipeline { kb: &ws.kb, recommender: ws.recommender.as_ref(), config: Default::default() };
    let r = experiments::pseudo_user_experiment(&ds, &p, 30, 5).unwrap();
    assert_eq!(r.queries, 30);
    assert!(r.selections <= 30);
    assert!(r.after.hit1 >= r.before.hit1);
}

#[test]
fn overhead_report_shape() {
    let (ws, ds) = synth();
    let p = Pipeline { kb: &ws.kb, recommender: ws.recommender.as_ref(), config: Default::default() };
    let items: Vec<&DatasetItem> = ds.iter().take(40).collect();
    let records = experiments::build_records(&p, &items, "t").unwrap();
    let queries: Vec<String> = ds.iter().skip(40).take(10).map(|d| d.query.clone()).collect();
    let r = experiments::overhead_benchmark(&p, &records, &queries, 1).unwrap();
    assert_eq!((r.queries, r.records), (10, records.len()));
    assert!(r.total_s >= r.train_s && r.train_s > 0.0);
}
