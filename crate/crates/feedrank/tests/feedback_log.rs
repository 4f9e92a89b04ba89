mod common;

use std::io::Write;

use feedrank::repository::{self, FeedbackLog};
use feedrank::workspace::Workspace;
use feedrank::AppError;
use feedrank_core::features::extract;
use feedrank_core::{BaseRecommender, FeedbackRecord, IdfMode, Query};

fn records(n: usize) -> Vec<FeedbackRecord> {
    let ws = Workspace::load(common::data("toy"), IdfMode::Smoothed).unwrap();
    let list = ws.recommender.recommend(&Query::new(common::TOY_QUERY), &ws.kb, 10).unwrap();
    let features = extract(&list, &[], &ws.kb, &Default::default()).unwrap();
    (0..n)
        .map(|i| {
            let selected = list.ids()[i % 10].clone();
            FeedbackRecord::new(format!("s{i}"), i as u64, common::TOY_QUERY, selected, list.ids(), features.clone()).unwrap()
        })
        .collect()
}

#[test]
fn round_trip_through_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("feedback.jsonl");
    let recs = records(5);
    {
        let mut log = FeedbackLog::open(&path).unwrap();
        for r in recs.clone() {
            log.append(r).unwrap();
        }
        assert_eq!(log.len(), 5);
    }
    assert_eq!(repository::load(&path).unwrap().records(), &recs[..]);
    let reopened = FeedbackLog::open(&path).unwrap();
    assert_eq!(reopened.records(), &recs[..]);
}

#[test]
fn truncated_tail_is_dropped_and_repaired() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("feedback.jsonl");
    let recs = records(5);
    {
        let mut log = FeedbackLog::open(&path).unwrap();
        for r in recs.clone() {
            log.append(r).unwrap();
        }
    }
    let text = std::fs::read_to_string(&path).unwrap();
    // Cut the last record in half, as a crash mid-write would.
    let cut = text.len() - text.lines().last().unwrap().len() / 2 - 1;
    std::fs::write(&path, &text[..cut]).unwrap();

    assert_eq!(repository::load(&path).unwrap().len(), 4);
    let mut log = FeedbackLog::open(&path).unwrap();
    assert_eq!(log.records(), &recs[..4]);
    log.append(recs[4].clone()).unwrap();
    drop(log);
    assert_eq!(repository::load(&path).unwrap().records(), &recs[..]);
}

#[test]
fn missing_file_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    assert!(repository::load(&dir.path().join("nope.jsonl")).unwrap().is_empty());
    let log = FeedbackLog::open(dir.path().join("new.jsonl")).unwrap();
    assert!(log.is_empty());
}

#[test]
fn bad_line_in_the_middle_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("feedback.jsonl");
    {
        let mut log = FeedbackLog::open(&path).unwrap();
        for r in records(2) {
            log.append(r).unwrap();
        }
    }
    let mut text = std::fs::read_to_string(&path).unwrap();
    let first_end = text.find('\n').unwrap() + 1;
    text.insert_str(first_end, "{\"not\":\"a record\"}\n");
    std::fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
    match repository::load(&path) {
        Err(AppError::Format { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a format error, got {other:?}"),
    }
    assert!(FeedbackLog::open(&path).is_err());
}
