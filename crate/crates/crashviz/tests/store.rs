use std::sync::Arc;
use std::thread;

use crashviz::corpus::synthetic_corpus;
use crashviz::store::{CaseStore, StoreError};
use crashviz_core::{standard_template, MetricId, Rater, ScoreSheet};

fn store() -> (tempfile::TempDir, CaseStore) {
    let dir = tempfile::tempdir().unwrap();
    let store = CaseStore::open(dir.path()).unwrap();
    (dir, store)
}

#[test]
fn new_cases_appear_complete() {
    let (dir, store) = store();
    let record = synthetic_corpus(1, 1, &standard_template()).remove(0);
    assert_eq!(store.put_case(&record, &[("prompt.txt", b"p"), ("extra/notes.txt", b"n")]).unwrap(), 3);
    assert_eq!(store.artifacts("case-001").unwrap(), vec!["extra/notes.txt", "prompt.txt", "record.json"]);
    // Nothing staged is left behind.
    let leftovers: Vec<_> = std::fs::read_dir(dir.path().join("cases"))
        .unwrap()
        .filter_map(Result::ok)
        .filter(|e| e.file_name().to_string_lossy().starts_with('.'))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn identical_rewrites_are_skipped() {
    let (_dir, store) = store();
    let record = synthetic_corpus(1, 1, &standard_template()).remove(0);
    store.put_case(&record, &[("prompt.txt", b"p")]).unwrap();
    assert_eq!(store.put_case(&record, &[("prompt.txt", b"p")]).unwrap(), 0);
    assert_eq!(store.put_case(&record, &[("prompt.txt", b"q")]).unwrap(), 1);
    assert_eq!(store.read_artifact("case-001", "prompt.txt").unwrap(), b"q");
}

#[test]
fn unsafe_names_are_refused() {
    let (_dir, store) = store();
    let mut record = synthetic_corpus(1, 1, &standard_template()).remove(0);
    record.case_id = "../escape".into();
    assert!(matches!(store.put_case(&record, &[]), Err(StoreError::InvalidId(_))));
    record.case_id = "case-001".into();
    store.put_case(&record, &[]).unwrap();
    assert!(matches!(store.read_artifact("case-001", "../../x"), Err(StoreError::InvalidPath(_))));
    assert!(matches!(store.read_artifact("case-001", "nope.svg"), Err(StoreError::NotFound(_))));
    assert!(matches!(store.record("case-404"), Err(StoreError::NotFound(_))));
}

#[test]
fn sheets_replace_per_rater_and_model() {
    let (_dir, store) = store();
    let record = synthetic_corpus(1, 1, &standard_template()).remove(0);
    store.put_case(&record, &[]).unwrap();
    let mut a = ScoreSheet::new("case-001", "GPT-4o", Rater::Human("alice".into()));
    store.put_sheet(&a).unwrap();
    a.set(MetricId::LabelV1, true);
    store.put_sheet(&a).unwrap();
    store.put_sheet(&ScoreSheet::new("case-001", "Janus-4o", Rater::Human("alice".into()))).unwrap();
    store.put_sheet(&ScoreSheet::new("case-001", "GPT-4o", Rater::Auto)).unwrap();
    let sheets = store.sheets("case-001").unwrap();
    assert_eq!(sheets.len(), 3);
    assert!(sheets.contains(&a));
    assert!(store.artifacts("case-001").unwrap().iter().any(|n| n == "sheets/alice.csv"));

    let orphan = ScoreSheet::new("case-999", "GPT-4o", Rater::Auto);
    assert!(matches!(store.put_sheet(&orphan), Err(StoreError::NotFound(_))));
    let bad_rater = ScoreSheet::new("case-001", "GPT-4o", Rater::Human("a/b".into()));
    assert!(matches!(store.put_sheet(&bad_rater), Err(StoreError::InvalidId(_))));
}

#[test]
fn concurrent_sheet_writers_do_not_lose_updates() {
    let (_dir, store) = store();
    let record = synthetic_corpus(1, 1, &standard_template()).remove(0);
    store.put_case(&record, &[]).unwrap();
    let store = Arc::new(store);
    let workers: Vec<_> = (0..16)
        .map(|i| {
            let store = store.clone();
            thread::spawn(move || {
                store
                    .put_sheet(&ScoreSheet::new("case-001", &format!("model-{i:02}"), Rater::Auto))
                    .unwrap()
            })
        })
        .collect();
    for w in workers {
        w.join().unwrap();
    }
    assert_eq!(store.sheets("case-001").unwrap().len(), 16);
}
