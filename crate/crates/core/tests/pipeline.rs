mod common;

use std::fs;

use common::*;
use multiwiki::app::run::analyze_pair;
use multiwiki::store::{PairId, Store};

#[test]
fn fixture_pairs_match_goldens() {
    let dir = tempfile::tempdir().unwrap();
    let ids = populate(dir.path());
    assert_eq!(ids.len(), 3);
    for id in &ids {
        let n = check_golden(dir.path(), id.as_str()).unwrap();
        assert!(n > 2, "{id}: only {n} files");
    }
}

#[test]
fn pair_ids_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let ids: Vec<String> = populate(dir.path()).iter().map(|p| p.to_string()).collect();
    assert_eq!(
        ids,
        ["codex-aureus-of-st-emmeram.de-en", "lawrence-eagleburger.de-en", "general-post-office.en-nl"]
    );
}

#[test]
fn analyze_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    populate(dir.path());
    let before = tree_digest(dir.path());
    let store = Store::open(dir.path()).unwrap();
    analyze_pair(&store, &PairId::parse(CODEX).unwrap(), None).unwrap();
    assert_eq!(before, tree_digest(dir.path()));
}

#[test]
fn reingest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    populate(dir.path());
    let first = tree_digest(dir.path());
    populate(dir.path());
    assert_eq!(first, tree_digest(dir.path()));
}

#[test]
fn codex_peaks_at_adaptation_then_declines() {
    let dir = tempfile::tempdir().unwrap();
    populate(dir.path());
    let store = Store::open(dir.path()).unwrap();
    let series = store.get_timeline(&PairId::parse(CODEX).unwrap()).unwrap();
    let sims: Vec<f64> = series.points.iter().map(|p| p.sim).collect();
    let peak = sims.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    assert!(peak > 0 && sims[0] < sims[peak]);
    assert!(sims[peak..].windows(2).all(|w| w[1] < w[0]), "{sims:?}");
}

#[test]
fn no_lock_files_remain() {
    let dir = tempfile::tempdir().unwrap();
    populate(dir.path());
    for id in ["codex-aureus-of-st-emmeram.de-en", "general-post-office.en-nl"] {
        assert!(!fs::exists(dir.path().join(id).join(".lock")).unwrap());
    }
}
