//! The self-contained document behind the detailed snapshot comparison view.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::AppError;
use crate::model::{rfc3339, FeatureScore, HostRank, PassagePair, Snapshot, Timestamp};
use crate::store::{PairId, Store};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub title: String,
    pub lang: String,
    pub revision_id: u64,
    #[serde(with = "rfc3339")]
    pub timestamp: Timestamp,
    pub text_chars: usize,
    pub sentence_chars: usize,
    /// Characters of sentences inside at least one passage pair.
    pub aligned_chars: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceView {
    pub index: usize,
    pub text: String,
    pub char_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRow {
    pub image: String,
    pub in1: bool,
    pub in2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDocument {
    pub pair_id: String,
    /// Requested time.
    #[serde(with = "rfc3339")]
    pub target_time: Timestamp,
    /// Time of the report actually shown (greatest stored time not after the request).
    #[serde(with = "rfc3339")]
    pub report_time: Timestamp,
    pub article1: SnapshotSummary,
    pub article2: SnapshotSummary,
    pub sentences1: Vec<SentenceView>,
    pub sentences2: Vec<SentenceView>,
    pub passage_pairs: Vec<PassagePair>,
    pub images: Vec<ImageRow>,
    pub host_ranking: Vec<HostRank>,
    pub editor_locations1: BTreeMap<String, usize>,
    pub editor_locations2: BTreeMap<String, usize>,
    pub feature_scores: Vec<FeatureScore>,
    pub sim: f64,
    pub sim_text: f64,
    pub sim_meta: f64,
    pub text_defined: bool,
    pub meta_defined: bool,
}

fn aligned_chars(s: &Snapshot, ranges: impl Iterator<Item = crate::model::IndexRange>) -> usize {
    let covered: BTreeSet<usize> = ranges.flat_map(|r| r.indices()).collect();
    covered.iter().filter_map(|&i| s.sentences.get(i)).map(|r| r.char_len).sum()
}

fn summary(s: &Snapshot, aligned: usize) -> SnapshotSummary {
    SnapshotSummary {
        title: s.article.title.clone(),
        lang: s.article.lang.to_string(),
        revision_id: s.revision_id,
        timestamp: s.timestamp,
        text_chars: s.text_chars(),
        sentence_chars: s.sentence_chars(),
        aligned_chars: aligned,
    }
}

fn sentences(s: &Snapshot) -> Vec<SentenceView> {
    s.sentences.iter().map(|r| SentenceView { index: r.index, text: r.text.clone(), char_len: r.char_len }).collect()
}

fn locations(s: &Snapshot) -> BTreeMap<String, usize> {
    s.editors.location_counts().into_iter().map(|(c, n)| (c.as_str().to_owned(), n)).collect()
}

/// Assembles the comparison for the report at or before `time`.
pub fn comparison_at(store: &Store, pair: &PairId, time: &Timestamp) -> Result<ComparisonDocument, AppError> {
    let meta = store.get_meta(pair)?;
    let report = store.report_at_or_before(pair, time)?;
    let s1 = store.get_snapshot(pair, &meta.article1.lang, report.revision1)?;
    let s2 = store.get_snapshot(pair, &meta.article2.lang, report.revision2)?;
    let images = s1
        .images
        .union(&s2.images)
        .map(|image| ImageRow { image: image.clone(), in1: s1.images.contains(image), in2: s2.images.contains(image) })
        .collect();
    Ok(ComparisonDocument {
        pair_id: pair.to_string(),
        target_time: *time,
        report_time: report.pair_time,
        article1: summary(&s1, aligned_chars(&s1, report.passage_pairs.iter().map(|p| p.range1))),
        article2: summary(&s2, aligned_chars(&s2, report.passage_pairs.iter().map(|p| p.range2))),
        sentences1: sentences(&s1),
        sentences2: sentences(&s2),
        passage_pairs: report.passage_pairs,
        images,
        host_ranking: report.host_ranking,
        editor_locations1: locations(&s1),
        editor_locations2: locations(&s2),
        feature_scores: report.feature_scores,
        sim: report.sim,
        sim_text: report.sim_text,
        sim_meta: report.sim_meta,
        text_defined: report.text_defined,
        meta_defined: report.meta_defined,
    })
}
