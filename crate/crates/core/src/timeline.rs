//! Snapshot-pair selection over the common lifetime of two articles and
//! assembly of the similarity timeline.

use std::collections::BTreeMap;

use chrono::{Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{rfc3339, RevisionMeta, SimilarityReport, TimelinePoint, TimelineSeries, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimelineError {
    #[error("the two articles share no lifetime before the end time")]
    NoCommonLifetime,
    #[error("time {0} precedes the first revision")]
    BeforeCreation(String),
    #[error("snapshot count must be at least 2, got {0}")]
    TooFewSnapshots(usize),
    #[error("{reports} reports for {entries} plan entries")]
    ReportCountMismatch { entries: usize, reports: usize },
}

impl TimelineError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::NoCommonLifetime => "NoCommonLifetime",
            Self::BeforeCreation(_) => "BeforeCreation",
            Self::TooFewSnapshots(_) => "TooFewSnapshots",
            Self::ReportCountMismatch { .. } => "ReportCountMismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    #[serde(with = "rfc3339")]
    pub target_time: Timestamp,
    pub revision1: u64,
    pub revision2: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotPlan {
    #[serde(with = "rfc3339")]
    pub start: Timestamp,
    #[serde(with = "rfc3339")]
    pub end_time: Timestamp,
    pub targets: Vec<PlanEntry>,
}

/// `N` evenly spaced times from the later creation time to `end_time`,
/// rounded down to whole seconds.
pub fn select_snapshot_times(
    h1: &[RevisionMeta],
    h2: &[RevisionMeta],
    n: usize,
    end_time: Timestamp,
) -> Result<Vec<Timestamp>, TimelineError> {
    if n < 2 {
        return Err(TimelineError::TooFewSnapshots(n));
    }
    let first = |h: &[RevisionMeta]| h.iter().map(|r| r.timestamp).min();
    let (Some(c1), Some(c2)) = (first(h1), first(h2)) else { return Err(TimelineError::NoCommonLifetime) };
    let start = c1.max(c2);
    if start >= end_time {
        return Err(TimelineError::NoCommonLifetime);
    }
    let span = (end_time - start).num_seconds();
    let steps = (n - 1) as i64;
    Ok((0..n as i64)
        .map(|i| if i == steps { end_time } else { start + Duration::seconds(i * span / steps) })
        .collect())
}

/// The latest revision at or before `t`; `history` must be sorted.
pub fn revision_at(history: &[RevisionMeta], t: Timestamp) -> Result<&RevisionMeta, TimelineError> {
    let idx = history.partition_point(|r| r.timestamp <= t);
    if idx == 0 {
        return Err(TimelineError::BeforeCreation(rfc3339::format(&t)));
    }
    Ok(&history[idx - 1])
}

/// Pairs the live revisions at each target time, collapsing consecutive
/// duplicates onto their first target time.
pub fn plan_snapshots(
    h1: &[RevisionMeta],
    h2: &[RevisionMeta],
    n: usize,
    end_time: Timestamp,
) -> Result<SnapshotPlan, TimelineError> {
    let times = select_snapshot_times(h1, h2, n, end_time)?;
    let mut targets: Vec<PlanEntry> = Vec::with_capacity(times.len());
    for t in &times {
        let (r1, r2) = (revision_at(h1, *t)?, revision_at(h2, *t)?);
        if targets.last().is_some_and(|e| (e.revision1, e.revision2) == (r1.revision_id, r2.revision_id)) {
            continue;
        }
        targets.push(PlanEntry { target_time: *t, revision1: r1.revision_id, revision2: r2.revision_id });
    }
    Ok(SnapshotPlan { start: times[0], end_time, targets })
}

/// Default end of the analysis window: the latest revision of either
/// history for recorded sources, the current time for live ones.
pub fn default_end_time(h1: &[RevisionMeta], h2: &[RevisionMeta], live: bool) -> Timestamp {
    let now = || chrono::DateTime::from_timestamp(Utc::now().timestamp(), 0).expect("in range");
    if live {
        return now();
    }
    h1.iter().chain(h2).map(|r| r.timestamp).max().unwrap_or_else(now)
}

/// Revisions at or before `end_time` per UTC calendar month `YYYY-MM`.
pub fn monthly_edits(history: &[RevisionMeta], end_time: Timestamp) -> BTreeMap<String, u32> {
    let mut bins = BTreeMap::new();
    for r in history.iter().filter(|r| r.timestamp <= end_time) {
        *bins.entry(r.timestamp.format("%Y-%m").to_string()).or_insert(0) += 1;
    }
    bins
}

pub fn build_timeline(
    pair_id: &str,
    plan: &SnapshotPlan,
    reports: &[SimilarityReport],
    h1: &[RevisionMeta],
    h2: &[RevisionMeta],
) -> Result<TimelineSeries, TimelineError> {
    if reports.len() != plan.targets.len() {
        return Err(TimelineError::ReportCountMismatch { entries: plan.targets.len(), reports: reports.len() });
    }
    let points = plan
        .targets
        .iter()
        .zip(reports)
        .map(|(entry, r)| TimelinePoint {
            time: entry.target_time,
            revision1: r.revision1,
            revision2: r.revision2,
            sim: r.sim,
            sim_text: r.sim_text,
            sim_meta: r.sim_meta,
            features: r.feature_scores.clone(),
        })
        .collect();
    Ok(TimelineSeries {
        pair_id: pair_id.to_owned(),
        points,
        edits1: monthly_edits(h1, plan.end_time),
        edits2: monthly_edits(h2, plan.end_time),
    })
}
