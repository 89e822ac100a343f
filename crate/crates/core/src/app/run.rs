//! End-to-end ingestion and analysis of one article pair.

use std::collections::BTreeSet;

use super::AppError;
use crate::annotate::{annotate_wikitext, Clients, PipelineError, PipelineErrorKind, Stage};
use crate::ingest::{ContentSource, SourceKind};
use crate::model::{ArticleRef, RevisionMeta, SimilarityConfig, SimilarityReport, Snapshot, TimelineSeries, Timestamp, ValidatedConfig};
use crate::similarity::compare;
use crate::store::{PairId, PairMeta, Store, StoreError};
use crate::timeline::{build_timeline, default_end_time, plan_snapshots, SnapshotPlan};

#[derive(Debug, Clone)]
pub struct IngestRequest {
    pub article1: ArticleRef,
    pub article2: ArticleRef,
    pub config: ValidatedConfig,
    /// Overrides the configured snapshot count.
    pub snapshot_count: Option<usize>,
    /// End of the analysis window; defaults per source kind.
    pub end_time: Option<Timestamp>,
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub pair_id: PairId,
    pub plan: SnapshotPlan,
    pub snapshots: usize,
    /// Revisions whose wikitext came from the store cache.
    pub cached_wikitext: usize,
    /// Anonymous editors that could not be geolocated, per snapshot.
    pub unresolved_editors: usize,
}

fn fetch_err(e: crate::ingest::IngestError) -> AppError {
    PipelineError::new(Stage::Fetch, PipelineErrorKind::Ingest(e)).into()
}

/// Fetches both histories, plans the snapshot pairs, and builds and stores
/// every snapshot the plan needs. Previous reports of the pair are removed.
pub fn ingest_pair(
    store: &Store,
    source: &dyn ContentSource,
    clients: &Clients,
    req: &IngestRequest,
) -> Result<IngestOutcome, AppError> {
    let (a1, a2) = (&req.article1, &req.article2);
    if a1.lang == a2.lang {
        return Err(AppError::user("SameLanguage", format!("{a1} and {a2} are in the same language edition")));
    }
    let group = source.resolve_interlanguage(a1).map_err(fetch_err)?;
    if group.members.get(&a2.lang).is_some_and(|t| *t != a2.title) {
        log::warn!("{a1} links to {}:{} rather than {a2}", a2.lang, group.members[&a2.lang]);
    }
    let pair_id = PairId::new(&group.canonical, &a1.lang, &a2.lang);
    let _lock = store.lock_pair(&pair_id)?;
    log::info!("ingesting {pair_id} ({a1} / {a2})");

    let h1 = source.fetch_revisions(a1).map_err(fetch_err)?;
    let h2 = source.fetch_revisions(a2).map_err(fetch_err)?;
    store.put_history(&pair_id, a1, &h1)?;
    store.put_history(&pair_id, a2, &h2)?;

    let n = req.snapshot_count.unwrap_or(req.config.snapshot_count);
    let end = req.end_time.unwrap_or_else(|| default_end_time(&h1, &h2, source.kind() == SourceKind::Live));
    let plan = plan_snapshots(&h1, &h2, n, end)?;
    log::info!("{pair_id}: {} snapshot pairs planned", plan.targets.len());

    let mut resolver = store.get_interlanguage_links()?;
    resolver.insert(group.clone());
    let mut outcome = IngestOutcome { pair_id: pair_id.clone(), plan: plan.clone(), snapshots: 0, cached_wikitext: 0, unresolved_editors: 0 };
    for (article, history, revisions) in [
        (a1, &h1, plan.targets.iter().map(|e| e.revision1).collect::<BTreeSet<_>>()),
        (a2, &h2, plan.targets.iter().map(|e| e.revision2).collect()),
    ] {
        for revision_id in revisions {
            let revision = history.iter().find(|r| r.revision_id == revision_id).expect("planned from this history");
            let wikitext = match store.get_wikitext(&pair_id, &article.lang, revision_id) {
                Ok(text) => {
                    outcome.cached_wikitext += 1;
                    text
                }
                Err(StoreError::NotFound(_)) => {
                    let text = source.fetch_wikitext(article, revision_id).map_err(fetch_err)?;
                    store.put_wikitext(&pair_id, &article.lang, revision_id, &text)?;
                    text
                }
                Err(e) => return Err(e.into()),
            };
            let built = annotate_wikitext(article, revision, &wikitext, history, source, clients, &mut resolver)?;
            log::debug!("{article}@{revision_id}: stages {:?}", built.stages);
            outcome.unresolved_editors += built.unresolved.len();
            store.put_snapshot(&pair_id, &built.snapshot)?;
            outcome.snapshots += 1;
        }
    }

    store.put_interlanguage_links(&resolver)?;
    store.put_plan(&pair_id, &plan)?;
    store.put_meta(&PairMeta {
        pair_id: pair_id.clone(),
        canonical: group.canonical,
        article1: a1.clone(),
        article2: a2.clone(),
        source: source.kind(),
        snapshot_count: n,
        config: req.config.clone().into_inner(),
    })?;
    store.clear_reports(&pair_id)?;
    let timeline = store.timeline_path(&pair_id);
    if timeline.exists() {
        std::fs::remove_file(&timeline).map_err(|e| AppError::environment("Io", e.to_string()))?;
    }
    Ok(outcome)
}

fn load_snapshots(store: &Store, pair: &PairId, meta: &PairMeta, r1: u64, r2: u64) -> Result<(Snapshot, Snapshot), AppError> {
    Ok((
        store.get_snapshot(pair, &meta.article1.lang, r1)?,
        store.get_snapshot(pair, &meta.article2.lang, r2)?,
    ))
}

/// Scores every planned snapshot pair and writes reports and the timeline.
/// Reads only the store.
pub fn analyze_pair(store: &Store, pair: &PairId, config: Option<&SimilarityConfig>) -> Result<TimelineSeries, AppError> {
    let meta = store.get_meta(pair)?;
    let plan = store.get_plan(pair)?;
    let config = config.unwrap_or(&meta.config);
    let h1: Vec<RevisionMeta> = store.get_history(pair, &meta.article1)?;
    let h2: Vec<RevisionMeta> = store.get_history(pair, &meta.article2)?;
    let mut inputs = Vec::with_capacity(plan.targets.len());
    for entry in &plan.targets {
        inputs.push((entry.target_time, load_snapshots(store, pair, &meta, entry.revision1, entry.revision2)?));
    }
    let reports: Vec<SimilarityReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = inputs
            .iter()
            .map(|(t, (s1, s2))| scope.spawn(move || compare(s1, s2, *t, config)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("scoring thread panicked")).collect()
    });

    let _lock = store.lock_pair(pair)?;
    store.clear_reports(pair)?;
    for report in &reports {
        store.put_report(pair, report)?;
    }
    let series = build_timeline(pair.as_str(), &plan, &reports, &h1, &h2)?;
    store.put_timeline(pair, &series)?;
    log::info!("{pair}: {} reports, timeline written", reports.len());
    Ok(series)
}
