//! Directory-backed document store for fetched data, snapshots, plans,
//! reports and timelines.
//!
//! ```text
//! <root>/interlanguage-cache.json
//! <root>/<pair_id>/meta.json
//!                 /plan.json
//!                 /timeline.json
//!                 /snapshots/<lang>-<revision>.json
//!                 /reports/<YYYYMMDDTHHMMSSZ>.json
//!                 /cache/history-<lang>.json
//!                 /cache/wikitext/<lang>-<revision>.wikitext
//! ```
//!
//! Every JSON document is canonical and carries `schema_version`.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::NaiveDateTime;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ingest::{ContentSource, InterlanguageGroup, InterlanguageTable, SourceKind};
use crate::json::value_to_canonical;
use crate::model::{ArticleRef, LanguageEdition, RevisionMeta, SimilarityConfig, SimilarityReport, Snapshot, TimelineSeries, Timestamp};
use crate::slug::slugify;
use crate::timeline::SnapshotPlan;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("corrupt document {path}: {reason}")]
    CorruptDocument { path: String, reason: String },
    #[error("pair {0} is locked by another writer")]
    Locked(String),
    #[error("invalid pair id {0:?}")]
    InvalidPairId(String),
    #[error("store i/o error: {0}")]
    Io(String),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::NotFound(_) => "NotFound",
            Self::CorruptDocument { .. } => "CorruptDocument",
            Self::Locked(_) => "Locked",
            Self::InvalidPairId(_) => "InvalidPairId",
            Self::Io(_) => "Io",
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> StoreError {
    StoreError::Io(format!("{}: {e}", path.display()))
}

/// Filesystem-safe pair identifier: `<slug>.<lang>-<lang>`, languages sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PairId(String);

impl PairId {
    pub fn new(canonical: &str, lang1: &LanguageEdition, lang2: &LanguageEdition) -> Self {
        let mut langs = [lang1.as_str(), lang2.as_str()];
        langs.sort_unstable();
        Self(format!("{}.{}-{}", slugify(canonical), langs[0], langs[1]))
    }

    pub fn parse(s: &str) -> Result<Self, StoreError> {
        let valid = !s.is_empty()
            && s.len() <= 200
            && !s.starts_with('.')
            && s.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'.')
            && s.contains('.');
        if valid {
            Ok(Self(s.to_owned()))
        } else {
            Err(StoreError::InvalidPairId(s.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for PairId {
    type Error = StoreError;
    fn try_from(s: String) -> Result<Self, StoreError> {
        Self::parse(&s)
    }
}

impl From<PairId> for String {
    fn from(p: PairId) -> String {
        p.0
    }
}

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Identity and analysis settings of one article pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    pub pair_id: PairId,
    pub canonical: String,
    pub article1: ArticleRef,
    pub article2: ArticleRef,
    pub source: SourceKind,
    pub snapshot_count: usize,
    pub config: SimilarityConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub pair_id: PairId,
    pub canonical: String,
    pub article1: ArticleRef,
    pub article2: ArticleRef,
    /// Snapshot pairs in the stored plan.
    pub snapshot_pairs: usize,
    pub analyzed: bool,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().ok_or_else(|| StoreError::Io(format!("{} has no parent", path.display())))?;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("doc");
    let tmp = dir.join(format!(".{name}.tmp-{}-{}", std::process::id(), TMP_COUNTER.fetch_add(1, Ordering::Relaxed)));
    let result = (|| {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path, e));
    }
    Ok(())
}

/// Canonical JSON text of `doc` with `schema_version` added.
pub fn encode_document<T: Serialize>(doc: &T) -> Result<String, StoreError> {
    let mut value = serde_json::to_value(doc).map_err(|e| StoreError::Io(e.to_string()))?;
    match &mut value {
        Value::Object(map) => {
            map.insert("schema_version".into(), SCHEMA_VERSION.into());
        }
        _ => return Err(StoreError::Io("documents must be JSON objects".into())),
    }
    Ok(value_to_canonical(&value))
}

pub fn decode_document<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, StoreError> {
    let corrupt = |reason: String| StoreError::CorruptDocument { path: path.display().to_string(), reason };
    let mut value: Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    let map = value.as_object_mut().ok_or_else(|| corrupt("not a JSON object".into()))?;
    match map.remove("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(corrupt(format!("unsupported schema_version {v}"))),
        None => return Err(corrupt("missing schema_version".into())),
    }
    serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct HistoryDoc {
    article: ArticleRef,
    revisions: Vec<RevisionMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
struct InterlanguageDoc {
    groups: InterlanguageTable,
}

/// Exclusive writer lock on one pair directory, released on drop.
#[derive(Debug)]
pub struct PairLock {
    path: PathBuf,
}

impl Drop for PairLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub fn report_key(t: &Timestamp) -> String {
    t.format("%Y%m%dT%H%M%SZ").to_string()
}

fn parse_report_key(key: &str) -> Option<Timestamp> {
    NaiveDateTime::parse_from_str(key, "%Y%m%dT%H%M%SZ").ok().map(|n| n.and_utc())
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(Self { root })
    }

    /// Opens an existing store without creating anything.
    pub fn open_existing(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(StoreError::NotFound(format!("data directory {}", root.display())));
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn pair_dir(&self, pair: &PairId) -> PathBuf {
        self.root.join(pair.as_str())
    }

    fn snapshot_path(&self, pair: &PairId, lang: &LanguageEdition, revision_id: u64) -> PathBuf {
        self.pair_dir(pair).join("snapshots").join(format!("{lang}-{revision_id}.json"))
    }

    fn report_path(&self, pair: &PairId, t: &Timestamp) -> PathBuf {
        self.pair_dir(pair).join("reports").join(format!("{}.json", report_key(t)))
    }

    fn put<T: Serialize>(&self, path: &Path, doc: &T) -> Result<PathBuf, StoreError> {
        write_atomic(path, encode_document(doc)?.as_bytes())?;
        Ok(path.to_owned())
    }

    fn get<T: DeserializeOwned>(&self, path: &Path, what: impl FnOnce() -> String) -> Result<T, StoreError> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(StoreError::NotFound(what())),
            Err(e) => return Err(io_err(path, e)),
        };
        decode_document(path, &text)
    }

    /// Raw canonical bytes of a stored document.
    pub fn read_raw(&self, path: &Path) -> Result<String, StoreError> {
        fs::read_to_string(path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => StoreError::NotFound(path.display().to_string()),
            _ => io_err(path, e),
        })
    }

    pub fn lock_pair(&self, pair: &PairId) -> Result<PairLock, StoreError> {
        let dir = self.pair_dir(pair);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let path = dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(PairLock { path })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(StoreError::Locked(pair.to_string())),
            Err(e) => Err(io_err(&path, e)),
        }
    }

    pub fn put_meta(&self, meta: &PairMeta) -> Result<PathBuf, StoreError> {
        self.put(&self.pair_dir(&meta.pair_id).join("meta.json"), meta)
    }

    pub fn get_meta(&self, pair: &PairId) -> Result<PairMeta, StoreError> {
        self.get(&self.pair_dir(pair).join("meta.json"), || format!("pair {pair}"))
    }

    pub fn put_snapshot(&self, pair: &PairId, snapshot: &Snapshot) -> Result<PathBuf, StoreError> {
        self.put(&self.snapshot_path(pair, &snapshot.article.lang, snapshot.revision_id), snapshot)
    }

    pub fn get_snapshot(&self, pair: &PairId, lang: &LanguageEdition, revision_id: u64) -> Result<Snapshot, StoreError> {
        self.get(&self.snapshot_path(pair, lang, revision_id), || format!("snapshot {lang}-{revision_id} of {pair}"))
    }

    pub fn has_snapshot(&self, pair: &PairId, lang: &LanguageEdition, revision_id: u64) -> bool {
        self.snapshot_path(pair, lang, revision_id).is_file()
    }

    pub fn put_plan(&self, pair: &PairId, plan: &SnapshotPlan) -> Result<PathBuf, StoreError> {
        self.put(&self.pair_dir(pair).join("plan.json"), plan)
    }

    pub fn get_plan(&self, pair: &PairId) -> Result<SnapshotPlan, StoreError> {
        self.get(&self.pair_dir(pair).join("plan.json"), || format!("plan of {pair}"))
    }

    pub fn put_report(&self, pair: &PairId, report: &SimilarityReport) -> Result<PathBuf, StoreError> {
        self.put(&self.report_path(pair, &report.pair_time), report)
    }

    pub fn get_report(&self, pair: &PairId, t: &Timestamp) -> Result<SimilarityReport, StoreError> {
        self.get(&self.report_path(pair, t), || format!("report {} of {pair}", report_key(t)))
    }

    /// Stored report times, ascending.
    pub fn report_times(&self, pair: &PairId) -> Result<Vec<Timestamp>, StoreError> {
        let dir = self.pair_dir(pair).join("reports");
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(&dir, e)),
        };
        let mut times: Vec<Timestamp> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".json").and_then(parse_report_key))
            .collect();
        times.sort_unstable();
        Ok(times)
    }

    /// The report at the greatest stored time not after `t`.
    pub fn report_at_or_before(&self, pair: &PairId, t: &Timestamp) -> Result<SimilarityReport, StoreError> {
        let times = self.report_times(pair)?;
        let idx = times.partition_point(|x| x <= t);
        if idx == 0 {
            return Err(StoreError::NotFound(format!("no report of {pair} at or before {}", report_key(t))));
        }
        self.get_report(pair, &times[idx - 1])
    }

    pub fn clear_reports(&self, pair: &PairId) -> Result<(), StoreError> {
        let dir = self.pair_dir(pair).join("reports");
        match fs::remove_dir_all(&dir) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(()),
            Err(e) => Err(io_err(&dir, e)),
        }
    }

    pub fn put_timeline(&self, pair: &PairId, series: &TimelineSeries) -> Result<PathBuf, StoreError> {
        self.put(&self.timeline_path(pair), series)
    }

    pub fn get_timeline(&self, pair: &PairId) -> Result<TimelineSeries, StoreError> {
        self.get(&self.timeline_path(pair), || format!("timeline of {pair}"))
    }

    pub fn timeline_path(&self, pair: &PairId) -> PathBuf {
        self.pair_dir(pair).join("timeline.json")
    }

    fn history_path(&self, pair: &PairId, lang: &LanguageEdition) -> PathBuf {
        self.pair_dir(pair).join("cache").join(format!("history-{lang}.json"))
    }

    pub fn put_history(&self, pair: &PairId, article: &ArticleRef, revisions: &[RevisionMeta]) -> Result<PathBuf, StoreError> {
        let doc = HistoryDoc { article: article.clone(), revisions: revisions.to_vec() };
        self.put(&self.history_path(pair, &article.lang), &doc)
    }

    pub fn get_history(&self, pair: &PairId, article: &ArticleRef) -> Result<Vec<RevisionMeta>, StoreError> {
        let path = self.history_path(pair, &article.lang);
        let doc: HistoryDoc = self.get(&path, || format!("history of {article} in {pair}"))?;
        if doc.article != *article {
            return Err(StoreError::NotFound(format!("history of {article} in {pair}")));
        }
        Ok(doc.revisions)
    }

    fn wikitext_path(&self, pair: &PairId, lang: &LanguageEdition, revision_id: u64) -> PathBuf {
        self.pair_dir(pair).join("cache").join("wikitext").join(format!("{lang}-{revision_id}.wikitext"))
    }

    pub fn put_wikitext(&self, pair: &PairId, lang: &LanguageEdition, revision_id: u64, text: &str) -> Result<PathBuf, StoreError> {
        let path = self.wikitext_path(pair, lang, revision_id);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn get_wikitext(&self, pair: &PairId, lang: &LanguageEdition, revision_id: u64) -> Result<String, StoreError> {
        let path = self.wikitext_path(pair, lang, revision_id);
        fs::read_to_string(&path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => StoreError::NotFound(format!("wikitext {lang}-{revision_id} of {pair}")),
            _ => io_err(&path, e),
        })
    }

    fn interlanguage_path(&self) -> PathBuf {
        self.root.join("interlanguage-cache.json")
    }

    pub fn get_interlanguage_links(&self) -> Result<InterlanguageTable, StoreError> {
        match self.get::<InterlanguageDoc>(&self.interlanguage_path(), String::new) {
            Ok(doc) => Ok(doc.groups),
            Err(StoreError::NotFound(_)) => Ok(InterlanguageTable::default()),
            Err(e) => Err(e),
        }
    }

    /// Merges `table` into the stored link table.
    pub fn put_interlanguage_links(&self, table: &InterlanguageTable) -> Result<PathBuf, StoreError> {
        let mut stored = self.get_interlanguage_links()?;
        table.groups().into_iter().for_each(|g| stored.insert(g));
        self.put(&self.interlanguage_path(), &InterlanguageDoc { groups: stored })
    }

    /// Canonical id from the cached table; on a miss, live sources are
    /// consulted and the result cached, recorded sources yield `NotFound`.
    pub fn resolve_cached(
        &self,
        lang: &LanguageEdition,
        title: &str,
        source: Option<&dyn ContentSource>,
    ) -> Result<String, StoreError> {
        let table = self.get_interlanguage_links()?;
        if let Some(group) = table.lookup(lang, title) {
            return Ok(group.canonical.clone());
        }
        let miss = || StoreError::NotFound(format!("interlanguage links of {lang}:{title}"));
        let Some(source) = source.filter(|s| s.kind() == SourceKind::Live) else { return Err(miss()) };
        let groups = source.resolve_titles(lang, &[title.to_owned()]).map_err(|e| StoreError::Io(e.to_string()))?;
        let group: InterlanguageGroup = groups.into_iter().next().ok_or_else(miss)?;
        let canonical = group.canonical.clone();
        let mut fresh = InterlanguageTable::default();
        fresh.insert(group);
        self.put_interlanguage_links(&fresh)?;
        Ok(canonical)
    }

    /// One entry per pair directory with a readable `meta.json`.
    pub fn list_pairs(&self) -> Result<Vec<PairSummary>, StoreError> {
        let entries = fs::read_dir(&self.root).map_err(|e| io_err(&self.root, e))?;
        let mut out = Vec::new();
        for entry in entries.filter_map(|e| e.ok()) {
            if !entry.path().is_dir() {
                continue;
            }
            let name = entry.file_name().to_string_lossy().into_owned();
            let Ok(pair) = PairId::parse(&name) else {
                log::warn!("skipping {}: not a pair directory", entry.path().display());
                continue;
            };
            let meta = match self.get_meta(&pair) {
                Ok(m) => m,
                Err(e) => {
                    log::warn!("skipping {}: {e}", entry.path().display());
                    continue;
                }
            };
            let snapshot_pairs = self.get_plan(&pair).map(|p| p.targets.len()).unwrap_or(0);
            let analyzed = self.timeline_path(&pair).is_file();
            out.push(PairSummary {
                pair_id: pair,
                canonical: meta.canonical,
                article1: meta.article1,
                article2: meta.article2,
                snapshot_pairs,
                analyzed,
            });
        }
        out.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
        Ok(out)
    }
}
