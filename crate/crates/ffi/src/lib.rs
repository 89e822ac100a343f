//! C ABI over the multiwiki store and pipeline.
//!
//! Every fallible function returns an [`MwStatus`]. On failure the message
//! is available from [`mw_last_error`] on the same thread until the next
//! call. Strings handed out through `out` parameters are owned by the
//! caller and must be released with [`mw_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use multiwiki::annotate::Clients;
use multiwiki::app::comparison::comparison_at;
use multiwiki::app::export::{export_timeline, ExportFormat};
use multiwiki::app::run::{analyze_pair, ingest_pair, IngestRequest};
use multiwiki::app::{AppError, ExitClass};
use multiwiki::ingest::FixtureSource;
use multiwiki::model::{rfc3339, ArticleRef, SimilarityConfig, ValidatedConfig};
use multiwiki::store::{encode_document, PairId, Store, StoreError, SCHEMA_VERSION};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwStatus {
    Ok = 0,
    /// A null pointer, invalid UTF-8 or malformed argument.
    InvalidArgument = 1,
    NotFound = 2,
    /// The request was understood but cannot be satisfied (bad config,
    /// unknown article, unsupported format).
    UserError = 3,
    /// The file system or a remote service failed.
    EnvironmentError = 4,
    Internal = 5,
    Panic = 6,
}

/// Opaque handle to an open data directory.
pub struct MwStore {
    store: Store,
}

struct Failure {
    status: MwStatus,
    message: String,
}

impl Failure {
    fn new(status: MwStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::NotFound(_) | StoreError::InvalidPairId(_) => MwStatus::NotFound,
            _ => MwStatus::EnvironmentError,
        };
        Self::new(status, e.to_string())
    }
}

impl From<AppError> for Failure {
    fn from(e: AppError) -> Self {
        let status = match (e.class, e.code.as_str()) {
            (_, "NotFound" | "InvalidPairId") => MwStatus::NotFound,
            (ExitClass::User, _) => MwStatus::UserError,
            (ExitClass::Environment, _) => MwStatus::EnvironmentError,
            (ExitClass::Internal, _) => MwStatus::Internal,
        };
        Self::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MwStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MwStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("panic");
            set_last_error(msg);
            MwStatus::Panic
        }
    }
}

unsafe fn arg_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(MwStatus::InvalidArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::new(MwStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn arg_store<'a>(p: *const MwStore) -> Result<&'a Store, Failure> {
    p.as_ref().map(|h| &h.store).ok_or_else(|| Failure::new(MwStatus::InvalidArgument, "store is null"))
}

unsafe fn arg_pair(p: *const c_char) -> Result<PairId, Failure> {
    Ok(PairId::parse(arg_str(p, "pair_id")?)?)
}

unsafe fn arg_article(p: *const c_char, name: &str) -> Result<ArticleRef, Failure> {
    let spec = arg_str(p, name)?;
    ArticleRef::parse(spec).map_err(|e| Failure::new(MwStatus::InvalidArgument, format!("{name}: {e}")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(MwStatus::InvalidArgument, "out is null"));
    }
    let c = CString::new(s).map_err(|_| Failure::new(MwStatus::Internal, "output contains a nul byte"))?;
    *out = c.into_raw();
    Ok(())
}

fn encode<T: serde::Serialize>(doc: &T) -> Result<String, Failure> {
    Ok(encode_document(doc)?)
}

/// Schema version of every JSON document produced by this library.
#[no_mangle]
pub extern "C" fn mw_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Library version, a static nul-terminated string.
#[no_mangle]
pub extern "C" fn mw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn mw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned through an `out` parameter. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opens the data directory at `path`. With `create` false the directory
/// must already exist.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_store_open(path: *const c_char, create: bool, out: *mut *mut MwStore) -> MwStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::new(MwStatus::InvalidArgument, "out is null"));
        }
        let root = PathBuf::from(arg_str(path, "path")?);
        let store = if create { Store::open(root)? } else { Store::open_existing(root)? };
        *out = Box::into_raw(Box::new(MwStore { store }));
        Ok(())
    })
}

/// Closes a store handle. Null is ignored.
///
/// # Safety
/// `store` must come from [`mw_store_open`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mw_store_free(store: *mut MwStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Stored pairs as a JSON array of pair summaries.
///
/// # Safety
/// Pointer arguments must be valid.
#[no_mangle]
pub unsafe extern "C" fn mw_pairs_json(store: *const MwStore, out: *mut *mut c_char) -> MwStatus {
    guard(|| {
        let store = arg_store(store)?;
        let docs = store.list_pairs()?.iter().map(encode).collect::<Result<Vec<_>, _>>()?;
        write_string(out, format!("[{}]", docs.join(",")))
    })
}

/// The stored timeline document of a pair.
///
/// # Safety
/// Pointer arguments must be valid.
#[no_mangle]
pub unsafe extern "C" fn mw_timeline_json(store: *const MwStore, pair_id: *const c_char, out: *mut *mut c_char) -> MwStatus {
    guard(|| {
        let store = arg_store(store)?;
        let pair = arg_pair(pair_id)?;
        store.get_timeline(&pair)?;
        write_string(out, store.read_raw(&store.timeline_path(&pair))?)
    })
}

/// The comparison document for the latest report at or before `time`
/// (RFC 3339).
///
/// # Safety
/// Pointer arguments must be valid.
#[no_mangle]
pub unsafe extern "C" fn mw_comparison_json(
    store: *const MwStore,
    pair_id: *const c_char,
    time: *const c_char,
    out: *mut *mut c_char,
) -> MwStatus {
    guard(|| {
        let store = arg_store(store)?;
        let pair = arg_pair(pair_id)?;
        let raw = arg_str(time, "time")?;
        let t = rfc3339::parse(raw).map_err(|e| Failure::new(MwStatus::InvalidArgument, format!("time {raw:?}: {e}")))?;
        store.get_meta(&pair)?;
        write_string(out, encode(&comparison_at(store, &pair, &t)?)?)
    })
}

/// The timeline exported as `"json"` or `"csv"`.
///
/// # Safety
/// Pointer arguments must be valid.
#[no_mangle]
pub unsafe extern "C" fn mw_export(
    store: *const MwStore,
    pair_id: *const c_char,
    format: *const c_char,
    out: *mut *mut c_char,
) -> MwStatus {
    guard(|| {
        let store = arg_store(store)?;
        let pair = arg_pair(pair_id)?;
        let format: ExportFormat = arg_str(format, "format")?.parse()?;
        write_string(out, export_timeline(store, &pair, format)?)
    })
}

/// Ingests an article pair (`"lang:Title"` each) from a fixture directory
/// using the bundled offline annotators. `snapshot_count` of 0 keeps the
/// configured count. Writes the pair id to `out`.
///
/// # Safety
/// Pointer arguments must be valid.
#[no_mangle]
pub unsafe extern "C" fn mw_ingest_fixture(
    store: *const MwStore,
    fixture_dir: *const c_char,
    article1: *const c_char,
    article2: *const c_char,
    snapshot_count: u32,
    out: *mut *mut c_char,
) -> MwStatus {
    guard(|| {
        let store = arg_store(store)?;
        let dir = arg_str(fixture_dir, "fixture_dir")?;
        let source = FixtureSource::open(dir).map_err(|e| Failure::new(MwStatus::UserError, e.to_string()))?;
        let req = IngestRequest {
            article1: arg_article(article1, "article1")?,
            article2: arg_article(article2, "article2")?,
            config: ValidatedConfig::default(),
            snapshot_count: (snapshot_count > 0).then_some(snapshot_count as usize),
            end_time: None,
        };
        let outcome = ingest_pair(store, &source, &Clients::bundled(), &req)?;
        write_string(out, outcome.pair_id.to_string())
    })
}

/// Recomputes the reports and timeline of an ingested pair with its stored
/// configuration.
///
/// # Safety
/// Pointer arguments must be valid.
#[no_mangle]
pub unsafe extern "C" fn mw_analyze(store: *const MwStore, pair_id: *const c_char) -> MwStatus {
    guard(|| {
        let store = arg_store(store)?;
        let pair = arg_pair(pair_id)?;
        analyze_pair(store, &pair, None)?;
        Ok(())
    })
}

/// The default similarity configuration as JSON.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mw_default_config_json(out: *mut *mut c_char) -> MwStatus {
    guard(|| {
        let json = serde_json::to_string(&SimilarityConfig::default()).map_err(|e| Failure::new(MwStatus::Internal, e.to_string()))?;
        write_string(out, json)
    })
}
