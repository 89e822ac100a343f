#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use multiwiki::annotate::Clients;
use multiwiki::app::run::{analyze_pair, ingest_pair, IngestRequest};
use multiwiki::ingest::FixtureSource;
use multiwiki::model::{ArticleRef, ValidatedConfig};
use multiwiki::store::{PairId, Store};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const PAIRS: [(&str, &str); 3] = [
    ("en:Codex Aureus of St. Emmeram", "de:Codex Aureus von St. Emmeram"),
    ("en:Lawrence Eagleburger", "de:Lawrence Eagleburger"),
    ("en:General Post Office", "nl:General Post Office"),
];

pub const CODEX: &str = "codex-aureus-of-st-emmeram.de-en";

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixtures() -> PathBuf {
    manifest_dir().join("fixtures")
}

pub fn article(spec: &str) -> ArticleRef {
    ArticleRef::parse(spec).unwrap()
}

pub fn ingest_one(store: &Store, a1: &str, a2: &str) -> PairId {
    let source = FixtureSource::open(fixtures()).unwrap();
    let req = IngestRequest {
        article1: article(a1),
        article2: article(a2),
        config: ValidatedConfig::default(),
        snapshot_count: None,
        end_time: None,
    };
    ingest_pair(store, &source, &Clients::bundled(), &req).unwrap().pair_id
}

/// Ingests and analyzes every fixture pair into `root`.
pub fn populate(root: &Path) -> Vec<PairId> {
    let store = Store::open(root).unwrap();
    PAIRS
        .iter()
        .map(|(a1, a2)| {
            let id = ingest_one(&store, a1, a2);
            analyze_pair(&store, &id, None).unwrap();
            id
        })
        .collect()
}

pub fn load_schema(name: &str) -> Value {
    let path = manifest_dir().join("schemas").join(name);
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

/// Validation errors of `doc` against the published schema `name`.
pub fn schema_errors(name: &str, doc: &Value) -> Vec<String> {
    let schema = load_schema(name);
    let compiled = jsonschema::JSONSchema::options()
        .with_draft(jsonschema::Draft::Draft7)
        .compile(&schema)
        .unwrap_or_else(|e| panic!("schema {name} does not compile: {e}"));
    let errors: Vec<String> = match compiled.validate(doc) {
        Ok(()) => Vec::new(),
        Err(errs) => errs.map(|e| format!("{}: {}", e.instance_path, e)).collect(),
    };
    errors
}

/// SHA-256 of every file below `root`, keyed by relative path.
pub fn tree_digest(root: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_owned()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let digest = Sha256::digest(fs::read(&path).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.insert(path.strip_prefix(root).unwrap().to_owned(), hex);
            }
        }
    }
    out
}

/// A TCP listener standing in for an HTTP proxy: counts every connection
/// and answers 502. Point `HTTP_PROXY`/`HTTPS_PROXY` at it to observe any
/// outbound request a child process makes.
pub struct CountingProxy {
    pub url: String,
    count: Arc<AtomicUsize>,
}

impl CountingProxy {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let count = Arc::new(AtomicUsize::new(0));
        let seen = count.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                seen.fetch_add(1, Ordering::SeqCst);
                let _ = stream.set_read_timeout(Some(Duration::from_millis(200)));
                let mut buf = [0u8; 1024];
                let _ = stream.read(&mut buf);
                let _ = stream.write_all(b"HTTP/1.1 502 Bad Gateway\r\ncontent-length: 0\r\nconnection: close\r\n\r\n");
            }
        });
        Self { url, count }
    }

    pub fn connections(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }

    pub fn env(&self) -> Vec<(&'static str, String)> {
        ["HTTP_PROXY", "HTTPS_PROXY", "ALL_PROXY", "http_proxy", "https_proxy", "all_proxy"]
            .into_iter()
            .map(|k| (k, self.url.clone()))
            .chain([("NO_PROXY", String::new()), ("no_proxy", String::new())])
            .collect()
    }
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_multiwiki"))
}

/// A free local port.
pub fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

pub fn golden_dir() -> PathBuf {
    manifest_dir().join("tests").join("golden")
}

fn golden_files(pair_dir: &Path) -> Vec<PathBuf> {
    let mut files = vec![PathBuf::from("meta.json"), PathBuf::from("plan.json"), PathBuf::from("timeline.json")];
    for sub in ["reports", "snapshots"] {
        let mut docs: Vec<PathBuf> = fs::read_dir(pair_dir.join(sub))
            .map(|rd| rd.filter_map(|e| e.ok()).map(|e| Path::new(sub).join(e.file_name())).collect())
            .unwrap_or_default();
        docs.sort();
        files.extend(docs);
    }
    files
}

/// Compares the analysis outputs of `pair` in the store at `root` with the
/// checked-in goldens, byte for byte. With `UPDATE_GOLDEN=1` the goldens
/// are rewritten instead.
pub fn check_golden(root: &Path, pair: &str) -> Result<usize, String> {
    let actual_dir = root.join(pair);
    let expected_dir = golden_dir().join(pair);
    let files = golden_files(&actual_dir);
    if std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1") {
        let _ = fs::remove_dir_all(&expected_dir);
        for f in &files {
            let dst = expected_dir.join(f);
            fs::create_dir_all(dst.parent().unwrap()).unwrap();
            fs::copy(actual_dir.join(f), dst).unwrap();
        }
        return Ok(files.len());
    }
    let expected = golden_files(&expected_dir);
    if expected != files {
        return Err(format!("{pair}: file set differs: expected {expected:?}, got {files:?}"));
    }
    for f in &files {
        let a = fs::read(actual_dir.join(f)).map_err(|e| format!("{pair}/{}: {e}", f.display()))?;
        let b = fs::read(expected_dir.join(f)).map_err(|e| format!("golden {pair}/{}: {e}", f.display()))?;
        if a != b {
            return Err(format!("{pair}/{} differs from golden", f.display()));
        }
    }
    Ok(files.len())
}

pub struct ApiResponse {
    pub status: u16,
    pub schema_header: Option<String>,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

impl ApiResponse {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("body is not JSON ({e}): {}", String::from_utf8_lossy(&self.body)))
    }
}

/// Issues GET requests against the in-process router.
pub struct ApiClient {
    router: axum::Router,
    runtime: tokio::runtime::Runtime,
}

impl ApiClient {
    pub fn new(root: &Path) -> Self {
        let store = Store::open_existing(root).unwrap();
        let router = multiwiki::app::server::router(store, None, &[]).unwrap();
        let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        Self { router, runtime }
    }

    pub fn get(&self, uri: &str) -> ApiResponse {
        use http_body_util::BodyExt;
        use tower::ServiceExt;
        let req = axum::http::Request::get(uri).body(axum::body::Body::empty()).unwrap();
        self.runtime.block_on(async {
            let resp = self.router.clone().oneshot(req).await.unwrap();
            let header = |name: &str| resp.headers().get(name).map(|v| v.to_str().unwrap().to_owned());
            let schema_header = header("x-schema-version");
            let content_type = header("content-type");
            let status = resp.status().as_u16();
            let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
            ApiResponse { status, schema_header, content_type, body }
        })
    }
}

/// Runs the HTTP contract against a populated store. Each entry is a check
/// name and its outcome.
pub fn api_contract(root: &Path) -> Vec<(String, Result<(), String>)> {
    let api = ApiClient::new(root);
    let mut out: Vec<(String, Result<(), String>)> = Vec::new();
    let mut check = |name: String, r: Result<(), String>| out.push((name, r));

    let expect = |resp: &ApiResponse, status: u16, schema: &str| -> Result<Value, String> {
        if resp.status != status {
            return Err(format!("status {} (want {status}): {}", resp.status, String::from_utf8_lossy(&resp.body)));
        }
        if resp.schema_header.as_deref() != Some("1") {
            return Err(format!("x-schema-version header {:?}", resp.schema_header));
        }
        if !resp.content_type.as_deref().is_some_and(|c| c.starts_with("application/json")) {
            return Err(format!("content-type {:?}", resp.content_type));
        }
        let doc = resp.json();
        let errs = schema_errors(schema, &doc);
        if !errs.is_empty() {
            return Err(format!("schema {schema}: {errs:?}"));
        }
        Ok(doc)
    };

    let r = api.get("/healthz");
    check("GET /healthz".into(), expect(&r, 200, "health.schema.json").map(|_| ()));

    let r = api.get("/api/pairs");
    let listed = expect(&r, 200, "pair-list.schema.json");
    check(
        "GET /api/pairs".into(),
        listed.and_then(|d| {
            let n = d.as_array().map_or(0, Vec::len);
            if n == PAIRS.len() { Ok(()) } else { Err(format!("{n} pairs listed")) }
        }),
    );

    let store = Store::open_existing(root).unwrap();
    for summary in store.list_pairs().unwrap() {
        let id = summary.pair_id.to_string();
        let r = api.get(&format!("/api/pairs/{id}"));
        check(format!("GET /api/pairs/{id}"), expect(&r, 200, "pair-detail.schema.json").map(|_| ()));

        let r = api.get(&format!("/api/pairs/{id}/timeline"));
        let stored = fs::read(store.timeline_path(&summary.pair_id)).unwrap();
        check(
            format!("GET /api/pairs/{id}/timeline"),
            expect(&r, 200, "timeline.schema.json")
                .and_then(|_| if r.body == stored { Ok(()) } else { Err("body differs from stored timeline".into()) }),
        );

        let times = store.report_times(&summary.pair_id).unwrap();
        for (i, t) in times.iter().enumerate() {
            let at = multiwiki::model::rfc3339::format(t);
            let r = api.get(&format!("/api/pairs/{id}/comparison?time={at}"));
            check(
                format!("GET comparison {id} at {at}"),
                expect(&r, 200, "comparison.schema.json").and_then(|d| {
                    if d["report_time"] == at { Ok(()) } else { Err(format!("report_time {}", d["report_time"])) }
                }),
            );
            let later = *t + chrono::Duration::seconds(1);
            let between = multiwiki::model::rfc3339::format(&later);
            let r = api.get(&format!("/api/pairs/{id}/comparison?time={between}"));
            check(
                format!("comparison floor {id} at {between}"),
                expect(&r, 200, "comparison.schema.json").and_then(|d| {
                    let want = if times.get(i + 1).is_some_and(|n| *n <= later) { multiwiki::model::rfc3339::format(&times[i + 1]) } else { at.clone() };
                    if d["report_time"] == want.as_str() { Ok(()) } else { Err(format!("report_time {} want {want}", d["report_time"])) }
                }),
            );
        }
        if let Some(first) = times.first() {
            let before = multiwiki::model::rfc3339::format(&(*first - chrono::Duration::days(1)));
            let r = api.get(&format!("/api/pairs/{id}/comparison?time={before}"));
            check(format!("comparison before first report {id}"), expect(&r, 404, "error.schema.json").map(|_| ()));
        }
    }

    let errors = [
        ("/api/pairs/no-such-pair.de-en", 404),
        ("/api/pairs/no-such-pair.de-en/timeline", 404),
        ("/api/pairs/..%2Fetc", 404),
        (&*format!("/api/pairs/{CODEX}/comparison"), 400),
        (&*format!("/api/pairs/{CODEX}/comparison?time=yesterday"), 400),
        ("/api/pairs/no-such-pair.de-en/comparison?time=2012-01-01T00:00:00Z", 404),
    ];
    for (uri, status) in errors {
        let r = api.get(uri);
        check(format!("GET {uri} -> {status}"), expect(&r, status, "error.schema.json").map(|_| ()));
    }
    out
}

/// Runs the CLI binary with `--data <data>` and extra environment.
pub fn run_cli(data: &Path, args: &[&str], env: &[(&str, String)]) -> std::process::Output {
    let mut cmd = std::process::Command::new(bin());
    cmd.arg("--data").arg(data).args(args).env_remove("MULTIWIKI_DATA").env_remove("MULTIWIKI_PORT");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

/// Ingests and analyzes every fixture pair through the CLI.
pub fn populate_cli(data: &Path, env: &[(&str, String)]) -> Result<(), String> {
    let source = fixtures();
    for (a1, a2) in PAIRS {
        let out = run_cli(data, &["ingest", "--source", source.to_str().unwrap(), "--pair", a1, a2], env);
        if !out.status.success() {
            return Err(format!("ingest {a1}: {}", String::from_utf8_lossy(&out.stderr)));
        }
        let id = String::from_utf8(out.stdout).unwrap().trim().to_owned();
        let out = run_cli(data, &["analyze", &id], env);
        if !out.status.success() {
            return Err(format!("analyze {id}: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(())
}
