mod common;

use common::*;
use multiwiki::store::Store;

fn populated() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    populate(dir.path());
    dir
}

#[test]
fn contract_holds_for_every_endpoint() {
    let dir = populated();
    let results = api_contract(dir.path());
    assert!(results.len() > 20);
    let failures: Vec<_> = results.iter().filter(|(_, r)| r.is_err()).collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn serving_never_writes_to_the_store() {
    let dir = populated();
    let before = tree_digest(dir.path());
    api_contract(dir.path());
    assert_eq!(before, tree_digest(dir.path()));
}

#[test]
fn error_bodies_have_exactly_code_and_message() {
    let dir = populated();
    let api = ApiClient::new(dir.path());
    let doc = api.get("/api/pairs/missing.de-en").json();
    let keys: Vec<&String> = doc.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["code", "message"]);
    assert_eq!(doc["code"], "NotFound");
}

#[test]
fn comparison_reports_missing_and_bad_time() {
    let dir = populated();
    let api = ApiClient::new(dir.path());
    assert_eq!(api.get(&format!("/api/pairs/{CODEX}/comparison")).json()["code"], "MissingTime");
    assert_eq!(api.get(&format!("/api/pairs/{CODEX}/comparison?time=2012")).json()["code"], "BadTime");
}

#[test]
fn comparison_after_last_report_uses_last_report() {
    let dir = populated();
    let api = ApiClient::new(dir.path());
    let doc = api.get(&format!("/api/pairs/{CODEX}/comparison?time=2030-01-01T00:00:00Z")).json();
    assert_eq!(doc["report_time"], "2015-06-30T12:00:00Z");
    assert_eq!(doc["target_time"], "2030-01-01T00:00:00Z");
}

#[test]
fn pair_list_matches_store() {
    let dir = populated();
    let api = ApiClient::new(dir.path());
    let listed = api.get("/api/pairs").json();
    let ids: Vec<&str> = listed.as_array().unwrap().iter().map(|p| p["pair_id"].as_str().unwrap()).collect();
    let stored: Vec<String> = Store::open_existing(dir.path()).unwrap().list_pairs().unwrap().into_iter().map(|s| s.pair_id.to_string()).collect();
    assert_eq!(ids, stored);
}

#[test]
fn static_assets_are_served_as_fallback() {
    let dir = populated();
    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<html></html>").unwrap();
    let router = multiwiki::app::server::router(Store::open_existing(dir.path()).unwrap(), Some(assets.path().to_owned()), &[]).unwrap();
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        use http_body_util::BodyExt;
        use tower::ServiceExt;
        let req = axum::http::Request::get("/index.html").body(axum::body::Body::empty()).unwrap();
        let resp = router.clone().oneshot(req).await.unwrap();
        assert_eq!(resp.status(), 200);
        let body = resp.into_body().collect().await.unwrap().to_bytes();
        assert_eq!(&body[..], b"<html></html>");
    });
}

#[test]
fn cors_allowlist_is_enforced() {
    let dir = populated();
    let allow = vec!["https://viewer.example".to_owned()];
    let router = multiwiki::app::server::router(Store::open_existing(dir.path()).unwrap(), None, &allow).unwrap();
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        use tower::ServiceExt;
        let origin_of = |origin: &str| {
            axum::http::Request::get("/healthz").header("origin", origin).body(axum::body::Body::empty()).unwrap()
        };
        let ok = router.clone().oneshot(origin_of("https://viewer.example")).await.unwrap();
        assert_eq!(ok.headers()["access-control-allow-origin"], "https://viewer.example");
        let other = router.clone().oneshot(origin_of("https://elsewhere.example")).await.unwrap();
        assert!(other.headers().get("access-control-allow-origin").is_none());
    });
}

#[test]
fn bad_cors_origin_is_rejected() {
    let dir = populated();
    let allow = vec!["bad\norigin".to_owned()];
    let err = multiwiki::app::server::router(Store::open_existing(dir.path()).unwrap(), None, &allow).unwrap_err();
    assert_eq!(err.code, "InvalidOrigin");
}
