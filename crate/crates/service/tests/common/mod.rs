#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

use rxhistory_core::compile::{compile, CompileOptions, CompiledTerminology, DenyList};
use rxhistory_core::rrf::{Release, SourceDialect};
use rxhistory_service::{load_state, router, ApiConfig, AppState};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn compile_fixture() -> CompiledTerminology {
    let release = Release::read_dir(&fixture_dir().join("rxnorm"), SourceDialect::RxnormNative).unwrap();
    let deny = DenyList::parse(&std::fs::read_to_string(fixture_dir().join("deny_list.txt")).unwrap());
    compile(
        &release.concepts,
        &release.relationships,
        &release.attributes,
        &deny,
        &CompileOptions::default(),
    )
    .unwrap()
    .terminology
}

/// A data directory holding the compiled fixture.
pub fn data_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    compile_fixture().write_tables(dir.path()).unwrap();
    dir
}

pub fn app(dir: &Path) -> (Router, Arc<AppState>) {
    let state = load_state(&ApiConfig::new(dir)).unwrap();
    (router(state.clone()), state)
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_owned())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn get_json(app: &Router, uri: &str) -> (StatusCode, serde_json::Value) {
    let (status, body) = call(app, Method::GET, uri, None).await;
    (status, serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null))
}

pub async fn post_json(app: &Router, uri: &str, body: &str) -> (StatusCode, serde_json::Value) {
    let (status, body) = call(app, Method::POST, uri, Some(body)).await;
    (status, serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null))
}
