#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

use semfeat::service::{router, AppState};
use semfeat::{Defaults, Workspace};
use semfeat_core::Record;
use semfeat_testkit::synth::{homonym_corpus, HomonymConfig};

pub fn write_jsonl(path: &Path, records: &[Record]) {
    let mut f = std::fs::File::create(path).unwrap();
    for r in records {
        serde_json::to_writer(&mut f, r).unwrap();
        f.write_all(b"\n").unwrap();
    }
}

pub fn homonym_records(docs: usize) -> Vec<Record> {
    homonym_corpus(&HomonymConfig {
        docs,
        ..HomonymConfig::default()
    })
}

/// A data directory holding an ingested homonym corpus.
pub fn data_dir(docs: usize) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_jsonl(&dir.path().join("corpus.jsonl"), &homonym_records(docs));
    dir
}

pub fn workspace(dir: &Path) -> Workspace {
    Workspace::open(dir, None, Defaults::default(), 4).unwrap()
}

pub fn app(dir: &Path) -> Router {
    router(AppState::new(workspace(dir)), 64 * 1024, None)
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => builder
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&v).unwrap())),
        None => builder.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

pub async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body)).await
}

pub async fn put(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::PUT, uri, Some(body)).await
}
