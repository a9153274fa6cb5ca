use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use synergy_app::config::RunConfig;
use synergy_app::server::router;
use synergy_app::snapshot::{AnalysisSnapshot, SnapshotStore};
use tower::ServiceExt;

fn fixture_snapshot(version: u64) -> AnalysisSnapshot {
    let bytes = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/synthetic-A.jsonl")).unwrap();
    AnalysisSnapshot::from_jsonl(&bytes, RunConfig::default(), version, 0).unwrap().0
}

fn store() -> Arc<SnapshotStore> {
    Arc::new(SnapshotStore::new(fixture_snapshot(1)))
}

async fn call(store: &Arc<SnapshotStore>, method: &str, uri: &str, body: &str) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_owned()))
        .unwrap();
    let resp = router(store.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::test]
async fn health_reports_version() {
    let s = store();
    let (status, body) = call(&s, "GET", "/api/health", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"status": "ok", "snapshot_version": 1}));
}

#[tokio::test]
async fn pool_and_matrix() {
    let s = store();
    let (status, body) = call(&s, "GET", "/api/pool", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["pool"], json!(["a", "b", "c", "d", "e", "f"]));
    assert_eq!(body["records"], 200);
    assert_eq!(body["elements"][0], json!({"id": "a", "wins": 66, "games": 132}));

    let (status, body) = call(&s, "GET", "/api/matrix", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["baseline"], "mean");
    let ab = &body["pairs"][0];
    assert_eq!((ab["a"].as_str(), ab["b"].as_str()), (Some("a"), Some("b")));
    assert!((ab["score"]["synergy"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(body["counters"].as_array().unwrap().len(), 28);
}

#[tokio::test]
async fn recommend_ranks_partner_first() {
    let s = store();
    let (status, body) = call(&s, "POST", "/api/recommend", r#"{"allies":["a"],"enemies":[],"k":3}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["snapshot_version"], 1);
    let recs = body["recommendations"].as_array().unwrap();
    assert_eq!(recs.len(), 3);
    assert_eq!(recs[0]["candidate"], "b");
    assert!((recs[0]["ally_component"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[tokio::test]
async fn what_if_matches_recommend_entry() {
    let s = store();
    let (_, rec) = call(&s, "POST", "/api/recommend", r#"{"allies":["a"],"enemies":["c"],"k":5}"#).await;
    let (status, wi) = call(&s, "POST", "/api/whatif", r#"{"allies":["a"],"enemies":["c"],"candidate":"b"}"#).await;
    assert_eq!(status, StatusCode::OK);
    let entry = rec["recommendations"].as_array().unwrap().iter().find(|r| r["candidate"] == "b").unwrap();
    assert_eq!(&wi["recommendation"], entry);
    assert_eq!(wi["contributions"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn domain_errors_are_422() {
    let s = store();
    let (status, body) = call(&s, "POST", "/api/whatif", r#"{"allies":["a"],"candidate":"a"}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "unavailable_candidate");
    assert!(body["detail"].as_str().unwrap().contains('a'));

    let (status, body) = call(&s, "POST", "/api/whatif", r#"{"unavailable":["d"],"candidate":"d"}"#).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("unavailable_candidate")));

    let (status, body) = call(&s, "POST", "/api/recommend", r#"{"allies":["zz"]}"#).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("unknown_element")));

    let (status, body) = call(&s, "POST", "/api/recommend", r#"{"k":0}"#).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid_k")));
}

#[tokio::test]
async fn malformed_bodies_are_400() {
    let s = store();
    for body in ["", "{", r#"{"allies":"a"}"#, r#"{"allies":[""]}"#, r#"{"extra":1}"#, r#"{"k":-1}"#] {
        let (status, resp) = call(&s, "POST", "/api/recommend", body).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(resp["error"], "malformed_request");
    }
    let (status, _) = call(&s, "POST", "/api/whatif", r#"{"allies":["a"]}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_routes_404() {
    let s = store();
    let (status, _) = call(&s, "GET", "/api/nothing", "").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn swaps_are_atomic_for_readers() {
    let s = store();
    let mut tasks = Vec::new();
    for i in 0..64 {
        let s = s.clone();
        tasks.push(tokio::spawn(async move {
            if i % 16 == 0 {
                s.publish(fixture_snapshot(1));
            }
            let (status, body) = call(&s, "POST", "/api/recommend", r#"{"allies":["a"],"k":2}"#).await;
            assert_eq!(status, StatusCode::OK);
            assert_eq!(body["recommendations"][0]["candidate"], "b");
            body["snapshot_version"].as_u64().unwrap()
        }));
    }
    for t in tasks {
        let v = t.await.unwrap();
        assert!((1..=5).contains(&v));
    }
    let (_, health) = call(&s, "GET", "/api/health", "").await;
    assert_eq!(health["snapshot_version"], 5);
}
