//! Read-only HTTP service over a published snapshot.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, SystemTime};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use serde_json::json;

use crate::api::{self, error_code, DraftRequest, ErrorBody};
use crate::error::{AppError, Result};
use crate::snapshot::{AnalysisSnapshot, SnapshotStore};

fn respond<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match serde_json::to_vec(body) {
        Ok(bytes) => (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => {
            tracing::error!(error = %e, "response serialization failed");
            StatusCode::INTERNAL_SERVER_ERROR.into_response()
        }
    }
}

fn fail(status: StatusCode, error: &'static str, detail: impl Into<String>) -> Response {
    respond(
        status,
        &ErrorBody {
            error,
            detail: detail.into(),
        },
    )
}

fn parse_draft(body: &Bytes) -> Result<DraftRequest, Response> {
    serde_json::from_slice(body).map_err(|e| fail(StatusCode::BAD_REQUEST, "malformed_request", e.to_string()))
}

async fn health(State(store): State<Arc<SnapshotStore>>) -> Response {
    let snap = store.current();
    respond(StatusCode::OK, &json!({"status": "ok", "snapshot_version": snap.version}))
}

async fn pool(State(store): State<Arc<SnapshotStore>>) -> Response {
    let snap = store.current();
    let elements: Vec<_> = snap
        .pool
        .iter()
        .map(|e| {
            let (wins, games) = snap.log.sides().tally([e]);
            json!({"id": e, "wins": wins, "games": games})
        })
        .collect();
    respond(
        StatusCode::OK,
        &json!({
            "snapshot_version": snap.version,
            "records": snap.records,
            "pool": snap.pool,
            "elements": elements,
        }),
    )
}

async fn matrix(State(store): State<Arc<SnapshotStore>>) -> Response {
    let snap = store.current();
    respond(
        StatusCode::OK,
        &json!({
            "snapshot_version": snap.version,
            "baseline": snap.pair_matrix.baseline,
            "min_games": snap.pair_matrix.min_games,
            "pairs": snap.pair_matrix.entries,
            "counters": snap.counter_matrix.entries,
        }),
    )
}

async fn recommend(State(store): State<Arc<SnapshotStore>>, body: Bytes) -> Response {
    let req = match parse_draft(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let snap = store.current();
    match api::recommend(&snap, &req) {
        Ok(r) => respond(StatusCode::OK, &r),
        Err(e) => fail(StatusCode::UNPROCESSABLE_ENTITY, error_code(&e), e.to_string()),
    }
}

async fn what_if(State(store): State<Arc<SnapshotStore>>, body: Bytes) -> Response {
    let req = match parse_draft(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let Some(candidate) = req.candidate.clone() else {
        return fail(StatusCode::BAD_REQUEST, "malformed_request", "missing field `candidate`");
    };
    let snap = store.current();
    match api::what_if(&snap, &req, &candidate) {
        Ok(r) => respond(StatusCode::OK, &r),
        Err(e) => fail(StatusCode::UNPROCESSABLE_ENTITY, error_code(&e), e.to_string()),
    }
}

pub fn router(store: Arc<SnapshotStore>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/pool", get(pool))
        .route("/api/matrix", get(matrix))
        .route("/api/recommend", post(recommend))
        .route("/api/whatif", post(what_if))
        .with_state(store)
}

fn modified(path: &PathBuf) -> Option<SystemTime> {
    std::fs::metadata(path).and_then(|m| m.modified()).ok()
}

/// Polls `path` and publishes a new snapshot whenever the file changes.
async fn watch(store: Arc<SnapshotStore>, path: PathBuf, every: Duration) {
    let mut seen = modified(&path);
    loop {
        tokio::time::sleep(every).await;
        let now = modified(&path);
        if now == seen {
            continue;
        }
        seen = now;
        match AnalysisSnapshot::load(&path) {
            Ok(snap) => {
                let v = store.publish(snap);
                tracing::info!(version = v, "published snapshot");
            }
            Err(e) => tracing::warn!(error = %e, "snapshot reload failed; keeping current"),
        }
    }
}

pub async fn serve(store: Arc<SnapshotStore>, addr: SocketAddr, watch_path: Option<PathBuf>) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| AppError::Input(format!("cannot bind {addr}: {e}")))?;
    let local = listener.local_addr().map_err(|e| AppError::Internal(e.to_string()))?;
    tracing::info!(%local, version = store.current().version, "serving");
    eprintln!("listening on http://{local}");
    if let Some(path) = watch_path {
        tokio::spawn(watch(store.clone(), path, Duration::from_secs(1)));
    }
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| AppError::Internal(e.to_string()))
}
