//! Canned-reply HTTP server speaking the documented wire shape. Tests
//! spawn it in-process on port 0; the judge-stub binary serves the same
//! router on a fixed port for manual runs.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::wire::{WireReply, WireRequest};

/// Script format: first rule whose `contains` is a substring of the
/// request's text parts wins; `fallback` (or 404) covers the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StubScript {
    pub rules: Vec<StubRule>,
    pub fallback: Option<StubAction>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StubRule {
    pub contains: String,
    #[serde(flatten)]
    pub action: StubAction,
}

/// What to send back. `raw` wins over `reply` so scripts can serve broken
/// bodies; `status` alone sends an empty body with that status.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StubAction {
    /// Well-formed wire reply with this content.
    pub reply: Option<String>,
    /// HTTP status, default 200.
    pub status: Option<u16>,
    /// Exact body bytes, bypassing the wire shape.
    pub raw: Option<String>,
}

impl StubAction {
    pub fn reply(text: impl Into<String>) -> Self {
        StubAction {
            reply: Some(text.into()),
            ..StubAction::default()
        }
    }

    pub fn status(code: u16) -> Self {
        StubAction {
            status: Some(code),
            ..StubAction::default()
        }
    }

    pub fn raw(body: impl Into<String>) -> Self {
        StubAction {
            raw: Some(body.into()),
            ..StubAction::default()
        }
    }

    fn respond(&self) -> Response {
        let status = self
            .status
            .and_then(|code| StatusCode::from_u16(code).ok())
            .unwrap_or(StatusCode::OK);
        if let Some(raw) = &self.raw {
            (status, raw.clone()).into_response()
        } else if let Some(reply) = &self.reply {
            (
                status,
                Json(WireReply {
                    content: reply.clone(),
                }),
            )
                .into_response()
        } else {
            status.into_response()
        }
    }
}

impl StubRule {
    pub fn new(contains: impl Into<String>, action: StubAction) -> Self {
        StubRule {
            contains: contains.into(),
            action,
        }
    }
}

struct StubState {
    script: StubScript,
    hits: Arc<AtomicUsize>,
}

async fn handle(
    State(state): State<Arc<StubState>>,
    Json(request): Json<WireRequest>,
) -> Response {
    state.hits.fetch_add(1, Ordering::SeqCst);
    let text = request.text();
    for rule in &state.script.rules {
        if text.contains(&rule.contains) {
            return rule.action.respond();
        }
    }
    match &state.script.fallback {
        Some(action) => action.respond(),
        None => (StatusCode::NOT_FOUND, "no stub rule matched").into_response(),
    }
}

/// The judge endpoint lives at POST /judge.
pub fn router(script: StubScript, hits: Arc<AtomicUsize>) -> Router {
    Router::new()
        .route("/judge", post(handle))
        .with_state(Arc::new(StubState { script, hits }))
}

/// In-process server handle. Dropping it aborts the serve task.
pub struct StubServer {
    pub addr: SocketAddr,
    hits: Arc<AtomicUsize>,
    task: tokio::task::JoinHandle<()>,
}

impl StubServer {
    pub async fn spawn(script: StubScript) -> std::io::Result<StubServer> {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let hits = Arc::new(AtomicUsize::new(0));
        let app = router(script, hits.clone());
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });
        Ok(StubServer { addr, hits, task })
    }

    pub fn url(&self) -> String {
        format!("http://{}/judge", self.addr)
    }

    /// Requests seen so far, malformed ones included.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.task.abort();
    }
}
