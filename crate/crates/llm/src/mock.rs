//! In-process chat-completions server for tests and offline demos.
//!
//! Every request is counted, logged and answered by a responder closure. The
//! server tracks the number of requests in flight and the maximum observed,
//! so callers can assert concurrency bounds.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use solidarity_core::taxonomy::{FineLabel, HighLevel, Subtype};
use tokio::sync::oneshot;

#[derive(Debug, Clone, PartialEq)]
pub struct MockRequest {
    /// Sequence number in arrival order, from 0.
    pub index: u64,
    pub model: String,
    pub system: Option<String>,
    pub prompt: String,
    pub bearer: Option<String>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MockReply {
    Text(String),
    Status(u16),
}

pub type Responder = Arc<dyn Fn(&MockRequest) -> MockReply + Send + Sync>;

#[derive(Debug, Default)]
pub struct MockStats {
    requests: AtomicU64,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    log: Mutex<Vec<MockRequest>>,
}

struct Shared {
    responder: Responder,
    delay: Duration,
    stats: Arc<MockStats>,
}

pub struct MockServer {
    addr: SocketAddr,
    stats: Arc<MockStats>,
    shutdown: Option<oneshot::Sender<()>>,
}

impl MockServer {
    /// Binds to an ephemeral localhost port. `delay` is added to every
    /// response so that concurrent requests overlap.
    pub async fn start(responder: Responder, delay: Duration) -> std::io::Result<Self> {
        Self::bind("127.0.0.1:0".parse().expect("valid addr"), responder, delay).await
    }

    pub async fn bind(addr: SocketAddr, responder: Responder, delay: Duration) -> std::io::Result<Self> {
        let stats = Arc::new(MockStats::default());
        let shared = Arc::new(Shared { responder, delay, stats: stats.clone() });
        let app = Router::new()
            .route("/v1/chat/completions", post(handle))
            .route("/chat/completions", post(handle))
            .with_state(shared);
        let listener = tokio::net::TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(MockServer { addr, stats, shutdown: Some(tx) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn requests(&self) -> u64 {
        self.stats.requests.load(Ordering::SeqCst)
    }

    pub fn max_in_flight(&self) -> usize {
        self.stats.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn log(&self) -> Vec<MockRequest> {
        self.stats.log.lock().expect("log lock").clone()
    }

    pub fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

async fn handle(State(shared): State<Arc<Shared>>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    let stats = &shared.stats;
    let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let index = stats.requests.fetch_add(1, Ordering::SeqCst);

    let messages = body["messages"].as_array().cloned().unwrap_or_default();
    let find = |role: &str| {
        messages
            .iter()
            .filter(|m| m["role"] == role)
            .filter_map(|m| m["content"].as_str())
            .next_back()
            .map(str::to_string)
    };
    let req = MockRequest {
        index,
        model: body["model"].as_str().unwrap_or_default().to_string(),
        system: find("system"),
        prompt: find("user").unwrap_or_default(),
        bearer: headers
            .get("authorization")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::to_string),
        temperature: body["temperature"].as_f64(),
        top_p: body["top_p"].as_f64(),
    };
    let reply = (shared.responder)(&req);
    stats.log.lock().expect("log lock").push(req);
    if !shared.delay.is_zero() {
        tokio::time::sleep(shared.delay).await;
    }
    stats.in_flight.fetch_sub(1, Ordering::SeqCst);

    match reply {
        MockReply::Text(text) => Json(json!({
            "id": format!("mock-{index}"),
            "object": "chat.completion",
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
        }))
        .into_response(),
        MockReply::Status(code) => {
            let status = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, Json(json!({"error": {"message": format!("mock status {code}")}}))).into_response()
        }
    }
}

/// Replies in order, repeating the last one when the script runs out.
pub fn scripted(replies: Vec<MockReply>) -> Responder {
    assert!(!replies.is_empty(), "script needs at least one reply");
    let next = AtomicUsize::new(0);
    Arc::new(move |_| {
        let i = next.fetch_add(1, Ordering::SeqCst).min(replies.len() - 1);
        replies[i].clone()
    })
}

/// Step a prompt belongs to, judged from the answer options it lists.
///
/// One-step prompts mention `solidarity:group-based`; high-level prompts
/// mention `mixed`; anything else is treated as a subtype prompt.
pub fn guess_step(prompt: &str) -> &'static str {
    if prompt.contains("solidarity:group-based") {
        "one_step"
    } else if prompt.contains("mixed") {
        "high_level"
    } else {
        "subtype"
    }
}

/// A stateless labeller: the answer is a pure function of the prompt text,
/// so repeated runs give identical results. About one prompt in twenty gets
/// an answer without any label.
pub fn hash_labeler() -> Responder {
    Arc::new(|req| {
        let digest = Sha256::digest(req.prompt.as_bytes());
        let pick = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        if pick % 20 == 19 {
            return MockReply::Text("I am not able to decide this.".into());
        }
        let label = match guess_step(&req.prompt) {
            "one_step" => FineLabel::MODEL_FACING[(pick % 10) as usize].canonical(),
            "high_level" => HighLevel::ALL[(pick % 4) as usize].canonical(),
            _ => Subtype::ALL[(pick % 4) as usize].canonical(),
        };
        MockReply::Text(format!("Reasoning: the passage was read carefully.\nLABEL: {label}"))
    })
}
