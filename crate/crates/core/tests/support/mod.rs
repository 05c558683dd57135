//! Local HTTP double for the wiki search/extract API and the chat-completion
//! endpoint, running on its own tokio runtime in a background thread.
#![allow(dead_code)]

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[derive(Debug, Clone)]
pub struct Hit {
    pub at: Instant,
    pub path: String,
    pub query: HashMap<String, String>,
    pub body: Option<Value>,
    pub authorization: Option<String>,
}

#[derive(Default)]
pub struct Behaviour {
    /// Requests answered with 503 before normal service starts.
    pub fail_first: usize,
    /// Answer every request with this status.
    pub always_status: Option<u16>,
    /// Delay before each response.
    pub delay: Duration,
    pub chat_reply: String,
    /// Page title → lead extract.
    pub pages: HashMap<String, String>,
}

struct Shared {
    behaviour: Behaviour,
    hits: Mutex<Vec<Hit>>,
    served: AtomicUsize,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

pub struct MockServer {
    pub addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    pub fn start(behaviour: Behaviour) -> Self {
        let shared = Arc::new(Shared {
            behaviour,
            hits: Mutex::new(Vec::new()),
            served: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        let app = Router::new()
            .route("/w/api.php", get(wiki))
            .route("/v1/chat/completions", post(chat))
            .with_state(shared.clone());

        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(4)
                .enable_all()
                .build()
                .expect("runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.expect("bind");
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = stop_rx.await;
                    })
                    .await
                    .expect("serve");
            });
        });
        let addr = addr_rx.recv().expect("server address");
        Self {
            addr,
            shared,
            shutdown: Some(stop_tx),
            thread: Some(thread),
        }
    }

    pub fn wiki_url(&self) -> String {
        format!("http://{}/w/api.php", self.addr)
    }

    pub fn chat_base(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn hits(&self) -> Vec<Hit> {
        self.shared.hits.lock().unwrap().clone()
    }

    pub fn peak_in_flight(&self) -> usize {
        self.shared.peak.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Records the hit, tracks concurrency, and decides whether to fail.
async fn admit(shared: &Shared, hit: Hit) -> Option<Response> {
    shared.hits.lock().unwrap().push(hit);
    let now = shared.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    shared.peak.fetch_max(now, Ordering::SeqCst);
    if !shared.behaviour.delay.is_zero() {
        tokio::time::sleep(shared.behaviour.delay).await;
    }
    shared.in_flight.fetch_sub(1, Ordering::SeqCst);

    let n = shared.served.fetch_add(1, Ordering::SeqCst);
    if let Some(code) = shared.behaviour.always_status {
        return Some(StatusCode::from_u16(code).unwrap().into_response());
    }
    if n < shared.behaviour.fail_first {
        return Some(StatusCode::SERVICE_UNAVAILABLE.into_response());
    }
    None
}

async fn wiki(State(shared): State<Arc<Shared>>, Query(q): Query<HashMap<String, String>>) -> Response {
    let hit = Hit {
        at: Instant::now(),
        path: "/w/api.php".into(),
        query: q.clone(),
        body: None,
        authorization: None,
    };
    if let Some(resp) = admit(&shared, hit).await {
        return resp;
    }
    let pages = &shared.behaviour.pages;
    if q.get("list").map(String::as_str) == Some("search") {
        let needle = q.get("srsearch").cloned().unwrap_or_default().to_lowercase();
        let mut titles: Vec<&String> = pages.keys().filter(|t| t.to_lowercase().contains(&needle)).collect();
        titles.sort();
        let results: Vec<Value> = titles.iter().map(|t| json!({"ns": 0, "title": t})).collect();
        return Json(json!({"batchcomplete": true, "query": {"search": results}})).into_response();
    }
    let title = q.get("titles").cloned().unwrap_or_default();
    let page = match pages.get(&title) {
        Some(text) => json!({"pageid": 1, "title": title, "extract": text}),
        None => json!({"title": title, "missing": true}),
    };
    Json(json!({"batchcomplete": true, "query": {"pages": [page]}})).into_response()
}

async fn chat(State(shared): State<Arc<Shared>>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    let hit = Hit {
        at: Instant::now(),
        path: "/v1/chat/completions".into(),
        query: HashMap::new(),
        body: Some(body),
        authorization: headers
            .get("authorization")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string),
    };
    if let Some(resp) = admit(&shared, hit).await {
        return resp;
    }
    Json(json!({
        "id": "cmpl-test",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": shared.behaviour.chat_reply}}]
    }))
    .into_response()
}
