//! A small in-process server speaking the scorer wire protocol, for tests and demos.
//!
//! ```no_run
//! use ontomatch_core::bridge::stub::StubServer;
//! let stub = StubServer::constant(0.5);
//! println!("scorer at {}", stub.url());
//! ```

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use tiny_http::{Header, Method, Request, Response, Server};

use super::csv_io::{read_pairs_csv, read_training_csv, PairRow, SCORES_HEADER};

/// Maps a request row to its score; `None` leaves the row unanswered.
/// Values are written verbatim, so out-of-range scores reach the client.
pub type ScoreFn = Arc<dyn Fn(&PairRow) -> Option<f64> + Send + Sync>;

#[derive(Clone)]
pub struct StubConfig {
    pub score: ScoreFn,
    /// When false, `/score` answers 503.
    pub loaded: bool,
}

#[derive(Default)]
struct Counters {
    score_requests: AtomicUsize,
    scored_rows: AtomicUsize,
    finetune_queries: Mutex<Vec<String>>,
}

pub struct StubServer {
    server: Arc<Server>,
    addr: SocketAddr,
    counters: Arc<Counters>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(config: StubConfig) -> Self {
        let server = Arc::new(Server::http("127.0.0.1:0").expect("bind loopback port"));
        let addr = server.server_addr().to_ip().expect("tcp listener");
        let counters = Arc::new(Counters::default());
        let handle = {
            let server = Arc::clone(&server);
            let counters = Arc::clone(&counters);
            thread::spawn(move || {
                while let Ok(request) = server.recv() {
                    let config = config.clone();
                    let counters = Arc::clone(&counters);
                    thread::spawn(move || handle(request, &config, &counters));
                }
            })
        };
        StubServer {
            server,
            addr,
            counters,
            handle: Some(handle),
        }
    }

    pub fn constant(score: f64) -> Self {
        Self::with_fn(move |_| Some(score))
    }

    pub fn with_fn(f: impl Fn(&PairRow) -> Option<f64> + Send + Sync + 'static) -> Self {
        Self::start(StubConfig {
            score: Arc::new(f),
            loaded: true,
        })
    }

    /// A server whose model is not loaded: `/score` answers 503.
    pub fn unloaded() -> Self {
        Self::start(StubConfig {
            score: Arc::new(|_| Some(0.0)),
            loaded: false,
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Number of `/score` requests received.
    pub fn score_requests(&self) -> usize {
        self.counters.score_requests.load(Ordering::SeqCst)
    }

    pub fn scored_rows(&self) -> usize {
        self.counters.scored_rows.load(Ordering::SeqCst)
    }

    /// Raw query strings of the `/finetune` requests received.
    pub fn finetune_queries(&self) -> Vec<String> {
        self.counters.finetune_queries.lock().unwrap().clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn text(status: u16, body: impl Into<String>) -> Response<std::io::Cursor<Vec<u8>>> {
    Response::from_string(body.into()).with_status_code(status)
}

fn handle(mut request: Request, config: &StubConfig, counters: &Counters) {
    let (path, query) = match request.url().split_once('?') {
        Some((p, q)) => (p.to_string(), q.to_string()),
        None => (request.url().to_string(), String::new()),
    };
    let mut body = Vec::new();
    let response = if request.as_reader().read_to_end(&mut body).is_err() {
        text(400, "unreadable body")
    } else {
        match (request.method(), path.as_str()) {
            (Method::Get, "/health") => text(200, "ok"),
            (Method::Post, "/score") => {
                counters.score_requests.fetch_add(1, Ordering::SeqCst);
                score(&body, config, counters)
            }
            (Method::Post, "/finetune") => {
                counters.finetune_queries.lock().unwrap().push(query);
                finetune(&body)
            }
            _ => text(404, "not found"),
        }
    };
    let _ = request.respond(response);
}

fn score(
    body: &[u8],
    config: &StubConfig,
    counters: &Counters,
) -> Response<std::io::Cursor<Vec<u8>>> {
    if !config.loaded {
        return text(503, "model not loaded");
    }
    let rows = match read_pairs_csv(body) {
        Ok(rows) => rows,
        Err(e) => return text(400, e.to_string()),
    };
    counters.scored_rows.fetch_add(rows.len(), Ordering::SeqCst);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SCORES_HEADER).unwrap();
    for row in &rows {
        if let Some(s) = (config.score)(row) {
            w.write_record([row.pair_id.as_str(), &s.to_string()])
                .unwrap();
        }
    }
    let header = Header::from_bytes("Content-Type", "text/csv; charset=utf-8").unwrap();
    Response::from_data(w.into_inner().unwrap()).with_header(header)
}

fn finetune(body: &[u8]) -> Response<std::io::Cursor<Vec<u8>>> {
    match read_training_csv(body) {
        Ok(rows) => {
            let positives = rows.iter().filter(|r| r.label.as_int() == 1).count();
            let loss = if rows.is_empty() {
                0.0
            } else {
                1.0 / (1.0 + rows.len() as f64)
            };
            let json = serde_json::json!({
                "final_loss": loss,
                "model_id": format!("stub-{}-{}", rows.len(), positives),
            });
            let header = Header::from_bytes("Content-Type", "application/json").unwrap();
            text(200, json.to_string()).with_header(header)
        }
        Err(e) => text(400, e.to_string()),
    }
}
