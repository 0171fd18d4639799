//! HTTP client for an external pair scorer.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use ureq::Agent;

use super::csv_io::{pairs_to_csv, read_scores_csv, training_to_csv, TrainingRecord};
use super::{check_coverage, PairScorer, ScoreError, ScoreRecord, TextPairRecord};

const CSV_CONTENT_TYPE: &str = "text/csv; charset=utf-8";

#[derive(Debug, Clone, PartialEq)]
pub struct ScorerEndpoint {
    pub base_url: String,
    pub timeout: Duration,
    pub batch_size: usize,
    /// Upper bound on concurrently outstanding batch requests.
    pub max_in_flight: usize,
}

impl ScorerEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        ScorerEndpoint {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(300),
            batch_size: 1000,
            max_in_flight: 4,
        }
    }

    pub fn with_batch_size(mut self, n: usize) -> Self {
        self.batch_size = n.max(1);
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.max_in_flight = n.max(1);
        self
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base_url, path)
    }
}

/// Optional training hyperparameters, sent as query parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FinetuneParams {
    pub epochs: Option<u32>,
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub batch_size: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FinetuneResponse {
    #[serde(alias = "loss", alias = "train_loss")]
    pub final_loss: f64,
    #[serde(alias = "model")]
    pub model_id: String,
}

/// Scores records by posting CSV batches to `/score`.
#[derive(Debug, Clone)]
pub struct RemoteScorer {
    endpoint: ScorerEndpoint,
    agent: Agent,
}

impl RemoteScorer {
    pub fn new(endpoint: ScorerEndpoint) -> Self {
        let config = Agent::config_builder()
            .timeout_global(Some(endpoint.timeout))
            .http_status_as_error(false)
            .build();
        RemoteScorer {
            agent: Agent::new_with_config(config),
            endpoint,
        }
    }

    /// Builds a scorer and fails unless the health check passes.
    pub fn connect(endpoint: ScorerEndpoint) -> Result<Self, ScoreError> {
        let scorer = RemoteScorer::new(endpoint);
        scorer.health()?;
        Ok(scorer)
    }

    pub fn endpoint(&self) -> &ScorerEndpoint {
        &self.endpoint
    }

    pub fn health(&self) -> Result<(), ScoreError> {
        let url = self.endpoint.url("/health");
        let mut resp = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| transport(&url, e))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| transport(&url, e))?;
        if status == 200 && body.trim() == "ok" {
            Ok(())
        } else {
            Err(ScoreError::Unhealthy(format!(
                "HTTP {status}: {}",
                body.trim()
            )))
        }
    }

    fn score_batch(&self, batch: &[TextPairRecord]) -> Result<Vec<ScoreRecord>, ScoreError> {
        let url = self.endpoint.url("/score");
        let body = self.post(&url, &[], pairs_to_csv(batch))?;
        read_scores_csv(body.as_slice()).map_err(|e| ScoreError::Malformed(e.to_string()))
    }

    fn post(
        &self,
        url: &str,
        query: &[(&str, String)],
        body: Vec<u8>,
    ) -> Result<Vec<u8>, ScoreError> {
        let mut req = self
            .agent
            .post(url)
            .header("Content-Type", CSV_CONTENT_TYPE);
        for (k, v) in query {
            req = req.query(*k, v);
        }
        let mut resp = req.send(body).map_err(|e| transport(url, e))?;
        let status = resp.status().as_u16();
        let bytes = resp
            .body_mut()
            .with_config()
            .limit(u64::MAX)
            .read_to_vec()
            .map_err(|e| transport(url, e))?;
        if status != 200 {
            return Err(ScoreError::Status {
                status,
                body: String::from_utf8_lossy(&bytes).trim().to_string(),
            });
        }
        Ok(bytes)
    }

    /// Fine-tunes the served model on labelled pairs.
    pub fn finetune(
        &self,
        data: &[TrainingRecord],
        params: &FinetuneParams,
    ) -> Result<FinetuneResponse, ScoreError> {
        let url = self.endpoint.url("/finetune");
        let mut query = Vec::new();
        if let Some(v) = params.epochs {
            query.push(("epochs", v.to_string()));
        }
        if let Some(v) = params.learning_rate {
            query.push(("learning_rate", v.to_string()));
        }
        if let Some(v) = params.seed {
            query.push(("seed", v.to_string()));
        }
        if let Some(v) = params.batch_size {
            query.push(("batch_size", v.to_string()));
        }
        let body = self.post(&url, &query, training_to_csv(data))?;
        serde_json::from_slice(&body).map_err(|e| ScoreError::Malformed(e.to_string()))
    }
}

type BatchResult = Result<Vec<ScoreRecord>, ScoreError>;

impl PairScorer for RemoteScorer {
    /// Sends `batch_size` records per request, at most `max_in_flight` at a time.
    /// Results come back in request order whatever the arrival order.
    fn score(&self, records: &[TextPairRecord]) -> Result<Vec<ScoreRecord>, ScoreError> {
        if records.is_empty() {
            return Ok(Vec::new());
        }
        let batches: Vec<&[TextPairRecord]> =
            records.chunks(self.endpoint.batch_size.max(1)).collect();
        let results: Mutex<Vec<Option<BatchResult>>> =
            Mutex::new((0..batches.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.endpoint.max_in_flight.clamp(1, batches.len());
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(batch) = batches.get(i) else { break };
                    let r = self.score_batch(batch);
                    let failed = r.is_err();
                    results.lock().expect("no panics while holding the lock")[i] = Some(r);
                    if failed {
                        // stop handing out work
                        next.store(batches.len(), Ordering::Relaxed);
                    }
                });
            }
        });
        let mut scores = Vec::with_capacity(records.len());
        for r in results
            .into_inner()
            .expect("workers joined")
            .into_iter()
            .flatten()
        {
            scores.extend(r?);
        }
        check_coverage(records, &scores)?;
        Ok(scores)
    }

    fn name(&self) -> &str {
        "remote"
    }
}

fn transport(url: &str, e: ureq::Error) -> ScoreError {
    match e {
        ureq::Error::Timeout(_) => ScoreError::Timeout {
            url: url.to_string(),
        },
        other => ScoreError::Connection {
            url: url.to_string(),
            message: other.to_string(),
        },
    }
}
