//! HTTP-backed step scorer. Requests go to `POST <url>/v1/score` as JSON and
//! the response supplies per-step scores. Concurrency is capped client-side
//! and transient failures are retried with exponential backoff.

use crate::error::{Error, Result};
use crate::scorers::{ScoreRequest, Scorer, StepScores};
use serde::Deserialize;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

pub const DEFAULT_TIMEOUT_MS: u64 = 1000;
pub const DEFAULT_RETRIES: u32 = 2;
pub const DEFAULT_MAX_INFLIGHT: usize = 8;
pub const DEFAULT_BACKOFF_BASE_MS: u64 = 50;

/// Connection settings for a remote scorer. `retries` counts additional
/// attempts after the first; attempt `k` (0-based) sleeps
/// `backoff_base_ms << k` before retrying.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteScorerConfig {
    pub url: String,
    pub timeout_ms: u64,
    pub retries: u32,
    pub max_inflight: usize,
    pub backoff_base_ms: u64,
}

impl RemoteScorerConfig {
    pub fn new(url: impl Into<String>) -> RemoteScorerConfig {
        RemoteScorerConfig {
            url: url.into(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            retries: DEFAULT_RETRIES,
            max_inflight: DEFAULT_MAX_INFLIGHT,
            backoff_base_ms: DEFAULT_BACKOFF_BASE_MS,
        }
    }
}

struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

struct Permit<'a> {
    semaphore: &'a Semaphore,
}

impl Semaphore {
    fn new(permits: usize) -> Semaphore {
        Semaphore { permits: Mutex::new(permits), available: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        Permit { semaphore: self }
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.semaphore.permits.lock().unwrap() += 1;
        self.semaphore.available.notify_one();
    }
}

#[derive(Deserialize)]
struct RawScoreResponse {
    step_scores: Vec<f64>,
    #[serde(default)]
    solution_score: Option<f64>,
}

/// Scorer that defers to an HTTP service. Safe to share across threads; at
/// most `max_inflight` requests are on the wire at once regardless of how
/// many threads call [`Scorer::score`].
pub struct RemoteScorer {
    config: RemoteScorerConfig,
    endpoint: String,
    client: reqwest::blocking::Client,
    semaphore: Semaphore,
}

impl RemoteScorer {
    pub fn new(config: RemoteScorerConfig) -> Result<RemoteScorer> {
        if config.max_inflight == 0 {
            return Err(Error::bad_parameter("max_inflight", "must be at least 1"));
        }
        if config.url.is_empty() {
            return Err(Error::bad_parameter("url", "must not be empty"));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| Error::RemoteError { message: e.to_string() })?;
        let endpoint = format!("{}/v1/score", config.url.trim_end_matches('/'));
        let semaphore = Semaphore::new(config.max_inflight);
        Ok(RemoteScorer { config, endpoint, client, semaphore })
    }

    fn attempt(&self, body: &serde_json::Value) -> std::result::Result<RawScoreResponse, AttemptError> {
        let response = self
            .client
            .post(&self.endpoint)
            .json(body)
            .send()
            .map_err(|e| {
                if e.is_builder() {
                    AttemptError::fatal(format!("invalid request: {e}"))
                } else {
                    AttemptError::transient(e.to_string())
                }
            })?;
        let status = response.status();
        if status.is_server_error() {
            return Err(AttemptError::transient(format!("server returned {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::fatal(format!("server returned {status}")));
        }
        response
            .json::<RawScoreResponse>()
            .map_err(|e| AttemptError::fatal(format!("bad response body: {e}")))
    }
}

struct AttemptError {
    message: String,
    retryable: bool,
}

impl AttemptError {
    fn transient(message: String) -> AttemptError {
        AttemptError { message, retryable: true }
    }

    fn fatal(message: String) -> AttemptError {
        AttemptError { message, retryable: false }
    }
}

impl Scorer for RemoteScorer {
    fn score(&self, request: &ScoreRequest<'_>) -> Result<StepScores> {
        if request.steps.is_empty() {
            return Err(Error::EmptyInput);
        }
        let _permit = self.semaphore.acquire();
        let body = serde_json::json!({
            "question": request.question,
            "steps": request.steps,
            "language": request.language.code(),
        });

        let mut last_message = String::new();
        let mut attempts = 0;
        for attempt in 0..=self.config.retries {
            attempts += 1;
            match self.attempt(&body) {
                Ok(raw) => {
                    if raw.step_scores.len() != request.steps.len() {
                        return Err(Error::LengthMismatch {
                            expected: request.steps.len(),
                            actual: raw.step_scores.len(),
                        });
                    }
                    for &score in &raw.step_scores {
                        if !(0.0..=1.0).contains(&score) || score.is_nan() {
                            return Err(Error::RemoteError {
                                message: format!("score {score} outside [0, 1]"),
                            });
                        }
                    }
                    return Ok(StepScores::new(raw.step_scores, raw.solution_score));
                }
                Err(error) => {
                    last_message = error.message;
                    if !error.retryable {
                        return Err(Error::RemoteError { message: last_message });
                    }
                    if attempt < self.config.retries {
                        std::thread::sleep(Duration::from_millis(
                            self.config.backoff_base_ms << attempt,
                        ));
                    }
                }
            }
        }
        Err(Error::RemoteError {
            message: format!(
                "{attempts} attempts to {} failed, last error: {last_message}",
                self.endpoint
            ),
        })
    }
}
