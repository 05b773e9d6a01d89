use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{check_scores, BackendError, BackendInfo, ModelBackend};
use crate::tokenizer::TokenId;

/// Environment variable holding the default server base URL.
pub const BACKEND_URL_ENV: &str = "CORPUSGATE_BACKEND_URL";
pub const LOGITS_PATH: &str = "/v1/next_token_logits";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpBackendConfig {
    /// Server base URL; [`LOGITS_PATH`] is appended unless already present.
    pub base_url: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    pub bearer_token: Option<String>,
    pub max_context: usize,
    pub supports_chat: bool,
    pub name: Option<String>,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        Self {
            base_url: String::new(),
            timeout_ms: 60_000,
            max_in_flight: 4,
            bearer_token: None,
            max_context: 8192,
            supports_chat: false,
            name: None,
        }
    }
}

impl HttpBackendConfig {
    pub fn from_env() -> Option<Self> {
        std::env::var(BACKEND_URL_ENV).ok().map(|base_url| Self {
            base_url,
            ..Self::default()
        })
    }

    pub fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with(LOGITS_PATH) {
            base.to_string()
        } else {
            format!("{base}{LOGITS_PATH}")
        }
    }
}

#[derive(Serialize)]
struct LogitsRequest<'a> {
    prompt_token_ids: &'a [TokenId],
    candidate_token_ids: &'a [TokenId],
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct InFlight {
    count: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.count.lock().expect("in-flight lock");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("in-flight lock");
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.count.lock().expect("in-flight lock") -= 1;
        self.0.freed.notify_one();
    }
}

/// Client for the `next_token_logits` wire protocol. Requests are never
/// retried: a failed call surfaces as an error instead of a silent resample.
#[derive(Debug)]
pub struct HttpBackend {
    endpoint: String,
    agent: ureq::Agent,
    bearer: Option<String>,
    in_flight: InFlight,
    info: BackendInfo,
}

impl HttpBackend {
    pub fn new(cfg: HttpBackendConfig) -> Result<Self, BackendError> {
        if cfg.base_url.is_empty() {
            return Err(BackendError::Config(format!(
                "no backend URL given (set {BACKEND_URL_ENV} or pass one explicitly)"
            )));
        }
        if cfg.max_in_flight == 0 {
            return Err(BackendError::Config("max_in_flight must be at least 1".into()));
        }
        let endpoint = cfg.endpoint();
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build();
        Ok(Self {
            info: BackendInfo {
                name: cfg.name.clone().unwrap_or_else(|| cfg.base_url.clone()),
                max_context: cfg.max_context,
                supports_chat: cfg.supports_chat,
            },
            endpoint,
            agent,
            bearer: cfg.bearer_token,
            in_flight: InFlight {
                count: Mutex::new(0),
                freed: Condvar::new(),
                limit: cfg.max_in_flight,
            },
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn map_transport(&self, err: ureq::Error) -> BackendError {
        let endpoint = self.endpoint.clone();
        match err {
            ureq::Error::Status(status, resp) => BackendError::Status {
                endpoint,
                status,
                body: resp.into_string().unwrap_or_default(),
            },
            ureq::Error::Transport(t) => {
                if is_timeout(&t) {
                    BackendError::Timeout { endpoint }
                } else {
                    // ureq prefixes the URL, which the error already names
                    let message = t.to_string();
                    let message = match message.strip_prefix(&format!("{endpoint}: ")) {
                        Some(rest) => rest.to_string(),
                        None => message,
                    };
                    BackendError::Transport { endpoint, message }
                }
            }
        }
    }
}

fn is_timeout(t: &ureq::Transport) -> bool {
    let mut source: Option<&(dyn std::error::Error + 'static)> = std::error::Error::source(t);
    while let Some(e) = source {
        if let Some(io) = e.downcast_ref::<std::io::Error>() {
            if matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) {
                return true;
            }
        }
        source = e.source();
    }
    t.to_string().contains("timed out")
}

impl ModelBackend for HttpBackend {
    fn next_token_scores(
        &self,
        prompt_ids: &[TokenId],
        candidate_ids: &[TokenId],
    ) -> Result<Vec<f64>, BackendError> {
        let _permit = self.in_flight.acquire();
        let body = serde_json::to_string(&LogitsRequest {
            prompt_token_ids: prompt_ids,
            candidate_token_ids: candidate_ids,
        })
        .expect("request serializes");
        let mut req = self
            .agent
            .post(&self.endpoint)
            .set("Content-Type", "application/json; charset=utf-8");
        if let Some(token) = &self.bearer {
            req = req.set("Authorization", &format!("Bearer {token}"));
        }
        let resp = req.send_string(&body).map_err(|e| self.map_transport(e))?;
        let text = resp.into_string().map_err(|e| {
            if matches!(e.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) {
                BackendError::Timeout {
                    endpoint: self.endpoint.clone(),
                }
            } else {
                BackendError::Transport {
                    endpoint: self.endpoint.clone(),
                    message: e.to_string(),
                }
            }
        })?;
        let scores = parse_logits(&text).map_err(|message| BackendError::Malformed {
            endpoint: self.endpoint.clone(),
            message,
        })?;
        check_scores(&scores, candidate_ids.len())?;
        Ok(scores)
    }

    fn info(&self) -> BackendInfo {
        self.info.clone()
    }
}

fn parse_logits(text: &str) -> Result<Vec<f64>, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let logits = value
        .get("logits")
        .and_then(Value::as_array)
        .ok_or_else(|| "missing \"logits\" array".to_string())?;
    logits
        .iter()
        .enumerate()
        .map(|(i, v)| v.as_f64().ok_or_else(|| format!("logits[{i}] is not a number")))
        .collect()
}

/// One-shot request against `endpoint`.
pub fn http_scores(
    endpoint: &str,
    prompt_ids: &[TokenId],
    candidate_ids: &[TokenId],
    timeout: Duration,
) -> Result<Vec<f64>, BackendError> {
    HttpBackend::new(HttpBackendConfig {
        base_url: endpoint.to_string(),
        timeout_ms: timeout.as_millis().max(1) as u64,
        ..HttpBackendConfig::default()
    })?
    .next_token_scores(prompt_ids, candidate_ids)
}
