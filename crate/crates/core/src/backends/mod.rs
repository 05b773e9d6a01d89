//! The model-inference boundary.
//!
//! A backend answers one question: given a prompt (token ids) and a set of
//! candidate next tokens, what raw logit does the model assign to each
//! candidate? Constrained sampling and throughput measurement are both built
//! on that single call.

mod http;
mod mock;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::TokenId;

pub use http::{http_scores, HttpBackend, HttpBackendConfig, BACKEND_URL_ENV, LOGITS_PATH};
pub use mock::{mock_scores, MockBackend, MockBackendConfig, MockMode, ScriptEntry};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("scripted backend has no entry for prompt hash {prompt_hash:#018x}, candidate {candidate}")]
    ScriptMiss { prompt_hash: u64, candidate: TokenId },
    #[error("{endpoint}: HTTP {status}: {body}")]
    Status {
        endpoint: String,
        status: u16,
        body: String,
    },
    #[error("{endpoint}: request timed out")]
    Timeout { endpoint: String },
    #[error("{endpoint}: transport error: {message}")]
    Transport { endpoint: String, message: String },
    #[error("{endpoint}: malformed response: {message}")]
    Malformed { endpoint: String, message: String },
    #[error("backend returned {got} scores for {expected} candidates")]
    LengthMismatch { expected: usize, got: usize },
    #[error("backend returned non-finite score {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("invalid backend config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub name: String,
    pub max_context: usize,
    pub supports_chat: bool,
}

pub trait ModelBackend: Send + Sync {
    /// Raw logits for each candidate, aligned with `candidate_ids`.
    fn next_token_scores(
        &self,
        prompt_ids: &[TokenId],
        candidate_ids: &[TokenId],
    ) -> Result<Vec<f64>, BackendError>;

    fn info(&self) -> BackendInfo;

    /// One forward pass over `ids` with no candidates scored.
    fn forward(&self, ids: &[TokenId]) -> Result<(), BackendError> {
        self.next_token_scores(ids, &[]).map(|_| ())
    }
}

impl<B: ModelBackend + ?Sized> ModelBackend for &B {
    fn next_token_scores(&self, p: &[TokenId], c: &[TokenId]) -> Result<Vec<f64>, BackendError> {
        (**self).next_token_scores(p, c)
    }
    fn info(&self) -> BackendInfo {
        (**self).info()
    }
    fn forward(&self, ids: &[TokenId]) -> Result<(), BackendError> {
        (**self).forward(ids)
    }
}

impl<B: ModelBackend + ?Sized> ModelBackend for Box<B> {
    fn next_token_scores(&self, p: &[TokenId], c: &[TokenId]) -> Result<Vec<f64>, BackendError> {
        (**self).next_token_scores(p, c)
    }
    fn info(&self) -> BackendInfo {
        (**self).info()
    }
    fn forward(&self, ids: &[TokenId]) -> Result<(), BackendError> {
        (**self).forward(ids)
    }
}

impl<B: ModelBackend + ?Sized> ModelBackend for Arc<B> {
    fn next_token_scores(&self, p: &[TokenId], c: &[TokenId]) -> Result<Vec<f64>, BackendError> {
        (**self).next_token_scores(p, c)
    }
    fn info(&self) -> BackendInfo {
        (**self).info()
    }
    fn forward(&self, ids: &[TokenId]) -> Result<(), BackendError> {
        (**self).forward(ids)
    }
}

/// Enforce the score contract: one finite value per candidate.
pub fn check_scores(scores: &[f64], expected: usize) -> Result<(), BackendError> {
    if scores.len() != expected {
        return Err(BackendError::LengthMismatch {
            expected,
            got: scores.len(),
        });
    }
    match scores.iter().position(|s| !s.is_finite()) {
        Some(index) => Err(BackendError::NonFinite {
            index,
            value: scores[index],
        }),
        None => Ok(()),
    }
}
