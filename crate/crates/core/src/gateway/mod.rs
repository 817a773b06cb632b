//! Completion backends.
//!
//! [`HttpGateway`] talks to any chat-completions endpoint; [`MockGateway`]
//! replays a script so everything above it runs offline.

mod batch;
mod http;
mod mock;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompt::PromptText;

pub use batch::complete_batch;
pub use http::{HttpConfig, HttpGateway, API_KEY_ENV};
pub use mock::{Builtin, MockGateway, MockReply, MockRule, MockScript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    /// Slot values the prompt was built from. Backends may ignore them; the
    /// mock uses them for content-aware replies.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub slots: BTreeMap<String, String>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2048;

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            slots: BTreeMap::new(),
            temperature: 0.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            seed: None,
        }
    }

    pub fn from_prompt(prompt: &PromptText) -> Self {
        CompletionRequest {
            slots: prompt.slots_filled.clone(),
            ..CompletionRequest::new(prompt.text.clone())
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_output_tokens(mut self, n: u32) -> Self {
        self.max_output_tokens = n;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_output_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_output_tokens must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GatewayError::InvalidRequest("temperature must be a finite value >= 0".into()));
        }
        Ok(())
    }

    pub fn prompt_sha256(&self) -> String {
        prompt_sha256(&self.prompt)
    }
}

pub fn prompt_sha256(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: usize,
    pub output_tokens: usize,
    /// Counts came from the estimator rather than the backend.
    pub estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub usage: Usage,
    pub latency_ms: u64,
    /// The backend stopped at the output limit.
    pub truncated: bool,
    /// Transient failures retried before this result.
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GatewayError {
    #[error("transport error: {message}")]
    Transport { message: String },
    #[error("authentication rejected (HTTP {status})")]
    AuthFailure { status: u16 },
    #[error("backend refused the request (HTTP {status}): {body}")]
    BackendRefusal { status: u16, body: String },
    #[error("completion truncated before any text was produced")]
    Truncated,
    #[error("cancelled")]
    Cancelled,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl GatewayError {
    pub fn transport(message: impl Into<String>) -> Self {
        GatewayError::Transport {
            message: message.into(),
        }
    }
}

/// A completion backend. Implementations are shared across batch workers.
pub trait Gateway: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError>;
}

impl<G: Gateway + ?Sized> Gateway for Box<G> {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        (**self).complete(req)
    }
}

impl<G: Gateway + ?Sized> Gateway for &G {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        (**self).complete(req)
    }
}
