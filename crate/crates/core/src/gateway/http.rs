//! Chat-completions client.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Value};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use super::{CompletionRequest, CompletionResult, Gateway, GatewayError, Usage};
use crate::tokens::estimate_tokens;

pub const API_KEY_ENV: &str = "REC_API_KEY";

#[derive(Clone)]
pub struct HttpConfig {
    /// Either the API root (`…/v1`) or the full `…/chat/completions` URL.
    pub base_url: String,
    pub model_name: String,
    pub api_key: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
    pub audit_log: Option<PathBuf>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "http://localhost:8000/v1".into(),
            model_name: "default".into(),
            api_key: None,
            timeout_ms: 120_000,
            max_retries: 3,
            backoff_ms: 500,
            audit_log: None,
        }
    }
}

impl fmt::Debug for HttpConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpConfig")
            .field("base_url", &self.base_url)
            .field("model_name", &self.model_name)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("timeout_ms", &self.timeout_ms)
            .field("max_retries", &self.max_retries)
            .field("backoff_ms", &self.backoff_ms)
            .field("audit_log", &self.audit_log)
            .finish()
    }
}

impl HttpConfig {
    pub fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

#[derive(Serialize)]
struct AuditLine<'a> {
    ts: String,
    prompt_sha256: &'a str,
    /// Final HTTP status, absent when no response arrived.
    status: Option<u16>,
    latency_ms: u64,
    output_tokens: Option<usize>,
    retries: u32,
}

pub struct HttpGateway {
    config: HttpConfig,
    agent: ureq::Agent,
    audit: Option<Mutex<File>>,
}

impl fmt::Debug for HttpGateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpGateway").field("config", &self.config).finish()
    }
}

enum Attempt {
    Done(CompletionResult, u16),
    Retry(GatewayError, Option<u16>),
    Fail(GatewayError, Option<u16>),
}

impl HttpGateway {
    pub fn new(config: HttpConfig) -> std::io::Result<Self> {
        let agent_config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build();
        let audit = match &config.audit_log {
            Some(path) => Some(Mutex::new(OpenOptions::new().create(true).append(true).open(path)?)),
            None => None,
        };
        Ok(HttpGateway {
            agent: ureq::Agent::new_with_config(agent_config),
            config,
            audit,
        })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn body(&self, req: &CompletionRequest) -> Value {
        let mut body = json!({
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        });
        if let Some(seed) = req.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn attempt(&self, req: &CompletionRequest, body: &Value, started: Instant) -> Attempt {
        let mut call = self.agent.post(&self.config.endpoint());
        if let Some(key) = &self.config.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match call.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(GatewayError::transport(e.to_string()), None),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(GatewayError::transport(e.to_string()), Some(status)),
        };
        match status {
            200..=299 => {}
            401 | 403 => return Attempt::Fail(GatewayError::AuthFailure { status }, Some(status)),
            408 | 429 | 500..=599 => {
                return Attempt::Retry(GatewayError::BackendRefusal { status, body: text }, Some(status))
            }
            _ => return Attempt::Fail(GatewayError::BackendRefusal { status, body: text }, Some(status)),
        }
        match parse_reply(&text, req) {
            Ok(mut result) => {
                result.latency_ms = started.elapsed().as_millis() as u64;
                Attempt::Done(result, status)
            }
            Err(e) => Attempt::Fail(e, Some(status)),
        }
    }

    fn audit(&self, line: AuditLine<'_>) {
        if let Some(file) = &self.audit {
            let mut f = file.lock().expect("audit lock");
            let encoded = serde_json::to_string(&line).expect("audit line serializes");
            if let Err(e) = writeln!(f, "{encoded}") {
                log::warn!("audit log write failed: {e}");
            }
        }
    }
}

fn parse_reply(text: &str, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
    let refusal = |why: &str| GatewayError::BackendRefusal {
        status: 200,
        body: format!("{why}: {}", text.chars().take(200).collect::<String>()),
    };
    let v: Value = serde_json::from_str(text).map_err(|_| refusal("response is not JSON"))?;
    let choice = v.pointer("/choices/0").ok_or_else(|| refusal("response has no choices"))?;
    let content = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    let truncated = choice.get("finish_reason").and_then(Value::as_str) == Some("length");
    if content.is_empty() {
        return Err(if truncated {
            GatewayError::Truncated
        } else {
            refusal("empty completion")
        });
    }
    let reported = |key: &str| v.pointer(&format!("/usage/{key}")).and_then(Value::as_u64);
    let usage = match (reported("prompt_tokens"), reported("completion_tokens")) {
        (Some(p), Some(c)) => Usage {
            prompt_tokens: p as usize,
            output_tokens: c as usize,
            estimated: false,
        },
        _ => Usage {
            prompt_tokens: estimate_tokens(&req.prompt),
            output_tokens: estimate_tokens(&content),
            estimated: true,
        },
    };
    Ok(CompletionResult {
        text: content,
        usage,
        latency_ms: 0,
        truncated,
        retries: 0,
    })
}

impl Gateway for HttpGateway {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        req.validate()?;
        let body = self.body(req);
        let sha = req.prompt_sha256();
        let started = Instant::now();
        let mut retries = 0;
        loop {
            let (outcome, status) = match self.attempt(req, &body, started) {
                Attempt::Done(mut r, status) => {
                    r.retries = retries;
                    (Ok(r), Some(status))
                }
                Attempt::Retry(e, _) if retries < self.config.max_retries => {
                    let delay = self.config.backoff_ms.saturating_mul(1 << retries.min(16));
                    log::debug!("attempt {} failed ({e}); retrying in {delay} ms", retries + 1);
                    std::thread::sleep(Duration::from_millis(delay));
                    retries += 1;
                    continue;
                }
                Attempt::Retry(e, status) | Attempt::Fail(e, status) => (Err(e), status),
            };
            self.audit(AuditLine {
                ts: OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default(),
                prompt_sha256: &sha,
                status,
                latency_ms: started.elapsed().as_millis() as u64,
                output_tokens: outcome.as_ref().ok().map(|r| r.usage.output_tokens),
                retries,
            });
            return outcome;
        }
    }
}
