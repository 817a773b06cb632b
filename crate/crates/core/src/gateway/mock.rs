//! Scripted offline backend.
//!
//! A script is a list of rules tried in order. A rule matches when every
//! condition it sets holds (`contains` substring, `prompt_sha256`). Its
//! `replies` are served one per call for the same prompt, the last one
//! repeating, so a rule can fail once and then succeed. Unmatched requests
//! get `fallback`.
//!
//! ```json
//! {"seed": 1, "latency_ms": [0, 5],
//!  "rules": [{"contains": "gift", "replies": [{"error": "transport"}, "{\"answer\": \"Yes\"}"]}],
//!  "fallback": {"builtin": "always-first"}}
//! ```

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer};

use super::{prompt_sha256, CompletionRequest, CompletionResult, Gateway, GatewayError, Usage};
use crate::tokens::estimate_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// Always answers `Output (a)`.
    AlwaysFirst,
    /// Always answers `Output (b)`.
    AlwaysSecond,
    /// Picks the longer of the two outputs; ties are broken by the seed.
    PreferLonger,
    /// Returns the prompt unchanged.
    Echo,
}

impl Builtin {
    fn parse(name: &str) -> Option<Builtin> {
        serde_json::from_value(serde_json::Value::String(name.to_string())).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MockReply {
    Text(String),
    Builtin {
        builtin: Builtin,
    },
    Fault {
        error: String,
        #[serde(default)]
        message: Option<String>,
    },
    Full {
        text: String,
        #[serde(default)]
        truncated: bool,
        #[serde(default)]
        latency_ms: Option<u64>,
    },
}

impl MockReply {
    pub fn fault(kind: &str) -> Self {
        MockReply::Fault {
            error: kind.to_string(),
            message: None,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<MockReply>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<MockReply>),
        One(MockReply),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::Many(v) => v,
        OneOrMany::One(r) => vec![r],
    })
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    #[serde(default)]
    pub contains: Option<String>,
    #[serde(default)]
    pub prompt_sha256: Option<String>,
    #[serde(alias = "reply", deserialize_with = "one_or_many")]
    pub replies: Vec<MockReply>,
}

impl MockRule {
    fn matches(&self, req: &CompletionRequest, sha: &str) -> bool {
        self.contains.as_deref().is_none_or(|c| req.prompt.contains(c))
            && self.prompt_sha256.as_deref().is_none_or(|h| h.eq_ignore_ascii_case(sha))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub seed: u64,
    /// Inclusive range each call sleeps for, unless the reply sets its own.
    #[serde(default)]
    pub latency_ms: Option<(u64, u64)>,
    #[serde(default)]
    pub rules: Vec<MockRule>,
    #[serde(default)]
    pub fallback: Option<MockReply>,
}

#[derive(Debug, Default)]
pub struct MockGateway {
    script: MockScript,
    /// Calls served so far per (rule, prompt hash).
    served: Mutex<HashMap<(usize, String), usize>>,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    calls: AtomicUsize,
}

impl MockGateway {
    pub fn new(script: MockScript) -> Self {
        MockGateway {
            script,
            ..MockGateway::default()
        }
    }

    pub fn builtin(builtin: Builtin, seed: u64) -> Self {
        MockGateway::new(MockScript {
            seed,
            fallback: Some(MockReply::Builtin { builtin }),
            ..MockScript::default()
        })
    }

    /// Echoes every prompt after a seeded latency drawn from `latency_ms`.
    pub fn echo(seed: u64, latency_ms: (u64, u64)) -> Self {
        MockGateway::new(MockScript {
            seed,
            latency_ms: Some(latency_ms),
            fallback: Some(MockReply::Builtin {
                builtin: Builtin::Echo,
            }),
            ..MockScript::default()
        })
    }

    /// A builtin name (`always-first`, `always-second`, `prefer-longer`,
    /// `echo`) or the path of a JSON script.
    pub fn from_spec(spec: &str, seed: u64) -> Result<Self, String> {
        if let Some(b) = Builtin::parse(spec) {
            return Ok(MockGateway::builtin(b, seed));
        }
        let path = Path::new(spec);
        let raw = std::fs::read_to_string(path)
            .map_err(|e| format!("mock script {}: {e}", path.display()))?;
        let mut script: MockScript =
            serde_json::from_str(&raw).map_err(|e| format!("mock script {}: {e}", path.display()))?;
        if script.seed == 0 {
            script.seed = seed;
        }
        Ok(MockGateway::new(script))
    }

    /// Highest number of concurrent calls observed.
    pub fn peak_in_flight(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn rng(&self, req: &CompletionRequest, sha: &str) -> ChaCha8Rng {
        let prefix = u64::from_str_radix(&sha[..16], 16).expect("hex digest");
        ChaCha8Rng::seed_from_u64(self.script.seed ^ req.seed.unwrap_or(0) ^ prefix)
    }

    fn pick(&self, req: &CompletionRequest, sha: &str) -> Option<MockReply> {
        for (i, rule) in self.script.rules.iter().enumerate() {
            if rule.matches(req, sha) && !rule.replies.is_empty() {
                let mut served = self.served.lock().expect("mock lock");
                let n = served.entry((i, sha.to_string())).or_insert(0);
                let reply = rule.replies[(*n).min(rule.replies.len() - 1)].clone();
                *n += 1;
                return Some(reply);
            }
        }
        self.script.fallback.clone()
    }

    fn respond(&self, req: &CompletionRequest, sha: &str) -> Result<CompletionResult, GatewayError> {
        let mut rng = self.rng(req, sha);
        let reply = self.pick(req, sha).ok_or_else(|| GatewayError::BackendRefusal {
            status: 404,
            body: "mock script has no reply for this prompt".into(),
        })?;
        let mut latency = self.script.latency_ms.map(|(lo, hi)| rng.random_range(lo..=hi.max(lo)));
        let (text, truncated) = match reply {
            MockReply::Text(t) => (t, false),
            MockReply::Full {
                text,
                truncated,
                latency_ms,
            } => {
                latency = latency_ms.or(latency);
                (text, truncated)
            }
            MockReply::Builtin { builtin } => (builtin_reply(builtin, req, &mut rng), false),
            MockReply::Fault { error, message } => {
                return Err(fault(&error, message));
            }
        };
        if let Some(ms) = latency {
            std::thread::sleep(Duration::from_millis(ms));
        }
        if text.is_empty() && truncated {
            return Err(GatewayError::Truncated);
        }
        Ok(CompletionResult {
            usage: Usage {
                prompt_tokens: estimate_tokens(&req.prompt),
                output_tokens: estimate_tokens(&text),
                estimated: true,
            },
            text,
            latency_ms: latency.unwrap_or(0),
            truncated,
            retries: 0,
        })
    }
}

fn fault(kind: &str, message: Option<String>) -> GatewayError {
    match kind {
        "auth" => GatewayError::AuthFailure { status: 401 },
        "truncated" => GatewayError::Truncated,
        "cancelled" => GatewayError::Cancelled,
        "refusal" => GatewayError::BackendRefusal {
            status: 400,
            body: message.unwrap_or_else(|| "refused".into()),
        },
        _ => GatewayError::transport(message.unwrap_or_else(|| format!("scripted {kind} fault"))),
    }
}

/// The two candidate outputs of a pairwise prompt, from its slots or, failing
/// that, from the section headers in the text.
fn pairwise_outputs(req: &CompletionRequest) -> Option<(String, String)> {
    if let (Some(a), Some(b)) = (req.slots.get("output_a"), req.slots.get("output_b")) {
        return Some((a.clone(), b.clone()));
    }
    let (_, rest) = req.prompt.split_once("# Output (a):\n")?;
    let (a, rest) = rest.split_once("\n\n# Output (b):\n")?;
    let (b, _) = rest.rsplit_once("\n\n# Which is better")?;
    Some((a.to_string(), b.to_string()))
}

fn builtin_reply(builtin: Builtin, req: &CompletionRequest, rng: &mut ChaCha8Rng) -> String {
    const FIRST: &str = "Output (a)";
    const SECOND: &str = "Output (b)";
    match builtin {
        Builtin::AlwaysFirst => FIRST.into(),
        Builtin::AlwaysSecond => SECOND.into(),
        Builtin::Echo => req.prompt.clone(),
        Builtin::PreferLonger => match pairwise_outputs(req) {
            Some((a, b)) => {
                let (la, lb) = (a.chars().count(), b.chars().count());
                let first = if la == lb { rng.random::<bool>() } else { la > lb };
                if first { FIRST } else { SECOND }.into()
            }
            None => "Unable to compare.".into(),
        },
    }
}

struct InFlight<'a>(&'a AtomicUsize);

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

impl Gateway for MockGateway {
    fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, GatewayError> {
        req.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        let _guard = InFlight(&self.in_flight);
        self.peak.fetch_max(now, Ordering::SeqCst);
        let started = Instant::now();
        let sha = prompt_sha256(&req.prompt);
        let mut result = self.respond(req, &sha)?;
        if result.latency_ms == 0 {
            result.latency_ms = started.elapsed().as_millis() as u64;
        }
        Ok(result)
    }
}
