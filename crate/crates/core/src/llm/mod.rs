//! Completion providers: an OpenAI-compatible HTTP client, a replay provider over
//! recorded exchanges, and scripted optimizers that answer in the response grammar.
//!
//! Every call made through [`complete`] is appended verbatim to a [`Transcript`].

mod http;
mod replay;
mod scripted;

use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{backoff_delay, HttpProvider};
pub use replay::{load_exchanges, ReplayProvider};
pub use scripted::{scripted_respond, ScriptedProvider};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("API key variable `{0}` is not set")]
    AuthMissing(String),
    #[error("transport error after {attempts} attempt(s): {message}")]
    TransportError { attempts: u32, message: String },
    #[error("provider returned no completion: {0}")]
    ProviderRefusal(String),
    #[error("request rejected with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("replay exhausted after {0} response(s)")]
    ReplayExhausted(usize),
    #[error("cannot read prompt: {0}")]
    UnparseablePrompt(String),
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    Http,
    Replay,
    Scripted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScriptedStrategy {
    #[default]
    GaussianHillClimb,
    MuPlusLambda,
}

/// How the rendered prompt is split into chat messages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageLayout {
    /// The whole prompt as one user message.
    #[default]
    User,
    /// First paragraph as a system message, the rest as the user message.
    SystemUser,
}

fn default_key_env() -> String {
    "PROPS_API_KEY".into()
}
fn default_retries() -> u32 {
    3
}
fn default_backoff_base() -> f64 {
    1.0
}
fn default_backoff_cap() -> f64 {
    60.0
}
fn default_timeout() -> f64 {
    120.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Name of the environment variable holding the key; never the key itself.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// `None` leaves sampling at the provider default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Seconds.
    #[serde(default = "default_backoff_base")]
    pub backoff_base: f64,
    /// Seconds.
    #[serde(default = "default_backoff_cap")]
    pub backoff_cap: f64,
    /// Seconds, per request.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default)]
    pub layout: MessageLayout,
    #[serde(default)]
    pub scripted_strategy: ScriptedStrategy,
    /// Seed of the scripted strategy; combined with the prompt bytes on each call.
    #[serde(default)]
    pub scripted_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_path: Option<PathBuf>,
}

impl ProviderConfig {
    fn base(kind: ProviderKind) -> Self {
        Self {
            kind,
            base_url: None,
            model: None,
            api_key_env: default_key_env(),
            temperature: None,
            max_retries: default_retries(),
            backoff_base: default_backoff_base(),
            backoff_cap: default_backoff_cap(),
            timeout: default_timeout(),
            layout: MessageLayout::User,
            scripted_strategy: ScriptedStrategy::default(),
            scripted_seed: 0,
            replay_path: None,
        }
    }

    pub fn http(base_url: &str, model: &str) -> Self {
        Self {
            base_url: Some(base_url.into()),
            model: Some(model.into()),
            ..Self::base(ProviderKind::Http)
        }
    }

    pub fn replay(path: impl Into<PathBuf>) -> Self {
        Self {
            replay_path: Some(path.into()),
            ..Self::base(ProviderKind::Replay)
        }
    }

    pub fn scripted(strategy: ScriptedStrategy, seed: u64) -> Self {
        Self {
            scripted_strategy: strategy,
            scripted_seed: seed,
            ..Self::base(ProviderKind::Scripted)
        }
    }

    /// All violations, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        match self.kind {
            ProviderKind::Http => {
                if self.base_url.as_deref().is_none_or(str::is_empty) {
                    v.push("base_url is required for http providers".into());
                }
                if self.model.as_deref().is_none_or(str::is_empty) {
                    v.push("model is required for http providers".into());
                }
            }
            ProviderKind::Replay => {
                if self.replay_path.is_none() {
                    v.push("replay_path is required for replay providers".into());
                }
            }
            ProviderKind::Scripted => {}
        }
        if let Some(t) = self.temperature {
            if !(t.is_finite() && t >= 0.0) {
                v.push(format!("temperature must be a non-negative number, got {t}"));
            }
        }
        for (name, x) in [
            ("backoff_base", self.backoff_base),
            ("backoff_cap", self.backoff_cap),
            ("timeout", self.timeout),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                v.push(format!("{name} must be a non-negative number of seconds, got {x}"));
            }
        }
        if self.api_key_env.is_empty() {
            v.push("api_key_env must not be empty".into());
        }
        v
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(LlmError::InvalidConfig(v.join("; ")))
        }
    }
}

/// One prompt/response pair, stored byte-for-byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub prompt: String,
    pub response: String,
    /// Seconds.
    pub latency: f64,
    /// 1 for a first-try success.
    pub attempt: u32,
}

/// Append-only exchange log owned by one trial.
#[derive(Debug, Default)]
pub struct Transcript {
    entries: Mutex<Vec<Exchange>>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, exchange: Exchange) {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).push(exchange);
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<Exchange> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// JSON lines, one exchange per line; the replay file format.
    pub fn to_jsonl(&self) -> String {
        self.snapshot()
            .iter()
            .map(|e| serde_json::to_string(e).expect("plain data") + "\n")
            .collect()
    }
}

/// Completion text plus the attempt that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Completion {
    pub text: String,
    pub attempt: u32,
}

pub trait Provider: Send + Sync {
    fn call(&self, prompt: &str) -> Result<Completion, LlmError>;
}

pub fn build_provider(config: &ProviderConfig) -> Result<Box<dyn Provider>, LlmError> {
    config.validate()?;
    Ok(match config.kind {
        ProviderKind::Http => Box::new(HttpProvider::from_config(config)?),
        ProviderKind::Replay => Box::new(ReplayProvider::open(
            config.replay_path.as_ref().expect("validated"),
        )?),
        ProviderKind::Scripted => Box::new(ScriptedProvider::new(
            config.scripted_strategy,
            config.scripted_seed,
        )),
    })
}

/// Calls `provider` and logs the exchange on success.
pub fn complete(
    provider: &dyn Provider,
    prompt: &str,
    transcript: &Transcript,
) -> Result<String, LlmError> {
    let start = Instant::now();
    let c = provider.call(prompt)?;
    transcript.push(Exchange {
        prompt: prompt.to_string(),
        response: c.text.clone(),
        latency: start.elapsed().as_secs_f64(),
        attempt: c.attempt,
    });
    Ok(c.text)
}

fn seconds(x: f64) -> Duration {
    Duration::from_secs_f64(x.max(0.0))
}
