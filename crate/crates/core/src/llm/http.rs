//! OpenAI-compatible `/chat/completions` client with retry and jittered backoff.

use std::time::Duration;

use rand::Rng;
use serde_json::{json, Value};

use super::{seconds, Completion, LlmError, MessageLayout, Provider, ProviderConfig};

#[derive(Debug)]
pub struct HttpProvider {
    agent: ureq::Agent,
    url: String,
    model: String,
    api_key: String,
    temperature: Option<f64>,
    layout: MessageLayout,
    max_retries: u32,
    backoff_base: f64,
    backoff_cap: f64,
}

/// Delay before retry `retry` (0-based): `min(cap, base * 2^retry)` scaled by a
/// uniform factor in `[0.5, 1]`.
pub fn backoff_delay(base: f64, cap: f64, retry: u32, jitter: f64) -> Duration {
    let raw = (base * 2f64.powi(retry.min(62) as i32)).min(cap);
    seconds(raw * (0.5 + 0.5 * jitter.clamp(0.0, 1.0)))
}

enum Failure {
    Retriable(String),
    Fatal(LlmError),
}

impl HttpProvider {
    /// Reads the key from `config.api_key_env`.
    pub fn from_config(config: &ProviderConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| LlmError::AuthMissing(config.api_key_env.clone()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(seconds(config.timeout)))
            .http_status_as_error(false)
            .build()
            .into();
        let base = config.base_url.as_deref().expect("validated");
        Ok(Self {
            agent,
            url: format!("{}/chat/completions", base.trim_end_matches('/')),
            model: config.model.clone().expect("validated"),
            api_key,
            temperature: config.temperature,
            layout: config.layout,
            max_retries: config.max_retries,
            backoff_base: config.backoff_base,
            backoff_cap: config.backoff_cap,
        })
    }

    fn body(&self, prompt: &str) -> Value {
        let messages = match self.layout {
            MessageLayout::User => json!([{ "role": "user", "content": prompt }]),
            MessageLayout::SystemUser => {
                let (system, user) = prompt.split_once("\n\n").unwrap_or((prompt, ""));
                json!([
                    { "role": "system", "content": system },
                    { "role": "user", "content": user },
                ])
            }
        };
        let mut body = json!({ "model": self.model, "messages": messages });
        if let Some(t) = self.temperature {
            body["temperature"] = json!(t);
        }
        body
    }

    fn attempt(&self, body: &Value) -> Result<String, Failure> {
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| Failure::Retriable(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Retriable(format!("reading body: {e}")))?;
        if status == 429 || status >= 500 {
            return Err(Failure::Retriable(format!("status {status}")));
        }
        if !(200..300).contains(&status) {
            return Err(Failure::Fatal(LlmError::Rejected { status, body: text }));
        }
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(LlmError::ProviderRefusal(format!("malformed body: {e}"))))?;
        match v.pointer("/choices/0/message/content").and_then(Value::as_str) {
            Some(s) if !s.trim().is_empty() => Ok(s.to_string()),
            _ => Err(Failure::Fatal(LlmError::ProviderRefusal(
                "empty or missing choices[0].message.content".into(),
            ))),
        }
    }
}

impl Provider for HttpProvider {
    fn call(&self, prompt: &str) -> Result<Completion, LlmError> {
        let body = self.body(prompt);
        let mut rng = rand::rng();
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.attempt(&body) {
                Ok(text) => return Ok(Completion { text, attempt }),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retriable(message)) => {
                    if attempt > self.max_retries {
                        return Err(LlmError::TransportError { attempts: attempt, message });
                    }
                    std::thread::sleep(backoff_delay(
                        self.backoff_base,
                        self.backoff_cap,
                        attempt - 1,
                        rng.random(),
                    ));
                }
            }
        }
    }
}
