//! Chat-completion client with bounded exponential backoff on transport faults.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Endpoint settings. The API key is never stored in config, only the name of
/// the environment variable holding it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub temperature: f64,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self { temperature: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct TransportFault {
    pub status: Option<u16>,
    pub message: String,
}

impl TransportFault {
    /// Client errors other than rate limiting will not improve on retry.
    pub fn is_retryable(&self) -> bool {
        match self.status {
            Some(429) => true,
            Some(s) => !(400..500).contains(&s),
            None => true,
        }
    }
}

/// Posts a JSON body and returns the decoded JSON response.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<Value, TransportFault>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build();
        Self {
            agent: config.into(),
        }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(120))
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<Value, TransportFault> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = bearer {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body.to_string()).map_err(|e| match e {
            ureq::Error::StatusCode(code) => TransportFault {
                status: Some(code),
                message: format!("HTTP {code}"),
            },
            other => TransportFault {
                status: None,
                message: other.to_string(),
            },
        })?;
        let text = resp.body_mut().read_to_string().map_err(|e| TransportFault {
            status: None,
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| TransportFault {
            status: None,
            message: format!("response is not JSON: {e}"),
        })
    }
}

/// Total tries per call and the delay before the first retry; the delay
/// doubles on every further retry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, retry: u32) -> Duration {
        self.base_delay
            .saturating_mul(1u32 << retry.saturating_sub(1).min(16))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("transport failed after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: TransportFault },
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("environment variable {0} holding the API key is not set")]
    MissingKey(String),
}

impl From<LlmError> for sdp_core::OperatorError {
    fn from(e: LlmError) -> Self {
        sdp_core::OperatorError::Transport(e.to_string())
    }
}

#[derive(Clone)]
pub struct ChatClient {
    transport: Arc<dyn Transport>,
    endpoint: String,
    model: String,
    api_key: Option<String>,
    retry: RetryPolicy,
    sleep: fn(Duration),
}

impl ChatClient {
    pub fn new(transport: Arc<dyn Transport>, endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            transport,
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            retry: RetryPolicy::default(),
            sleep: std::thread::sleep,
        }
    }

    /// Builds an HTTP client, reading the key from the named variable.
    pub fn from_config(config: &LlmConfig) -> Result<Self, LlmError> {
        let key = std::env::var(&config.api_key_env)
            .map_err(|_| LlmError::MissingKey(config.api_key_env.clone()))?;
        Ok(Self::new(Arc::new(HttpTransport::default()), &config.endpoint, &config.model).with_api_key(key))
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_sleep(mut self, sleep: fn(Duration)) -> Self {
        self.sleep = sleep;
        self
    }

    pub fn request_body(&self, messages: &[ChatMessage], params: DecodeParams) -> Value {
        json!({
            "model": self.model,
            "messages": messages,
            "temperature": params.temperature,
            "response_format": { "type": "json_object" },
        })
    }

    /// One completion. Transport faults are retried per the retry policy;
    /// a malformed body is returned as is, without retry.
    pub fn complete(&self, messages: &[ChatMessage], params: DecodeParams) -> Result<String, LlmError> {
        let body = self.request_body(messages, params);
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            match self
                .transport
                .post_json(&self.endpoint, self.api_key.as_deref(), &body)
            {
                Ok(resp) => return extract_content(&resp),
                Err(fault) => {
                    if !fault.is_retryable() || attempt >= self.retry.max_attempts {
                        return Err(LlmError::Transport {
                            attempts: attempt,
                            last: fault,
                        });
                    }
                    (self.sleep)(self.retry.delay_before(attempt));
                }
            }
        }
    }

    /// Convenience wrapper: one zero-shot user prompt at temperature 0.
    pub fn ask(&self, prompt: &str) -> Result<String, LlmError> {
        self.complete(&[ChatMessage::user(prompt)], DecodeParams::default())
    }
}

fn extract_content(resp: &Value) -> Result<String, LlmError> {
    resp.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| LlmError::MalformedResponse(resp.to_string()))
}

mod replay {
    use std::collections::VecDeque;
    use std::sync::Mutex;

    use super::*;

    /// Offline transport that replays canned completions (`Ok`) or HTTP
    /// status failures (`Err`) in order and records every request body.
    #[derive(Default)]
    pub struct ReplayTransport {
        replies: Mutex<VecDeque<Result<String, u16>>>,
        requests: Mutex<Vec<Value>>,
    }

    impl ReplayTransport {
        pub fn new(replies: impl IntoIterator<Item = Result<String, u16>>) -> Arc<Self> {
            Arc::new(Self {
                replies: Mutex::new(replies.into_iter().collect()),
                requests: Mutex::new(Vec::new()),
            })
        }

        pub fn requests(&self) -> Vec<Value> {
            self.requests.lock().unwrap().clone()
        }

        /// User-message text of every recorded request.
        pub fn prompts(&self) -> Vec<String> {
            self.requests()
                .iter()
                .filter_map(|r| r.pointer("/messages/0/content").and_then(Value::as_str).map(str::to_string))
                .collect()
        }
    }

    impl Transport for ReplayTransport {
        fn post_json(&self, _url: &str, _bearer: Option<&str>, body: &Value) -> Result<Value, TransportFault> {
            self.requests.lock().unwrap().push(body.clone());
            match self.replies.lock().unwrap().pop_front() {
                Some(Ok(content)) => Ok(json!({"choices": [{"message": {"role": "assistant", "content": content}}]})),
                Some(Err(code)) => Err(TransportFault {
                    status: Some(code),
                    message: format!("HTTP {code}"),
                }),
                None => Err(TransportFault {
                    status: None,
                    message: "no replies left".into(),
                }),
            }
        }
    }
}

pub use replay::ReplayTransport;

/// Client over a [`ReplayTransport`] that never sleeps between retries.
pub fn replay_client(t: Arc<ReplayTransport>) -> ChatClient {
    ChatClient::new(t, "http://replay.invalid/v1/chat/completions", "replay-model").with_sleep(|_| {})
}
