use std::time::Duration;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{retryable_status, Attempted, ConcurrencyLimit, Failure, RetryPolicy};

pub const API_KEY_ENV: &str = "MP2D_API_KEY";
pub const BASE_URL_ENV: &str = "MP2D_BASE_URL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

#[derive(Debug, Error)]
pub enum ChatError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("empty completion")]
    Empty,
}

#[derive(Debug, Clone)]
pub struct ChatConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub model: String,
    pub api_key: String,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl ChatConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: api_key.into(),
            timeout: Duration::from_secs(60),
            retry: RetryPolicy::default(),
            max_in_flight: 4,
        }
    }

    /// Reads the key from `MP2D_API_KEY` and the base URL from
    /// `MP2D_BASE_URL` (falling back to the public default).
    pub fn from_env(model: impl Into<String>) -> Option<Self> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty())?;
        let base = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        Some(Self::new(base, model, key))
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
    temperature: f32,
    n: u32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Option<ChoiceMessage>,
    text: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

/// Blocking chat-completion client, safe to share across threads.
pub struct ChatClient {
    http: Client,
    config: ChatConfig,
    limit: ConcurrencyLimit,
}

impl ChatClient {
    pub fn new(config: ChatConfig) -> Result<Self, ChatError> {
        let http = Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ChatError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self {
            http,
            limit: ConcurrencyLimit::new(config.max_in_flight),
            config,
        })
    }

    pub fn config(&self) -> &ChatConfig {
        &self.config
    }

    /// Sends `prompt` as a single user message at temperature 0 and returns
    /// the first choice, trimmed.
    pub fn complete(&self, prompt: &str) -> Result<String, ChatError> {
        let body = CompletionRequest {
            model: &self.config.model,
            messages: [Message {
                role: "user",
                content: prompt,
            }],
            temperature: 0.0,
            n: 1,
        };
        let endpoint = self.config.endpoint();
        let resp: CompletionResponse = self
            .config
            .retry
            .run(|_| {
                let _permit = self.limit.acquire();
                let resp = self
                    .http
                    .post(&endpoint)
                    .bearer_auth(&self.config.api_key)
                    .json(&body)
                    .send()
                    .map_err(|e| Failure::Retryable(e.to_string()))?;
                let status = resp.status();
                if !status.is_success() {
                    let msg = format!("HTTP {status}");
                    return Err(if retryable_status(status) {
                        Failure::Retryable(msg)
                    } else {
                        Failure::Fatal(msg)
                    });
                }
                resp.json::<CompletionResponse>()
                    .map_err(|e| Failure::Retryable(format!("invalid response body: {e}")))
            })
            .map_err(|Attempted { attempts, error }| ChatError::Transport {
                attempts,
                message: error,
            })?;

        let text = resp
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.and_then(|m| m.content).or(c.text))
            .unwrap_or_default();
        let text = text.trim();
        if text.is_empty() {
            return Err(ChatError::Empty);
        }
        Ok(text.to_string())
    }
}
