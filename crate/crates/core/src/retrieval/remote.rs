use std::sync::Arc;
use std::time::Duration;

use reqwest::blocking::Client;
use serde_json::Value;

use super::{Passage, RetrievalError, Retriever, RuleSegmenter, SentenceSegmenter};
use crate::http::{retryable_status, Attempted, ConcurrencyLimit, Failure, RetryPolicy};

#[derive(Debug, Clone)]
pub struct WikiConfig {
    /// MediaWiki-style `api.php` endpoint.
    pub base_url: String,
    pub timeout: Duration,
    pub user_agent: String,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl Default for WikiConfig {
    fn default() -> Self {
        Self {
            base_url: "https://en.wikipedia.org/w/api.php".into(),
            timeout: Duration::from_secs(10),
            user_agent: concat!("dialogwalk/", env!("CARGO_PKG_VERSION")).into(),
            retry: RetryPolicy::default(),
            max_in_flight: 4,
        }
    }
}

/// Retrieves the lead extract of the first search hit for a query.
pub struct WikiRetriever {
    client: Client,
    config: WikiConfig,
    limit: ConcurrencyLimit,
    segmenter: Arc<dyn SentenceSegmenter>,
}

impl WikiRetriever {
    pub fn new(config: WikiConfig) -> Result<Self, RetrievalError> {
        let client = Client::builder()
            .timeout(config.timeout)
            .user_agent(config.user_agent.clone())
            .build()
            .map_err(|e| RetrievalError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(Self {
            client,
            limit: ConcurrencyLimit::new(config.max_in_flight),
            config,
            segmenter: Arc::new(RuleSegmenter),
        })
    }

    pub fn with_segmenter(mut self, segmenter: Arc<dyn SentenceSegmenter>) -> Self {
        self.segmenter = segmenter;
        self
    }

    pub fn config(&self) -> &WikiConfig {
        &self.config
    }

    fn get_json(&self, params: &[(&str, &str)]) -> Result<Value, RetrievalError> {
        self.config
            .retry
            .run(|_| {
                let _permit = self.limit.acquire();
                let resp = self
                    .client
                    .get(&self.config.base_url)
                    .query(params)
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
                resp.json::<Value>()
                    .map_err(|e| Failure::Retryable(format!("invalid response body: {e}")))
            })
            .map_err(|Attempted { attempts, error }| RetrievalError::Transport {
                attempts,
                message: error,
            })
    }

    /// Title of the first search result, if any.
    pub fn search(&self, query: &str) -> Result<Option<String>, RetrievalError> {
        let body = self.get_json(&[
            ("action", "query"),
            ("list", "search"),
            ("srsearch", query),
            ("srlimit", "1"),
            ("format", "json"),
            ("formatversion", "2"),
        ])?;
        Ok(body
            .pointer("/query/search/0/title")
            .and_then(Value::as_str)
            .map(str::to_string))
    }

    /// Plain-text lead section of the page titled `title`.
    pub fn extract(&self, title: &str) -> Result<Option<String>, RetrievalError> {
        let body = self.get_json(&[
            ("action", "query"),
            ("prop", "extracts"),
            ("exintro", "1"),
            ("explaintext", "1"),
            ("redirects", "1"),
            ("titles", title),
            ("format", "json"),
            ("formatversion", "2"),
        ])?;
        let pages = body.pointer("/query/pages");
        let first = match pages {
            Some(Value::Array(items)) => items.first(),
            Some(Value::Object(map)) => map.values().next(),
            _ => None,
        };
        Ok(first
            .and_then(|p| p.get("extract"))
            .and_then(Value::as_str)
            .map(str::to_string))
    }
}

impl Retriever for WikiRetriever {
    fn retrieve(&self, query: &str) -> Result<Passage, RetrievalError> {
        let not_found = || RetrievalError::NotFound(query.to_string());
        let title = self.search(query)?.ok_or_else(not_found)?;
        let text = self.extract(&title)?.ok_or_else(not_found)?;
        Passage::from_text(query, &text, self.segmenter.as_ref())
    }
}
