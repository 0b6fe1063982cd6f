//! Remote HTTP backends speaking the common chat-completions wire format.
//!
//! Requests POST JSON of the form
//! `{"model", "messages": [{"role", "content"}…], "max_tokens",
//! "temperature"}` and read `choices[0].message.content` from the response.
//! Embeddings POST `{"model", "input"}` and read `data[0].embedding`.
//!
//! Status mapping: 401/403 → auth error (never retried); 429 → rate-limited,
//! honoring a numeric `retry-after` header; 408/5xx and connection failures →
//! retryable transport errors; any other non-success → protocol error.

use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatTransport, ClientError, CompletionRequest, Embedder};

/// Chat transport for an HTTP chat-completions endpoint.
pub struct HttpChatTransport {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpChatTransport {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, ClientError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClientError::Protocol(format!("http client init failed: {e}")))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key,
            client,
        })
    }
}

impl ChatTransport for HttpChatTransport {
    fn send(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let body = json!({
            "model": request.model_label,
            "messages": request.messages,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        });
        let mut builder = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| ClientError::Transport {
            backend: "http".into(),
            message: e.to_string(),
            retryable: true,
        })?;
        let value = read_json_response(response)?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| {
                ClientError::Protocol("response has no choices[0].message.content".into())
            })
    }

    fn name(&self) -> &str {
        "http"
    }
}

/// Remote embedding backend on the same endpoint conventions.
pub struct HttpEmbedder {
    endpoint: String,
    api_key: Option<String>,
    model: String,
    dims: usize,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        model: impl Into<String>,
        dims: usize,
        timeout: Duration,
    ) -> Result<Self, ClientError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClientError::Protocol(format!("http client init failed: {e}")))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key,
            model: model.into(),
            dims,
            client,
        })
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ClientError> {
        let body = json!({ "model": self.model, "input": text });
        let mut builder = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| ClientError::Transport {
            backend: "http-embed".into(),
            message: e.to_string(),
            retryable: true,
        })?;
        let value = read_json_response(response)?;
        let embedding = value
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ClientError::Protocol("response has no data[0].embedding".into()))?;
        embedding
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| ClientError::Protocol("non-numeric embedding entry".into()))
            })
            .collect()
    }

    fn dims(&self) -> usize {
        self.dims
    }

    fn label(&self) -> String {
        format!("remote:{}", self.model)
    }
}

fn read_json_response(response: reqwest::blocking::Response) -> Result<Value, ClientError> {
    let status = response.status();
    if status.as_u16() == 401 || status.as_u16() == 403 {
        return Err(ClientError::Auth(format!("endpoint returned {status}")));
    }
    if status.as_u16() == 429 {
        let retry_after = response
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|s| s.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        return Err(ClientError::RateLimited { retry_after });
    }
    if status.as_u16() == 408 || status.is_server_error() {
        return Err(ClientError::Transport {
            backend: "http".into(),
            message: format!("status {status}"),
            retryable: true,
        });
    }
    if !status.is_success() {
        let body = response.text().unwrap_or_default();
        return Err(ClientError::Protocol(format!(
            "status {status}: {}",
            truncate(&body, 200)
        )));
    }
    response
        .json::<Value>()
        .map_err(|e| ClientError::Protocol(format!("response is not JSON: {e}")))
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((idx, _)) => &s[..idx],
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmclient::{ChatMessage, ClientHandle, RetryPolicy, CallLedger, ChatClient, Limiter};
    use std::sync::Arc;

    /// Connecting to a closed local port exercises the retry path offline.
    #[test]
    fn unreachable_endpoint_exhausts_retries() {
        let transport =
            HttpChatTransport::new("http://127.0.0.1:9/v1/chat/completions", None, Duration::from_millis(200))
                .unwrap();
        let handle = ClientHandle::new(
            Box::new(transport),
            RetryPolicy::immediate(),
            Arc::new(Limiter::default()),
            Arc::new(CallLedger::new()),
        );
        let req = CompletionRequest::new("m", vec![ChatMessage::user("hi")]);
        match handle.complete(&req) {
            Err(ClientError::Exhausted { attempts, last }) => {
                assert_eq!(attempts, 3);
                assert!(last.is_retryable());
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
        assert_eq!(handle.ledger().total_attempts(), 3);
    }
}
