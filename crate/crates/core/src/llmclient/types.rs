//! Request/response types shared by every backend.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ClientError;

/// Chat message role, serialized lowercase to match the wire format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

/// One chat message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

/// A chat-completion request.
///
/// `request_id` and `purpose` are bookkeeping only: they flow into the call
/// ledger but are excluded from fixture digests, so replays match any id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    /// Model label sent to the backend (and used as the fixture/ledger key).
    pub model_label: String,
    pub messages: Vec<ChatMessage>,
    pub max_tokens: u32,
    pub temperature: f64,
    /// Caller-chosen id; when empty the handle assigns a sequential one.
    #[serde(default)]
    pub request_id: String,
    /// What pipeline step issued this call ("genq", "judge:relevance", …).
    #[serde(default)]
    pub purpose: String,
}

impl CompletionRequest {
    pub fn new(model_label: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        Self {
            model_label: model_label.into(),
            messages,
            max_tokens: 1024,
            temperature: 0.0,
            request_id: String::new(),
            purpose: String::new(),
        }
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_purpose(mut self, purpose: impl Into<String>) -> Self {
        self.purpose = purpose.into();
        self
    }

    /// Validates the request: non-empty model label and messages, at least
    /// one non-blank message content, and `max_tokens >= 1`.
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.model_label.is_empty() {
            return Err(ClientError::InvalidRequest("model_label is empty".into()));
        }
        if self.messages.is_empty() {
            return Err(ClientError::InvalidRequest("messages are empty".into()));
        }
        if self.messages.iter().all(|m| m.content.trim().is_empty()) {
            return Err(ClientError::InvalidRequest(
                "every message content is blank".into(),
            ));
        }
        if self.max_tokens == 0 {
            return Err(ClientError::InvalidRequest("max_tokens must be >= 1".into()));
        }
        Ok(())
    }

    /// Total characters across message contents (prompt size for the ledger).
    pub fn prompt_chars(&self) -> usize {
        self.messages.iter().map(|m| m.content.len()).sum()
    }
}

/// Bounded-retry policy with exponential backoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts, including the first (so 3 = one call + two retries).
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl RetryPolicy {
    /// No sleeping between attempts; used by tests and stub backends.
    pub fn immediate() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    /// Backoff before retrying after `attempt` (1-based) failed:
    /// `base * 2^(attempt-1)`, capped at `max_delay`.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt.saturating_sub(1));
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(250),
            max_delay: Duration::from_secs(8),
        }
    }
}
