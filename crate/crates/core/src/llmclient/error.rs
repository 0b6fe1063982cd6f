//! Backend error taxonomy: what failed and whether retrying can help.

use std::time::Duration;

use thiserror::Error;

/// Errors surfaced by chat and embedding backends.
#[derive(Debug, Error)]
pub enum ClientError {
    /// The request failed validation before any call was made.
    #[error("invalid request: {0}")]
    InvalidRequest(String),

    /// Network/transport failure. `retryable` distinguishes flaky transport
    /// problems (timeouts, 5xx) from permanent ones.
    #[error("transport error via {backend}: {message}")]
    Transport {
        backend: String,
        message: String,
        retryable: bool,
    },

    /// The backend asked us to slow down; honor `retry_after` when present.
    #[error("rate limited{}", match .retry_after { Some(d) => format!(" (retry after {d:?})"), None => String::new() })]
    RateLimited { retry_after: Option<Duration> },

    /// Credentials rejected. Never retried.
    #[error("authentication rejected: {0}")]
    Auth(String),

    /// The backend answered, but not in the shape we expect.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Replay mode found no recorded fixture for this request.
    #[error("no recorded fixture for request digest {digest}")]
    FixtureMiss { digest: String },

    /// Every allowed attempt failed; `last` is the final attempt's error.
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted {
        attempts: u32,
        #[source]
        last: Box<ClientError>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ClientError {
    /// Whether a retry has any chance of succeeding.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            ClientError::RateLimited { .. }
                | ClientError::Transport { retryable: true, .. }
        )
    }

    /// Short machine-readable tag for ledger entries.
    pub fn outcome_tag(&self) -> &'static str {
        match self {
            ClientError::InvalidRequest(_) => "invalid_request",
            ClientError::Transport { .. } => "transport_error",
            ClientError::RateLimited { .. } => "rate_limited",
            ClientError::Auth(_) => "auth_error",
            ClientError::Protocol(_) => "protocol_error",
            ClientError::FixtureMiss { .. } => "fixture_miss",
            ClientError::Exhausted { .. } => "exhausted",
            ClientError::Io(_) => "io_error",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retryability_is_explicit() {
        assert!(ClientError::RateLimited { retry_after: None }.is_retryable());
        assert!(ClientError::Transport {
            backend: "http".into(),
            message: "timeout".into(),
            retryable: true
        }
        .is_retryable());
        assert!(!ClientError::Auth("bad key".into()).is_retryable());
        assert!(!ClientError::Protocol("weird body".into()).is_retryable());
        assert!(!ClientError::FixtureMiss { digest: "d".into() }.is_retryable());
    }
}
