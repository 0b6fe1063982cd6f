//! Pluggable chat-completion and embedding backends.
//!
//! Generation and judging code talk to a [`ChatClient`]; retrieval talks to an
//! [`Embedder`]. Three transport families implement those contracts:
//!
//! - **remote** — an HTTP chat-completions endpoint ([`http::HttpChatTransport`],
//!   [`http::HttpEmbedder`]);
//! - **replay** — recorded fixtures keyed by a canonical request digest
//!   ([`replay::FixtureStore`], [`replay::ReplayTransport`]), so tests and
//!   offline runs never touch the network;
//! - **stub** — deterministic in-process fakes ([`stub::EchoStub`],
//!   [`stub::ScriptedStub`], [`stub::ClosureStub`], [`embedder::HashEmbedder`]).
//!
//! [`ClientHandle`] wraps any chat transport with the crate's operational
//! policy: request validation, bounded retries with exponential backoff (a
//! rate-limit `retry-after` hint is honored), an in-flight concurrency
//! limiter (default 4), and a [`CallLedger`] that records one entry per
//! attempt with a purpose tag, so callers can audit exactly how many model
//! calls a pipeline stage made.

mod digest;
mod embedder;
mod error;
mod handle;
mod http;
mod ledger;
mod limiter;
mod replay;
mod stub;
mod types;

pub use digest::canonical_request_digest;
pub use embedder::{FileEmbedder, HashEmbedder};
pub use error::ClientError;
pub use handle::ClientHandle;
pub use http::{HttpChatTransport, HttpEmbedder};
pub use ledger::{CallLedger, CallLedgerEntry};
pub use limiter::{Limiter, Permit};
pub use replay::{FixtureStore, RecordingTransport, ReplayTransport};
pub use stub::{ClosureStub, EchoStub, ScriptedStub};
pub use types::{ChatMessage, CompletionRequest, RetryPolicy, Role};

/// A chat-completion backend: one validated request in, one completion out.
pub trait ChatClient: Send + Sync {
    /// Runs the request to completion, applying whatever retry/limit policy
    /// the implementation carries. Errors are [`ClientError`]s.
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError>;
}

/// A single-shot chat transport; [`ClientHandle`] adds retries, limits, and
/// ledgering on top.
pub trait ChatTransport: Send + Sync {
    fn send(&self, request: &CompletionRequest) -> Result<String, ClientError>;
    /// Short backend label for ledger entries ("http", "replay", "stub", …).
    fn name(&self) -> &str;
}

/// A text-embedding backend producing fixed-dimension vectors.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ClientError>;
    fn dims(&self) -> usize;
    /// Label recorded alongside indexes built with this backend.
    fn label(&self) -> String;
}

/// Embeds one text after validating it is non-empty.
pub fn embed_text(text: &str, backend: &dyn Embedder) -> Result<Vec<f64>, ClientError> {
    if text.trim().is_empty() {
        return Err(ClientError::InvalidRequest(
            "cannot embed empty text".into(),
        ));
    }
    let values = backend.embed(text)?;
    if values.len() != backend.dims() {
        return Err(ClientError::Protocol(format!(
            "embedder `{}` returned {} dims, expected {}",
            backend.label(),
            values.len(),
            backend.dims()
        )));
    }
    Ok(values)
}
