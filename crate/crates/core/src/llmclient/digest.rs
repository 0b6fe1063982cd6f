//! Canonical request digests for the record/replay fixture store.
//!
//! Two requests that differ only in bookkeeping (request id, purpose) or in
//! JSON key order / insignificant whitespace must map to the same fixture.
//! The digest therefore hashes a canonical serialization: only the semantic
//! fields, object keys sorted, message contents with whitespace runs
//! collapsed.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::CompletionRequest;

/// Hex SHA-256 of the canonical form of `request`.
///
/// Canonical form: `{"max_tokens", "messages": [{"content", "role"}…],
/// "model", "temperature"}` — serde_json's default map sorts keys — with each
/// content trimmed and internal whitespace runs collapsed to single spaces.
pub fn canonical_request_digest(request: &CompletionRequest) -> String {
    let messages: Vec<Value> = request
        .messages
        .iter()
        .map(|m| {
            json!({
                "role": serde_json::to_value(m.role).expect("role serializes"),
                "content": normalize_whitespace(&m.content),
            })
        })
        .collect();
    let canonical = json!({
        "model": request.model_label,
        "messages": messages,
        "max_tokens": request.max_tokens,
        "temperature": request.temperature,
    });
    let bytes = serde_json::to_vec(&canonical).expect("canonical value serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
