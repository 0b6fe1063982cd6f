//! Turns config into live backends: chat clients and embedders.
//!
//! Every chat client is wrapped in a [`ClientHandle`] whose ledger streams to
//! `<run_dir>/ledger.jsonl`, so the exact number and purpose of model calls a
//! run made is always auditable after the fact. The offline guard lives in
//! config validation; by the time this module runs, an `http` backend request
//! in an offline run has already been rejected.

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use qaforge_core::llmclient::{
    CallLedger, ChatTransport, ClientHandle, Embedder, FileEmbedder, FixtureStore,
    HashEmbedder, HttpChatTransport, HttpEmbedder, Limiter, ReplayTransport, RetryPolicy,
};

use crate::config::PipelineConfig;
use crate::error::CliError;

/// Builds the chat client named by `backend` ("stub" | "replay" | "http"),
/// with its call ledger persisted under the run directory.
pub fn chat_client(
    backend: &str,
    cfg: &PipelineConfig,
    run_dir: &Path,
) -> Result<ClientHandle, CliError> {
    let transport: Box<dyn ChatTransport> = match backend {
        "stub" => Box::new(crate::stubchat::deterministic_stub(cfg.seed)),
        "replay" => {
            let fixtures = cfg.replay.fixtures.as_ref().ok_or_else(|| {
                CliError::config("replay backend requires replay.fixtures")
            })?;
            Box::new(ReplayTransport::new(FixtureStore::open(fixtures.clone())?))
        }
        "http" => {
            let api_key = resolve_api_key(cfg)?;
            Box::new(HttpChatTransport::new(
                cfg.http.endpoint.clone(),
                api_key,
                Duration::from_secs(cfg.http.timeout_secs),
            )?)
        }
        other => {
            return Err(CliError::config(format!(
                "unknown chat backend `{other}` (expected stub|replay|http)"
            )))
        }
    };
    let retry = if backend == "http" {
        RetryPolicy {
            max_attempts: cfg.http.max_attempts,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    } else {
        RetryPolicy::immediate()
    };
    let ledger = CallLedger::with_sink(&run_dir.join("ledger.jsonl"))?;
    Ok(ClientHandle::new(
        transport,
        retry,
        Arc::new(Limiter::default()),
        Arc::new(ledger),
    ))
}

/// Builds the embedding backend from config.
pub fn embedder(cfg: &PipelineConfig) -> Result<Box<dyn Embedder>, CliError> {
    match cfg.embedding.backend.as_str() {
        "hash" => Ok(Box::new(HashEmbedder::new(cfg.embedding.dims, cfg.seed))),
        "file" => {
            let vectors = cfg.embedding.vectors.as_ref().ok_or_else(|| {
                CliError::config("file embedder requires embedding.vectors")
            })?;
            Ok(Box::new(FileEmbedder::from_path(vectors)?))
        }
        "http" => {
            let api_key = resolve_api_key(cfg)?;
            Ok(Box::new(HttpEmbedder::new(
                cfg.http.embed_endpoint.clone(),
                api_key,
                cfg.http.embed_model.clone(),
                cfg.embedding.dims,
                Duration::from_secs(cfg.http.timeout_secs),
            )?))
        }
        other => Err(CliError::config(format!(
            "unknown embedding backend `{other}` (expected hash|file|http)"
        ))),
    }
}

/// Reads the credential from the configured environment variable. The key
/// never lives in a file this tool reads or writes.
fn resolve_api_key(cfg: &PipelineConfig) -> Result<Option<String>, CliError> {
    match &cfg.http.api_key_env {
        None => Ok(None),
        Some(var) => match std::env::var(var) {
            Ok(value) if !value.is_empty() => Ok(Some(value)),
            _ => Err(CliError::config(format!(
                "http.api_key_env names `{var}` but it is unset or empty"
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;
    use qaforge_core::llmclient::{ChatClient, ChatMessage, CompletionRequest};

    fn stub_config(dir: &Path) -> PipelineConfig {
        std::fs::write(dir.join("manifest.json"), r#"{"corpus_id":"t","entries":[]}"#).unwrap();
        std::fs::write(dir.join("config.toml"), "[corpus]\nmanifest = \"manifest.json\"\n")
            .unwrap();
        PipelineConfig::load(&dir.join("config.toml"), &Overrides::default()).unwrap()
    }

    #[test]
    fn stub_client_ledgers_to_the_run_dir() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = stub_config(dir.path());
        let client = chat_client("stub", &cfg, dir.path()).unwrap();
        let request = CompletionRequest::new(
            "stub-model",
            vec![ChatMessage::user(
                "Rate the given question on a scale of 1 to 5 and provide an explanation.",
            )],
        )
        .with_purpose("judge_probe");
        client.complete(&request).unwrap();
        let ledger = std::fs::read_to_string(dir.path().join("ledger.jsonl")).unwrap();
        assert_eq!(ledger.lines().count(), 1);
        assert!(ledger.contains("judge_probe"));
    }

    #[test]
    fn hash_embedder_dimensions_follow_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = stub_config(dir.path());
        let backend = embedder(&cfg).unwrap();
        assert_eq!(backend.dims(), 64);
        assert_eq!(backend.embed("winter wheat").unwrap().len(), 64);
    }

    #[test]
    fn unknown_backend_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = stub_config(dir.path());
        let err = chat_client("carrier-pigeon", &cfg, dir.path()).err().expect("must fail");
        assert_eq!(err.exit_code(), 2);
    }
}
