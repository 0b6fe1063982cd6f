//! Record/replay fixtures: run once against a live backend, replay forever.
//!
//! Fixtures are single JSON files named `{digest}.json` in a directory, where
//! the digest is [`super::canonical_request_digest`] of the request. A replay
//! miss is a hard error (never a silent fallback), so offline runs fail loudly
//! when the recorded corpus does not cover a request.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    canonical_request_digest, ChatTransport, ClientError, CompletionRequest,
};

/// One recorded exchange.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub digest: String,
    /// The request as issued (bookkeeping fields included, for humans).
    pub request: CompletionRequest,
    pub response: String,
}

/// Directory-backed fixture store.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    /// Opens (creating if needed) a fixture directory.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ClientError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    /// Records `response` for `request`, overwriting any previous fixture.
    pub fn record(&self, request: &CompletionRequest, response: &str) -> Result<String, ClientError> {
        let digest = canonical_request_digest(request);
        let fixture = Fixture {
            digest: digest.clone(),
            request: request.clone(),
            response: response.to_string(),
        };
        let body = serde_json::to_string_pretty(&fixture)
            .map_err(|e| ClientError::Protocol(format!("fixture serialization failed: {e}")))?;
        fs::write(self.path_for(&digest), body)?;
        Ok(digest)
    }

    /// Looks up the recorded response for `request`.
    pub fn lookup(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let digest = canonical_request_digest(request);
        let path = self.path_for(&digest);
        if !path.exists() {
            return Err(ClientError::FixtureMiss { digest });
        }
        let raw = fs::read_to_string(&path)?;
        let fixture: Fixture = serde_json::from_str(&raw).map_err(|e| {
            ClientError::Protocol(format!("fixture {} is corrupt: {e}", path.display()))
        })?;
        Ok(fixture.response)
    }

    /// Number of fixtures currently stored.
    pub fn len(&self) -> usize {
        fs::read_dir(&self.dir)
            .map(|entries| {
                entries
                    .filter_map(Result::ok)
                    .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
                    .count()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Transport that answers only from recorded fixtures.
pub struct ReplayTransport {
    store: FixtureStore,
}

impl ReplayTransport {
    pub fn new(store: FixtureStore) -> Self {
        Self { store }
    }
}

impl ChatTransport for ReplayTransport {
    fn send(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        self.store.lookup(request)
    }

    fn name(&self) -> &str {
        "replay"
    }
}

/// Transport that forwards to an inner backend and records successes.
pub struct RecordingTransport {
    inner: Box<dyn ChatTransport>,
    store: FixtureStore,
}

impl RecordingTransport {
    pub fn new(inner: Box<dyn ChatTransport>, store: FixtureStore) -> Self {
        Self { inner, store }
    }
}

impl ChatTransport for RecordingTransport {
    fn send(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let response = self.inner.send(request)?;
        self.store.record(request, &response)?;
        Ok(response)
    }

    fn name(&self) -> &str {
        "record"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmclient::{ChatMessage, EchoStub};

    fn req(text: &str) -> CompletionRequest {
        CompletionRequest::new("m", vec![ChatMessage::user(text)])
    }

    #[test]
    fn record_then_replay_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::open(dir.path()).unwrap();
        let recorder = RecordingTransport::new(Box::new(EchoStub), store.clone());
        let request = req("what is crop rotation?");
        let live = recorder.send(&request).unwrap();

        let replay = ReplayTransport::new(store);
        assert_eq!(replay.send(&request).unwrap(), live);
        // A request differing only in bookkeeping still hits the fixture.
        let mut rebranded = request.clone();
        rebranded.request_id = "other".into();
        rebranded.purpose = "genq".into();
        assert_eq!(replay.send(&rebranded).unwrap(), live);
    }

    #[test]
    fn replay_miss_is_loud() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::open(dir.path()).unwrap();
        let replay = ReplayTransport::new(store);
        match replay.send(&req("never recorded")) {
            Err(ClientError::FixtureMiss { digest }) => assert_eq!(digest.len(), 64),
            other => panic!("expected fixture miss, got {other:?}"),
        }
    }

    #[test]
    fn fixtures_key_on_semantics_not_whitespace() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::open(dir.path()).unwrap();
        store.record(&req("a   b"), "resp").unwrap();
        assert_eq!(store.lookup(&req("a b")).unwrap(), "resp");
        assert_eq!(store.len(), 1);
    }
}
