//! Deterministic in-process chat backends for tests and offline runs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{ChatTransport, ClientError, CompletionRequest};

/// Echoes the concatenated user-message contents back as the completion.
pub struct EchoStub;

impl ChatTransport for EchoStub {
    fn send(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let echoed = request
            .messages
            .iter()
            .filter(|m| m.role == super::Role::User)
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        Ok(echoed)
    }

    fn name(&self) -> &str {
        "stub-echo"
    }
}

/// Plays back a fixed list of responses in order.
///
/// With `cycle = true` the list repeats forever; otherwise running past the
/// end is a non-retryable transport error (useful for "backend went away"
/// tests).
pub struct ScriptedStub {
    responses: Vec<String>,
    next: AtomicUsize,
    cycle: bool,
}

impl ScriptedStub {
    pub fn new(responses: Vec<String>) -> Self {
        Self {
            responses,
            next: AtomicUsize::new(0),
            cycle: false,
        }
    }

    pub fn cycling(responses: Vec<String>) -> Self {
        Self {
            responses,
            next: AtomicUsize::new(0),
            cycle: true,
        }
    }

    /// Number of responses handed out so far.
    pub fn served(&self) -> usize {
        self.next.load(Ordering::SeqCst)
    }
}

impl ChatTransport for ScriptedStub {
    fn send(&self, _request: &CompletionRequest) -> Result<String, ClientError> {
        let idx = self.next.fetch_add(1, Ordering::SeqCst);
        if self.responses.is_empty() {
            return Err(ClientError::Transport {
                backend: self.name().into(),
                message: "script is empty".into(),
                retryable: false,
            });
        }
        if self.cycle {
            Ok(self.responses[idx % self.responses.len()].clone())
        } else if idx < self.responses.len() {
            Ok(self.responses[idx].clone())
        } else {
            Err(ClientError::Transport {
                backend: self.name().into(),
                message: format!("script exhausted after {} responses", self.responses.len()),
                retryable: false,
            })
        }
    }

    fn name(&self) -> &str {
        "stub-scripted"
    }
}

/// Routes each request through a caller-supplied function.
///
/// This is the hook for pipeline-shaped stubs that answer tagging prompts,
/// question prompts, and judging prompts differently based on the request.
pub struct ClosureStub {
    name: String,
    #[allow(clippy::type_complexity)]
    f: Mutex<Box<dyn FnMut(&CompletionRequest) -> Result<String, ClientError> + Send>>,
}

impl ClosureStub {
    pub fn new(
        name: impl Into<String>,
        f: impl FnMut(&CompletionRequest) -> Result<String, ClientError> + Send + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Mutex::new(Box::new(f)),
        }
    }
}

impl ChatTransport for ClosureStub {
    fn send(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        (self.f.lock().expect("closure stub poisoned"))(request)
    }

    fn name(&self) -> &str {
        &self.name
    }
}
