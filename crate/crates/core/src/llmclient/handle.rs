//! `ClientHandle`: operational policy around a raw transport.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use super::{
    CallLedger, CallLedgerEntry, ChatClient, ChatTransport, ClientError, CompletionRequest,
    Limiter, RetryPolicy,
};

/// Wraps a [`ChatTransport`] with validation, bounded retries, an in-flight
/// limiter, and per-attempt ledgering. This is the [`ChatClient`] the rest of
/// the crate uses.
pub struct ClientHandle {
    transport: Box<dyn ChatTransport>,
    retry: RetryPolicy,
    limiter: Arc<Limiter>,
    ledger: Arc<CallLedger>,
    seq: AtomicU64,
}

impl ClientHandle {
    pub fn new(
        transport: Box<dyn ChatTransport>,
        retry: RetryPolicy,
        limiter: Arc<Limiter>,
        ledger: Arc<CallLedger>,
    ) -> Self {
        Self {
            transport,
            retry,
            limiter,
            ledger,
            seq: AtomicU64::new(0),
        }
    }

    /// Convenience constructor for stub transports: no backoff sleeps, a
    /// fresh default limiter, and a fresh ledger.
    pub fn for_stub(transport: Box<dyn ChatTransport>) -> Self {
        Self::new(
            transport,
            RetryPolicy::immediate(),
            Arc::new(Limiter::default()),
            Arc::new(CallLedger::new()),
        )
    }

    pub fn ledger(&self) -> &Arc<CallLedger> {
        &self.ledger
    }

    pub fn limiter(&self) -> &Arc<Limiter> {
        &self.limiter
    }

    fn next_request_id(&self, request: &CompletionRequest) -> String {
        if request.request_id.is_empty() {
            format!("req-{:06}", self.seq.fetch_add(1, Ordering::SeqCst))
        } else {
            request.request_id.clone()
        }
    }
}

impl ChatClient for ClientHandle {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        request.validate()?;
        let request_id = self.next_request_id(request);
        let _permit = self.limiter.acquire();

        let mut attempt: u32 = 1;
        loop {
            let start = Instant::now();
            let result = self.transport.send(request);
            let latency_ms = start.elapsed().as_millis() as u64;
            self.ledger.append(CallLedgerEntry {
                request_id: request_id.clone(),
                purpose: request.purpose.clone(),
                backend: self.transport.name().to_string(),
                model_label: request.model_label.clone(),
                attempt,
                outcome: match &result {
                    Ok(_) => "ok".to_string(),
                    Err(e) => e.outcome_tag().to_string(),
                },
                prompt_chars: request.prompt_chars(),
                completion_chars: result.as_ref().map(String::len).unwrap_or(0),
                latency_ms,
            });

            match result {
                Ok(response) => return Ok(response),
                Err(err) if err.is_retryable() && attempt < self.retry.max_attempts => {
                    // A backend-provided retry-after hint beats the backoff
                    // schedule.
                    let delay = match &err {
                        ClientError::RateLimited {
                            retry_after: Some(d),
                        } => *d,
                        _ => self.retry.backoff(attempt),
                    };
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                    }
                    attempt += 1;
                }
                Err(err) if attempt > 1 => {
                    return Err(ClientError::Exhausted {
                        attempts: attempt,
                        last: Box::new(err),
                    })
                }
                Err(err) if err.is_retryable() => {
                    // Retryable but the budget is a single attempt.
                    return Err(ClientError::Exhausted {
                        attempts: attempt,
                        last: Box::new(err),
                    });
                }
                Err(err) => return Err(err),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmclient::{ChatMessage, ClosureStub, EchoStub, ScriptedStub};
    use std::sync::atomic::AtomicU32;

    fn req(text: &str) -> CompletionRequest {
        CompletionRequest::new("m", vec![ChatMessage::user(text)]).with_purpose("test")
    }

    #[test]
    fn success_is_ledgered_once() {
        let handle = ClientHandle::for_stub(Box::new(EchoStub));
        assert_eq!(handle.complete(&req("hi")).unwrap(), "hi");
        let entries = handle.ledger().snapshot();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].outcome, "ok");
        assert_eq!(entries[0].attempt, 1);
        assert_eq!(entries[0].purpose, "test");
    }

    #[test]
    fn retryable_errors_exhaust_after_three_attempts() {
        let calls = Arc::new(AtomicU32::new(0));
        let seen = Arc::clone(&calls);
        let flaky = ClosureStub::new("flaky", move |_r: &CompletionRequest| {
            seen.fetch_add(1, Ordering::SeqCst);
            Err(ClientError::Transport {
                backend: "flaky".into(),
                message: "connection reset".into(),
                retryable: true,
            })
        });
        let handle = ClientHandle::for_stub(Box::new(flaky));
        match handle.complete(&req("hi")) {
            Err(ClientError::Exhausted { attempts, last }) => {
                assert_eq!(attempts, 3);
                assert!(matches!(*last, ClientError::Transport { .. }));
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
        assert_eq!(calls.load(Ordering::SeqCst), 3);
        assert_eq!(handle.ledger().total_attempts(), 3);
    }

    #[test]
    fn recovers_when_a_retry_succeeds() {
        let calls = Arc::new(AtomicU32::new(0));
        let seen = Arc::clone(&calls);
        let flaky = ClosureStub::new("flaky", move |_r: &CompletionRequest| {
            if seen.fetch_add(1, Ordering::SeqCst) == 0 {
                Err(ClientError::RateLimited { retry_after: Some(std::time::Duration::ZERO) })
            } else {
                Ok("recovered".into())
            }
        });
        let handle = ClientHandle::for_stub(Box::new(flaky));
        assert_eq!(handle.complete(&req("hi")).unwrap(), "recovered");
        let entries = handle.ledger().snapshot();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].outcome, "rate_limited");
        assert_eq!(entries[1].outcome, "ok");
        assert_eq!(entries[1].attempt, 2);
    }

    #[test]
    fn non_retryable_errors_fail_fast() {
        let stub = ClosureStub::new("auth", |_r: &CompletionRequest| {
            Err(ClientError::Auth("bad key".into()))
        });
        let handle = ClientHandle::for_stub(Box::new(stub));
        assert!(matches!(handle.complete(&req("hi")), Err(ClientError::Auth(_))));
        assert_eq!(handle.ledger().total_attempts(), 1);
    }

    #[test]
    fn invalid_requests_never_reach_the_transport() {
        let handle = ClientHandle::for_stub(Box::new(ScriptedStub::new(vec!["x".into()])));
        let bad = CompletionRequest::new("m", vec![]);
        assert!(matches!(
            handle.complete(&bad),
            Err(ClientError::InvalidRequest(_))
        ));
        assert_eq!(handle.ledger().total_attempts(), 0);
    }

    #[test]
    fn request_ids_are_assigned_sequentially() {
        let handle = ClientHandle::for_stub(Box::new(EchoStub));
        handle.complete(&req("a")).unwrap();
        handle.complete(&req("b")).unwrap();
        let ids: Vec<String> = handle
            .ledger()
            .snapshot()
            .into_iter()
            .map(|e| e.request_id)
            .collect();
        assert_eq!(ids, vec!["req-000000", "req-000001"]);
    }
}
