//! Call ledger: one entry per backend attempt, with purpose tags.
//!
//! The ledger is the audit trail that lets the pipeline prove how many model
//! calls a stage made (e.g. combined generation = one call per section,
//! separated = one plus one per question). Entries can be mirrored to a JSONL
//! sink as they are appended.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// One backend attempt (success or failure).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallLedgerEntry {
    pub request_id: String,
    /// Pipeline step that issued the call ("genq", "judge:coverage", …).
    pub purpose: String,
    pub backend: String,
    pub model_label: String,
    /// 1-based attempt number within one logical request.
    pub attempt: u32,
    /// "ok" or an error tag ("transport_error", "rate_limited", …).
    pub outcome: String,
    pub prompt_chars: usize,
    pub completion_chars: usize,
    pub latency_ms: u64,
}

#[derive(Default)]
struct LedgerInner {
    entries: Vec<CallLedgerEntry>,
    sink: Option<File>,
}

/// Thread-safe, append-only ledger of backend attempts.
#[derive(Default)]
pub struct CallLedger {
    inner: Mutex<LedgerInner>,
}

impl CallLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// A ledger that also mirrors every entry to a JSONL file. The file is
    /// opened in append mode: a pipeline run spans several processes, and
    /// call accounting (e.g. the combined-vs-separated inequality) needs the
    /// union of their entries, not just the last stage's.
    pub fn with_sink(path: &Path) -> std::io::Result<Self> {
        let file = File::options().create(true).append(true).open(path)?;
        Ok(Self {
            inner: Mutex::new(LedgerInner {
                entries: Vec::new(),
                sink: Some(file),
            }),
        })
    }

    /// Appends one entry (exactly one call per attempt).
    pub fn append(&self, entry: CallLedgerEntry) {
        let mut inner = self.inner.lock().expect("ledger poisoned");
        if let Some(sink) = inner.sink.as_mut() {
            // Ledger lines are run metadata (latencies vary run to run); they
            // are not part of the byte-deterministic stage outputs.
            let line = serde_json::to_string(&entry).expect("ledger entry serializes");
            let _ = writeln!(sink, "{line}");
        }
        inner.entries.push(entry);
    }

    /// Copy of all entries so far.
    pub fn snapshot(&self) -> Vec<CallLedgerEntry> {
        self.inner.lock().expect("ledger poisoned").entries.clone()
    }

    /// Total number of attempts recorded.
    pub fn total_attempts(&self) -> usize {
        self.inner.lock().expect("ledger poisoned").entries.len()
    }

    /// Successful completions grouped by purpose tag.
    pub fn ok_counts_by_purpose(&self) -> BTreeMap<String, usize> {
        let inner = self.inner.lock().expect("ledger poisoned");
        let mut counts = BTreeMap::new();
        for e in inner.entries.iter().filter(|e| e.outcome == "ok") {
            *counts.entry(e.purpose.clone()).or_insert(0) += 1;
        }
        counts
    }
}
