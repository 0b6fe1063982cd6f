//! CLI error taxonomy mapped onto process exit codes.
//!
//! The contract: `0` success, `2` configuration problems (bad file, bad key,
//! missing referenced path), `3` missing upstream stage artifacts (the error
//! names the command to run), `4` backend failures (transport, rate limit,
//! unusable completions), and `1` for everything else.

use std::fmt;

use qaforge_core::corpus::CorpusError;
use qaforge_core::genesis::GenesisError;
use qaforge_core::index::IndexError;
use qaforge_core::judge::JudgeError;
use qaforge_core::llmclient::ClientError;
use qaforge_core::textmetrics::MetricsError;

/// Anything a pipeline command can fail with.
#[derive(Debug)]
pub enum CliError {
    /// Configuration is unusable: unparseable, invalid, or pointing at
    /// files that do not exist.
    Config(String),
    /// An upstream stage artifact is missing; `command` produces it.
    Dependency { missing: String, command: String },
    /// A model backend failed or returned something unusable.
    Backend(String),
    /// Everything else (I/O, internal invariants).
    Other(String),
}

impl CliError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Dependency { .. } => 3,
            CliError::Backend(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    /// Convenience constructor for configuration complaints.
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(message) => write!(f, "config error: {message}"),
            CliError::Dependency { missing, command } => write!(
                f,
                "missing stage artifact `{missing}`; run `qaforge {command}` first"
            ),
            CliError::Backend(message) => write!(f, "backend error: {message}"),
            CliError::Other(message) => write!(f, "{message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<GenesisError> for CliError {
    fn from(e: GenesisError) -> Self {
        match e {
            // The backend answered, but with something the parsers reject:
            // that is a backend-quality failure, not a local bug.
            GenesisError::Client(_)
            | GenesisError::ContextParse { .. }
            | GenesisError::NoQuestions { .. }
            | GenesisError::NoPairs { .. } => CliError::Backend(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<JudgeError> for CliError {
    fn from(e: JudgeError) -> Self {
        match e {
            JudgeError::Client(_) | JudgeError::AllTrialsUnparseable { .. } => {
                CliError::Backend(e.to_string())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("io error: {e}"))
    }
}
