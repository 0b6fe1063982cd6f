//! LLM-as-judge evaluation of generated questions and answers.
//!
//! Every metric follows the same shape: a prompt template is rendered with
//! the texts under judgment, the completion is parsed into a
//! [`JudgeVerdict`] on the metric's [`ScoreScale`], and unparseable replies
//! are recorded with `parse_ok == false` rather than clamped or guessed.
//! [`judge_with_variance`] repeats a judgment [`VARIANCE_TRIALS`] times and
//! summarizes the spread, since a sampled judge is itself a noisy
//! measurement instrument.

mod ops;
mod parse;
mod report;
mod scale;
mod variance;

pub use ops::{
    make_guideline, rate_answer_coherence, rate_answer_groundedness, rate_answer_relevance,
    rate_correctness, rate_coverage, rate_fluency, rate_global_relevance,
    rate_question_relevance, rate_succinctness, score_with_guideline, JudgeOptions,
    ANSWER_COHERENCE_TEMPLATE, ANSWER_GROUNDEDNESS_TEMPLATE, ANSWER_RELEVANCE_TEMPLATE,
    CORRECTNESS_TEMPLATE, COVERAGE_TEMPLATE, FLUENCY_TEMPLATE, GLOBAL_RELEVANCE_TEMPLATE,
    GUIDELINE_GENERATION_TEMPLATE, GUIDELINE_SCORING_TEMPLATE, QUESTION_RELEVANCE_TEMPLATE,
    SUCCINCTNESS_TEMPLATE,
};
pub use parse::parse_verdict;
pub use report::{aggregate_report, metrics_csv, metrics_markdown, MetricSummary};
pub use scale::{CorrectnessGrade, ScoreScale, ScoreValue};
pub use variance::{judge_with_variance, summarize_trials, VarianceReport, VARIANCE_TRIALS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llmclient::ClientError;

use super::genesis::GenesisError;

/// Errors from judging.
#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("judge template: {0}")]
    Template(String),
    #[error("metric `{metric}`: all {trials} trials were unparseable")]
    AllTrialsUnparseable { metric: String, trials: usize },
    #[error(transparent)]
    Client(#[from] ClientError),
}

impl From<GenesisError> for JudgeError {
    fn from(err: GenesisError) -> Self {
        match err {
            GenesisError::Client(e) => JudgeError::Client(e),
            other => JudgeError::Template(other.to_string()),
        }
    }
}

/// One judgment of one text on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub metric_name: String,
    pub scale: ScoreScale,
    /// Parsed score; `None` when the completion could not be interpreted on
    /// the metric's scale (never clamped into range).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreValue>,
    /// Judge's stated reasoning, best-effort extracted.
    pub explanation: String,
    /// Full completion, kept verbatim for audit.
    pub raw_response: String,
    pub parse_ok: bool,
    /// Which variance trial produced this verdict (0 for single-shot).
    pub trial_index: usize,
}
