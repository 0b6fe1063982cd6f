//! One function per judged metric.
//!
//! Each function renders its template, sends one completion at the judge
//! temperature, and parses the reply on the metric's scale. Judges default
//! to temperature 0.0 so single-shot verdicts are as repeatable as the
//! backend allows; variance studies raise it deliberately.

use std::collections::BTreeMap;

use crate::genesis::PromptTemplate;
use crate::llmclient::{ChatClient, ClientHandle, CompletionRequest};

use super::parse::parse_verdict;
use super::scale::ScoreScale;
use super::{JudgeError, JudgeVerdict};

pub const QUESTION_RELEVANCE_TEMPLATE: &str = include_str!("templates/question_relevance.txt");
pub const GLOBAL_RELEVANCE_TEMPLATE: &str = include_str!("templates/global_relevance.txt");
pub const COVERAGE_TEMPLATE: &str = include_str!("templates/coverage.txt");
pub const FLUENCY_TEMPLATE: &str = include_str!("templates/fluency.txt");
pub const ANSWER_COHERENCE_TEMPLATE: &str = include_str!("templates/answer_coherence.txt");
pub const ANSWER_RELEVANCE_TEMPLATE: &str = include_str!("templates/answer_relevance.txt");
pub const ANSWER_GROUNDEDNESS_TEMPLATE: &str =
    include_str!("templates/answer_groundedness.txt");
pub const GUIDELINE_GENERATION_TEMPLATE: &str =
    include_str!("templates/guideline_generation.txt");
pub const GUIDELINE_SCORING_TEMPLATE: &str = include_str!("templates/guideline_scoring.txt");
pub const SUCCINCTNESS_TEMPLATE: &str = include_str!("templates/succinctness.txt");
pub const CORRECTNESS_TEMPLATE: &str = include_str!("templates/correctness.txt");

/// Shared judging knobs.
#[derive(Debug, Clone)]
pub struct JudgeOptions {
    pub model_label: String,
    /// Sampling temperature for the judge call; 0.0 unless measuring spread.
    pub temperature: f64,
    /// Trial index recorded in the verdict (0 for single-shot use).
    pub trial_index: usize,
}

impl JudgeOptions {
    pub fn new(model_label: &str) -> Self {
        Self { model_label: model_label.to_string(), temperature: 0.0, trial_index: 0 }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_trial(mut self, trial_index: usize) -> Self {
        self.trial_index = trial_index;
        self
    }
}

/// Renders, sends, and parses one judgment.
fn run_judge(
    client: &ClientHandle,
    opts: &JudgeOptions,
    template_name: &str,
    template_source: &str,
    slots: &BTreeMap<&str, String>,
    metric_name: &str,
    scale: ScoreScale,
) -> Result<JudgeVerdict, JudgeError> {
    for (slot, value) in slots {
        if value.trim().is_empty() {
            return Err(JudgeError::InvalidArgument(format!(
                "metric `{metric_name}`: slot `{slot}` is empty"
            )));
        }
    }
    let template = PromptTemplate::parse(template_name, template_source)?;
    let messages = template.render(slots)?;
    let mut request = CompletionRequest::new(&opts.model_label, messages)
        .with_purpose(format!("judge_{metric_name}"))
        .with_temperature(opts.temperature);
    if let Some(budget) = template.max_tokens() {
        request = request.with_max_tokens(budget);
    }
    let raw = client.complete(&request)?;
    Ok(parse_verdict(metric_name, scale, &raw, opts.trial_index))
}

/// Relevance (1-5): would a farmer ask this, given the document metadata?
pub fn rate_question_relevance(
    client: &ClientHandle,
    opts: &JudgeOptions,
    question: &str,
    context_json: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let slots =
        BTreeMap::from([("question", question.to_string()), ("context", context_json.to_string())]);
    run_judge(
        client,
        opts,
        "question_relevance",
        QUESTION_RELEVANCE_TEMPLATE,
        &slots,
        "relevance",
        ScoreScale::OneToFive,
    )
}

/// Global relevance (1-5): would a farmer ask this, with no context at all?
pub fn rate_global_relevance(
    client: &ClientHandle,
    opts: &JudgeOptions,
    question: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let slots = BTreeMap::from([("question", question.to_string())]);
    run_judge(
        client,
        opts,
        "global_relevance",
        GLOBAL_RELEVANCE_TEMPLATE,
        &slots,
        "global_relevance",
        ScoreScale::OneToFive,
    )
}

/// Coverage (1-5): can the answer be extracted from the context and question?
pub fn rate_coverage(
    client: &ClientHandle,
    opts: &JudgeOptions,
    question: &str,
    answer: &str,
    context: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let slots = BTreeMap::from([
        ("question", question.to_string()),
        ("answer", answer.to_string()),
        ("context", context.to_string()),
    ]);
    run_judge(client, opts, "coverage", COVERAGE_TEMPLATE, &slots, "coverage", ScoreScale::OneToFive)
}

/// Fluency (1-5): is the question well-formed language?
pub fn rate_fluency(
    client: &ClientHandle,
    opts: &JudgeOptions,
    question: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let slots = BTreeMap::from([("question", question.to_string())]);
    run_judge(client, opts, "fluency", FLUENCY_TEMPLATE, &slots, "fluency", ScoreScale::OneToFive)
}

/// Answer coherence (1-5) against a reference answer, given context.
pub fn rate_answer_coherence(
    client: &ClientHandle,
    opts: &JudgeOptions,
    question: &str,
    reference: &str,
    answer: &str,
    context: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let slots = BTreeMap::from([
        ("question", question.to_string()),
        ("reference", reference.to_string()),
        ("answer", answer.to_string()),
        ("context", context.to_string()),
    ]);
    run_judge(
        client,
        opts,
        "answer_coherence",
        ANSWER_COHERENCE_TEMPLATE,
        &slots,
        "answer_coherence",
        ScoreScale::OneToFive,
    )
}

/// Answer relevance (1-5): does the answer address the question's main
/// aspects, based on the context?
pub fn rate_answer_relevance(
    client: &ClientHandle,
    opts: &JudgeOptions,
    question: &str,
    answer: &str,
    context: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let slots = BTreeMap::from([
        ("question", question.to_string()),
        ("answer", answer.to_string()),
        ("context", context.to_string()),
    ]);
    run_judge(
        client,
        opts,
        "answer_relevance",
        ANSWER_RELEVANCE_TEMPLATE,
        &slots,
        "answer_relevance",
        ScoreScale::OneToFive,
    )
}

/// Answer groundedness (1-5): does the answer follow logically from the
/// context?
pub fn rate_answer_groundedness(
    client: &ClientHandle,
    opts: &JudgeOptions,
    answer: &str,
    context: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let slots =
        BTreeMap::from([("answer", answer.to_string()), ("context", context.to_string())]);
    run_judge(
        client,
        opts,
        "answer_groundedness",
        ANSWER_GROUNDEDNESS_TEMPLATE,
        &slots,
        "answer_groundedness",
        ScoreScale::OneToFive,
    )
}

/// Generates an evaluation guideline listing what a correct answer to
/// `question` should contain, derived from the reference answer.
pub fn make_guideline(
    client: &ClientHandle,
    opts: &JudgeOptions,
    question: &str,
    reference: &str,
) -> Result<String, JudgeError> {
    if question.trim().is_empty() || reference.trim().is_empty() {
        return Err(JudgeError::InvalidArgument(
            "guideline generation needs a question and a reference answer".into(),
        ));
    }
    let template = PromptTemplate::parse("guideline_generation", GUIDELINE_GENERATION_TEMPLATE)?;
    let slots =
        BTreeMap::from([("question", question.to_string()), ("reference", reference.to_string())]);
    let messages = template.render(&slots)?;
    let mut request = CompletionRequest::new(&opts.model_label, messages)
        .with_purpose("make_guideline")
        .with_temperature(opts.temperature);
    if let Some(budget) = template.max_tokens() {
        request = request.with_max_tokens(budget);
    }
    let guideline = client.complete(&request)?;
    if guideline.trim().is_empty() {
        return Err(JudgeError::InvalidArgument("judge returned an empty guideline".into()));
    }
    Ok(guideline)
}

/// Guideline score (0-1): how well the answer fulfills the guideline.
pub fn score_with_guideline(
    client: &ClientHandle,
    opts: &JudgeOptions,
    guideline: &str,
    question: &str,
    answer: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let slots = BTreeMap::from([
        ("guideline", guideline.to_string()),
        ("question", question.to_string()),
        ("answer", answer.to_string()),
    ]);
    run_judge(
        client,
        opts,
        "guideline_scoring",
        GUIDELINE_SCORING_TEMPLATE,
        &slots,
        "guideline_score",
        ScoreScale::ZeroToOne,
    )
}

/// Succinctness (1 = verbose .. 5 = succinct) against a reference answer.
pub fn rate_succinctness(
    client: &ClientHandle,
    opts: &JudgeOptions,
    reference: &str,
    answer: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let slots =
        BTreeMap::from([("reference", reference.to_string()), ("answer", answer.to_string())]);
    run_judge(
        client,
        opts,
        "succinctness",
        SUCCINCTNESS_TEMPLATE,
        &slots,
        "succinctness",
        ScoreScale::OneToFive,
    )
}

/// Correctness (correct / partially correct / incorrect) against a
/// reference answer.
pub fn rate_correctness(
    client: &ClientHandle,
    opts: &JudgeOptions,
    question: &str,
    reference: &str,
    answer: &str,
) -> Result<JudgeVerdict, JudgeError> {
    let slots = BTreeMap::from([
        ("question", question.to_string()),
        ("reference", reference.to_string()),
        ("answer", answer.to_string()),
    ]);
    run_judge(
        client,
        opts,
        "correctness",
        CORRECTNESS_TEMPLATE,
        &slots,
        "correctness",
        ScoreScale::ThreeWay,
    )
}
