//! Smoothed word distributions and KL divergence (the "overlap" metric).

use std::collections::BTreeMap;

use crate::text::lower_tokens;

use super::MetricsError;

/// A probability distribution over a sorted vocabulary.
///
/// Invariants, checked at construction: vocabulary sorted and duplicate-free,
/// probabilities strictly positive and finite, and summing to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct WordDistribution {
    vocab: Vec<String>,
    probs: Vec<f64>,
}

impl WordDistribution {
    /// Builds a distribution from explicit probabilities.
    pub fn from_probs(vocab: Vec<String>, probs: Vec<f64>) -> Result<Self, MetricsError> {
        if vocab.is_empty() {
            return Err(MetricsError::InvalidArgument("vocabulary is empty".into()));
        }
        if vocab.len() != probs.len() {
            return Err(MetricsError::InvalidArgument(format!(
                "{} vocabulary entries but {} probabilities",
                vocab.len(),
                probs.len()
            )));
        }
        if vocab.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricsError::InvalidArgument(
                "vocabulary must be sorted and duplicate-free".into(),
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(MetricsError::InvalidArgument(
                "probabilities must be finite and strictly positive".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MetricsError::InvalidArgument(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { vocab, probs })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Sorted union of the lowercase token sets of `texts`.
pub fn union_vocab<'a>(texts: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut vocab: Vec<String> = texts
        .into_iter()
        .flat_map(|t| lower_tokens(t))
        .collect();
    vocab.sort_unstable();
    vocab.dedup();
    vocab
}

/// Laplace-smoothed word distribution of `text` over `vocab`.
///
/// `p_i = (count_i + smoothing) / (N + smoothing · |V|)` where `N` is the
/// total count of tokens that fall inside the vocabulary; tokens outside it
/// are ignored (build `vocab` as the union over all compared texts to avoid
/// that). `smoothing` must be > 0, so every vocabulary word keeps positive
/// mass and KL stays finite; an empty text yields the uniform distribution.
pub fn word_distribution(
    text: &str,
    vocab: &[String],
    smoothing: f64,
) -> Result<WordDistribution, MetricsError> {
    if vocab.is_empty() {
        return Err(MetricsError::InvalidArgument("vocabulary is empty".into()));
    }
    if !(smoothing > 0.0) || !smoothing.is_finite() {
        return Err(MetricsError::InvalidArgument(format!(
            "smoothing must be positive and finite, got {smoothing}"
        )));
    }
    let positions: BTreeMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    if positions.len() != vocab.len() {
        return Err(MetricsError::InvalidArgument(
            "vocabulary contains duplicates".into(),
        ));
    }
    let mut counts = vec![0u64; vocab.len()];
    let mut total = 0u64;
    for token in lower_tokens(text) {
        if let Some(&i) = positions.get(token.as_str()) {
            counts[i] += 1;
            total += 1;
        }
    }
    let denom = total as f64 + smoothing * vocab.len() as f64;
    let probs: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64 + smoothing) / denom)
        .collect();
    let mut sorted = vocab.to_vec();
    sorted.sort_unstable();
    if sorted != vocab {
        return Err(MetricsError::InvalidArgument(
            "vocabulary must be sorted".into(),
        ));
    }
    WordDistribution::from_probs(sorted, probs)
}

/// KL divergence `D(p ‖ q) = Σ p_i · ln(p_i / q_i)` in nats.
///
/// Both distributions must share the same vocabulary (same words, same
/// order). Smoothing guarantees `q_i > 0`, so the sum is always finite.
/// `D(p ‖ p)` is exactly 0; a sub-1e-12 negative from floating-point rounding
/// is snapped to 0, anything more negative is reported as-is (it would mean a
/// real bug, and tests assert non-negativity).
pub fn kl_divergence(p: &WordDistribution, q: &WordDistribution) -> Result<f64, MetricsError> {
    if p.vocab != q.vocab {
        return Err(MetricsError::VocabMismatch(format!(
            "distributions have different vocabularies ({} vs {} words)",
            p.vocab.len(),
            q.vocab.len()
        )));
    }
    let mut sum = 0.0f64;
    for (pi, qi) in p.probs.iter().zip(&q.probs) {
        sum += pi * (pi / qi).ln();
    }
    if sum < 0.0 && sum > -1e-12 {
        return Ok(0.0);
    }
    Ok(sum)
}

/// Which direction the overlap KL is measured in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlDirection {
    /// `D(source ‖ questions)`: how much of the source's word mass the
    /// questions fail to cover. This is the default.
    #[default]
    SourceToQuestions,
    /// `D(questions ‖ source)`: how much the questions stray from the source.
    QuestionsToSource,
}

/// Parameters for [`overlap_score_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapOptions {
    /// Laplace smoothing constant (add-one by default).
    pub smoothing: f64,
    pub direction: KlDirection,
}

impl Default for OverlapOptions {
    fn default() -> Self {
        Self {
            smoothing: 1.0,
            direction: KlDirection::default(),
        }
    }
}

/// Overlap between a source text and its generated questions, with defaults:
/// add-one smoothing over the union vocabulary, `D(source ‖ questions)`.
/// Lower is better (the questions reuse the source's vocabulary).
pub fn overlap_score(source_text: &str, questions: &[String]) -> Result<f64, MetricsError> {
    overlap_score_with(source_text, questions, OverlapOptions::default())
}

/// [`overlap_score`] with explicit smoothing and direction.
pub fn overlap_score_with(
    source_text: &str,
    questions: &[String],
    opts: OverlapOptions,
) -> Result<f64, MetricsError> {
    if lower_tokens(source_text).is_empty() {
        return Err(MetricsError::InvalidArgument(
            "source text has no word tokens".into(),
        ));
    }
    if questions.is_empty() {
        return Err(MetricsError::InvalidArgument(
            "questions list is empty".into(),
        ));
    }
    let questions_text = questions.join(" ");
    let vocab = union_vocab([source_text, questions_text.as_str()]);
    let p_source = word_distribution(source_text, &vocab, opts.smoothing)?;
    let p_questions = word_distribution(&questions_text, &vocab, opts.smoothing)?;
    match opts.direction {
        KlDirection::SourceToQuestions => kl_divergence(&p_source, &p_questions),
        KlDirection::QuestionsToSource => kl_divergence(&p_questions, &p_source),
    }
}
