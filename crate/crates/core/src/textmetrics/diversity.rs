//! Question-set diversity: average pairwise word-mover distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::text::token_count;

use super::{wmd, MetricsError, WordEmbeddingTable};

/// Symmetric pairwise-distance matrix with a zero diagonal, labeled by
/// question id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    labels: Vec<String>,
    /// Row-major `n × n` values.
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    /// Mean of the `n(n-1)` off-diagonal entries.
    pub fn off_diagonal_mean(&self) -> f64 {
        let n = self.n();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sum += self.get(i, j);
                }
            }
        }
        sum / (n * (n - 1)) as f64
    }
}

/// Diversity of a labeled question set: the off-diagonal average of the
/// pairwise WMD matrix. Higher means the questions are more varied.
///
/// Needs at least two questions. Pairs are computed in parallel (each pair
/// once, mirrored into both cells) — the output is deterministic because
/// every value lands in its indexed slot.
pub fn diversity_score_with_labels(
    questions: &[(String, String)],
    table: &WordEmbeddingTable,
) -> Result<(f64, SimilarityMatrix), MetricsError> {
    let n = questions.len();
    if n < 2 {
        return Err(MetricsError::InvalidArgument(format!(
            "diversity needs at least two questions, got {n}"
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let distances: Vec<((usize, usize), f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            wmd(&questions[i].1, &questions[j].1, table).map(|(d, _)| ((i, j), d))
        })
        .collect::<Result<_, _>>()?;

    let mut values = vec![0.0f64; n * n];
    for ((i, j), d) in distances {
        values[i * n + j] = d;
        values[j * n + i] = d;
    }
    let matrix = SimilarityMatrix {
        labels: questions.iter().map(|(id, _)| id.clone()).collect(),
        values,
    };
    Ok((matrix.off_diagonal_mean(), matrix))
}

/// [`diversity_score_with_labels`] with positional labels `q0, q1, …`.
pub fn diversity_score(
    questions: &[String],
    table: &WordEmbeddingTable,
) -> Result<(f64, SimilarityMatrix), MetricsError> {
    let labeled: Vec<(String, String)> = questions
        .iter()
        .enumerate()
        .map(|(i, q)| (format!("q{i}"), q.clone()))
        .collect();
    diversity_score_with_labels(&labeled, table)
}

/// Token counts for the "details" metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetailCounts {
    pub question_tokens: usize,
    pub answer_tokens: usize,
}

/// Word-token counts of a question and its answer.
pub fn details(question: &str, answer: &str) -> DetailCounts {
    DetailCounts {
        question_tokens: token_count(question),
        answer_tokens: token_count(answer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textmetrics::union_vocab;

    fn table_for(questions: &[&str]) -> WordEmbeddingTable {
        WordEmbeddingTable::synthetic(union_vocab(questions.iter().copied()), 16, 9)
    }

    #[test]
    fn identical_questions_score_zero() {
        let qs = vec!["what is wheat".to_string(); 3];
        let table = table_for(&["what is wheat"]);
        let (score, matrix) = diversity_score(&qs, &table).unwrap();
        assert_eq!(score, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(matrix.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn two_questions_equal_their_wmd() {
        let a = "when should winter wheat be planted";
        let b = "how much irrigation do apples need";
        let table = table_for(&[a, b]);
        let (score, matrix) = diversity_score(&[a.to_string(), b.to_string()], &table).unwrap();
        let (direct, _) = wmd(a, b, &table).unwrap();
        assert!((score - direct).abs() < 1e-12);
        assert_eq!(matrix.get(0, 1), matrix.get(1, 0));
        assert_eq!(matrix.get(0, 0), 0.0);
    }

    #[test]
    fn matrix_is_symmetric_with_zero_diagonal() {
        let qs: Vec<String> = [
            "what nitrogen rate suits winter wheat",
            "how do you scout for stripe rust",
            "when are apples thinned in orchards",
            "what water depth do rice paddies use",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let refs: Vec<&str> = qs.iter().map(String::as_str).collect();
        let table = table_for(&refs);
        let (score, matrix) = diversity_score(&qs, &table).unwrap();
        let n = matrix.n();
        for i in 0..n {
            assert_eq!(matrix.get(i, i), 0.0);
            for j in 0..n {
                assert_eq!(matrix.get(i, j), matrix.get(j, i));
            }
        }
        // The score is exactly the off-diagonal mean.
        assert!((score - matrix.off_diagonal_mean()).abs() < 1e-15);
        assert!(score > 0.0);
    }

    #[test]
    fn labels_are_preserved() {
        let labeled = vec![
            ("qa-1".to_string(), "what is wheat".to_string()),
            ("qa-2".to_string(), "what is barley".to_string()),
        ];
        let table = table_for(&["what is wheat", "what is barley"]);
        let (_, matrix) = diversity_score_with_labels(&labeled, &table).unwrap();
        assert_eq!(matrix.labels(), &["qa-1".to_string(), "qa-2".to_string()]);
    }

    #[test]
    fn single_question_is_an_error() {
        let table = table_for(&["solo"]);
        assert!(diversity_score(&["solo".to_string()], &table).is_err());
    }

    #[test]
    fn details_counts_tokens() {
        let d = details("What rate? Why?", "Use 90 lbs N/acre in spring.");
        assert_eq!(d.question_tokens, 3);
        assert_eq!(d.answer_tokens, 7);
    }
}
