//! Repeated judging: the same judgment run several times, summarized.

use serde::{Deserialize, Serialize};

use super::scale::CorrectnessGrade;
use super::{JudgeError, JudgeVerdict};

/// How many times a judgment is repeated to estimate its spread.
pub const VARIANCE_TRIALS: usize = 5;

/// Spread summary over repeated trials of one judgment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub metric_name: String,
    pub trials: Vec<JudgeVerdict>,
    /// How many trials parsed.
    pub parsed: usize,
    /// Mean over parsed numeric scores; `None` for categorical metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Population standard deviation over parsed numeric scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stddev: Option<f64>,
    /// Majority grade over parsed categorical scores; ties resolve toward
    /// the worse grade.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub majority: Option<CorrectnessGrade>,
}

/// Population standard deviation (divides by n, not n-1): the trials are the
/// entire population of interest, not a sample of a larger one.
fn population_stddev(values: &[f64], mean: f64) -> f64 {
    let var =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// Runs `judge_once` [`VARIANCE_TRIALS`] times and summarizes.
///
/// Individual unparseable trials are kept (visible in `trials` with
/// `parse_ok == false`) and simply excluded from the statistics; *all*
/// trials unparseable is an error because the report would be vacuous.
pub fn judge_with_variance<F>(mut judge_once: F) -> Result<VarianceReport, JudgeError>
where
    F: FnMut(usize) -> Result<JudgeVerdict, JudgeError>,
{
    let mut trials = Vec::with_capacity(VARIANCE_TRIALS);
    for trial in 0..VARIANCE_TRIALS {
        trials.push(judge_once(trial)?);
    }
    summarize_trials(trials)
}

/// Builds a [`VarianceReport`] from already-collected trials.
pub fn summarize_trials(trials: Vec<JudgeVerdict>) -> Result<VarianceReport, JudgeError> {
    let first = trials.first().ok_or_else(|| {
        JudgeError::InvalidArgument("variance report needs at least one trial".into())
    })?;
    let metric_name = first.metric_name.clone();
    if let Some(differing) = trials.iter().find(|t| t.metric_name != metric_name) {
        return Err(JudgeError::InvalidArgument(format!(
            "mixed metrics in one variance report: `{}` and `{}`",
            metric_name, differing.metric_name
        )));
    }

    let numeric: Vec<f64> =
        trials.iter().filter_map(|t| t.score.and_then(|s| s.as_f64())).collect();
    let grades: Vec<CorrectnessGrade> =
        trials.iter().filter_map(|t| t.score.and_then(|s| s.as_grade())).collect();
    let parsed = trials.iter().filter(|t| t.parse_ok).count();
    if parsed == 0 {
        return Err(JudgeError::AllTrialsUnparseable {
            metric: metric_name,
            trials: trials.len(),
        });
    }

    let (mean, stddev) = if numeric.is_empty() {
        (None, None)
    } else {
        let mean = numeric.iter().sum::<f64>() / numeric.len() as f64;
        (Some(mean), Some(population_stddev(&numeric, mean)))
    };
    let majority = if grades.is_empty() {
        None
    } else {
        // Majority by count; ties toward the worse grade (its Ord is
        // worst-first, so `min` of tied grades is the worse one).
        let mut counts: Vec<(CorrectnessGrade, usize)> = Vec::new();
        for grade in &grades {
            match counts.iter_mut().find(|(g, _)| g == grade) {
                Some((_, n)) => *n += 1,
                None => counts.push((*grade, 1)),
            }
        }
        let best = counts
            .iter()
            .copied()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(g, _)| g);
        best
    };

    Ok(VarianceReport { metric_name, trials, parsed, mean, stddev, majority })
}
