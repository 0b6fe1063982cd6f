//! Aggregation of verdicts across a dataset, plus CSV/Markdown rendering.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scale::{CorrectnessGrade, ScoreScale};
use super::JudgeVerdict;

/// Aggregate of all verdicts for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric_name: String,
    pub scale: ScoreScale,
    /// Total verdicts seen, parseable or not.
    pub items: usize,
    /// How many of them parsed.
    pub parsed: usize,
    /// Mean of parsed numeric scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Population standard deviation of parsed numeric scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stddev: Option<f64>,
    /// Scale-dependent accuracy: the mean for 0-1 scores, the fraction
    /// graded fully correct for 3-way grades, absent for 1-5 ratings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    /// Grade tally for 3-way metrics.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grade_counts: BTreeMap<String, usize>,
}

/// Groups verdicts by metric name and summarizes each group.
///
/// Metrics appear in first-seen order. Unparseable verdicts count toward
/// `items` but contribute nothing else.
pub fn aggregate_report(verdicts: &[JudgeVerdict]) -> Vec<MetricSummary> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&JudgeVerdict>> = BTreeMap::new();
    for verdict in verdicts {
        let entry = groups.entry(verdict.metric_name.as_str()).or_default();
        if entry.is_empty() {
            order.push(verdict.metric_name.as_str());
        }
        entry.push(verdict);
    }

    order
        .into_iter()
        .map(|metric| {
            let group = &groups[metric];
            let scale = group[0].scale;
            let numeric: Vec<f64> =
                group.iter().filter_map(|v| v.score.and_then(|s| s.as_f64())).collect();
            let grades: Vec<CorrectnessGrade> =
                group.iter().filter_map(|v| v.score.and_then(|s| s.as_grade())).collect();

            let mean = (!numeric.is_empty())
                .then(|| numeric.iter().sum::<f64>() / numeric.len() as f64);
            let stddev = mean.map(|m| {
                (numeric.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / numeric.len() as f64)
                    .sqrt()
            });
            let mut grade_counts: BTreeMap<String, usize> = BTreeMap::new();
            for grade in &grades {
                *grade_counts.entry(grade.label().to_string()).or_insert(0) += 1;
            }
            let accuracy = match scale {
                ScoreScale::ZeroToOne => mean,
                ScoreScale::ThreeWay => (!grades.is_empty()).then(|| {
                    grades.iter().filter(|g| **g == CorrectnessGrade::Correct).count() as f64
                        / grades.len() as f64
                }),
                ScoreScale::OneToFive => None,
            };

            MetricSummary {
                metric_name: metric.to_string(),
                scale,
                items: group.len(),
                parsed: group.iter().filter(|v| v.parse_ok).count(),
                mean,
                stddev,
                accuracy,
                grade_counts,
            }
        })
        .collect()
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.4}")).unwrap_or_default()
}

/// Renders summaries as CSV (header always present).
pub fn metrics_csv(summaries: &[MetricSummary]) -> String {
    let mut out = String::from("metric,scale,items,parsed,mean,stddev,accuracy\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.metric_name,
            s.scale.label(),
            s.items,
            s.parsed,
            fmt_opt(s.mean),
            fmt_opt(s.stddev),
            fmt_opt(s.accuracy),
        ));
    }
    out
}

/// Renders summaries as a Markdown table.
pub fn metrics_markdown(summaries: &[MetricSummary]) -> String {
    let mut out = String::from(
        "| Metric | Scale | Items | Parsed | Mean | Stddev | Accuracy |\n\
         |--------|-------|-------|--------|------|--------|----------|\n",
    );
    for s in summaries {
        let dash = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} |\n",
            s.metric_name,
            s.scale.label(),
            s.items,
            s.parsed,
            dash(s.mean),
            dash(s.stddev),
            dash(s.accuracy),
        ));
    }
    out
}
