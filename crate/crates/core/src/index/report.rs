//! CSV and Markdown rendering for recall and ablation measurements.

use super::{AblationPoint, RecallReport};

/// CSV with columns `k,total,hits,recall` (one row per report, given order).
pub fn recall_csv(reports: &[RecallReport]) -> String {
    let mut out = String::from("k,total,hits,recall\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{:.6}\n",
            r.k, r.total_questions, r.hits, r.recall
        ));
    }
    out
}

/// Markdown table of recall per k (percentages with one decimal).
pub fn recall_markdown(reports: &[RecallReport]) -> String {
    let mut out = String::from("| Top-k | Hits | Total | Recall |\n|---:|---:|---:|---:|\n");
    for r in reports {
        out.push_str(&format!(
            "| {} | {} | {} | {:.1}% |\n",
            r.k,
            r.hits,
            r.total_questions,
            r.recall * 100.0
        ));
    }
    out
}

/// CSV with columns `index_size,total,hits,recall`.
pub fn ablation_csv(points: &[AblationPoint]) -> String {
    let mut out = String::from("index_size,total,hits,recall\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{:.6}\n",
            p.index_size, p.total_questions, p.hits, p.recall
        ));
    }
    out
}

/// Markdown table of recall against index size.
pub fn ablation_markdown(points: &[AblationPoint]) -> String {
    let mut out =
        String::from("| Index size | Hits | Total | Recall |\n|---:|---:|---:|---:|\n");
    for p in points {
        out.push_str(&format!(
            "| {} | {} | {} | {:.1}% |\n",
            p.index_size,
            p.hits,
            p.total_questions,
            p.recall * 100.0
        ));
    }
    out
}
