//! Completion parsing for judge verdicts.
//!
//! The prompts ask for a `Score:` line (or a JSON object), but sampled
//! judges drift, so parsing tries progressively looser forms and gives up
//! cleanly: a verdict that cannot be read *on the metric's scale* comes back
//! with `score == None`, `parse_ok == false`, never a clamped value.

use std::sync::OnceLock;

use regex::Regex;

use super::scale::{CorrectnessGrade, ScoreScale, ScoreValue};
use super::JudgeVerdict;

fn score_line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?im)^\s*\**\s*(?:score|rating|grade)\s*[:=]\s*(.+)$").expect("score regex")
    })
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?").expect("number regex"))
}

/// Extracts the first number in `text`, if any.
fn first_number(text: &str) -> Option<f64> {
    number_re().find(text).and_then(|m| m.as_str().parse().ok())
}

/// Finds a categorical grade in `text`. "partially correct" is probed
/// before "incorrect", and "incorrect" before "correct", because each later
/// word is a substring of an earlier phrase.
fn find_grade(text: &str) -> Option<CorrectnessGrade> {
    let lower = text.to_ascii_lowercase();
    if lower.contains("partially correct") || lower.contains("partially_correct") {
        Some(CorrectnessGrade::PartiallyCorrect)
    } else if lower.contains("incorrect") {
        Some(CorrectnessGrade::Incorrect)
    } else if lower.contains("correct") {
        Some(CorrectnessGrade::Correct)
    } else {
        None
    }
}

/// Interprets a candidate score fragment on the given scale.
fn admit(scale: ScoreScale, fragment: &str) -> Option<ScoreValue> {
    match scale {
        ScoreScale::ThreeWay => find_grade(fragment).map(ScoreValue::Grade),
        _ => first_number(fragment).and_then(|v| scale.admit_numeric(v)),
    }
}

/// Attempts the JSON form: the first `{...}` object with a `score` field.
fn try_json(scale: ScoreScale, raw: &str) -> Option<(ScoreValue, String)> {
    let start = raw.find('{')?;
    let end = raw.rfind('}')?;
    if end <= start {
        return None;
    }
    let value: serde_json::Value = serde_json::from_str(&raw[start..=end]).ok()?;
    let object = value.as_object()?;
    let score_field = object.get("score")?;
    let score = match score_field {
        serde_json::Value::Number(n) => {
            let v = n.as_f64()?;
            match scale {
                ScoreScale::ThreeWay => None,
                _ => scale.admit_numeric(v),
            }
        }
        serde_json::Value::String(s) => admit(scale, s),
        _ => None,
    }?;
    let explanation = object
        .get("explanation")
        .and_then(|e| e.as_str())
        .unwrap_or_default()
        .to_string();
    Some((score, explanation))
}

/// Attempts the `Score: X` line form, explanation = everything after it.
fn try_score_line(scale: ScoreScale, raw: &str) -> Option<(ScoreValue, String)> {
    let caps = score_line_re().captures(raw)?;
    let matched = caps.get(0).expect("whole match");
    let fragment = caps.get(1).expect("value group").as_str();
    let score = admit(scale, fragment)?;
    let after = raw[matched.end()..].trim();
    let before = raw[..matched.start()].trim();
    let explanation = if !after.is_empty() { after } else { before };
    Some((score, explanation.to_string()))
}

/// Attempts the leading bare value form ("4 - clear and fluent").
fn try_leading(scale: ScoreScale, raw: &str) -> Option<(ScoreValue, String)> {
    let trimmed = raw.trim_start();
    let score = match scale {
        ScoreScale::ThreeWay => {
            // Categorical gives some slack: the grade may appear anywhere.
            find_grade(raw).map(ScoreValue::Grade)?
        }
        _ => {
            let m = number_re().find(trimmed)?;
            if m.start() != 0 {
                return None;
            }
            let v: f64 = m.as_str().parse().ok()?;
            scale.admit_numeric(v)?
        }
    };
    let explanation = match scale {
        ScoreScale::ThreeWay => raw.trim().to_string(),
        _ => {
            let rest = &trimmed[number_re().find(trimmed).expect("re-find").end()..];
            rest.trim_start().trim_start_matches(['-', ':', '.', ',', ')', '/']).trim().to_string()
        }
    };
    Some((score, explanation))
}

/// Parses one judge completion into a [`JudgeVerdict`].
pub fn parse_verdict(
    metric_name: &str,
    scale: ScoreScale,
    raw: &str,
    trial_index: usize,
) -> JudgeVerdict {
    let parsed = try_json(scale, raw)
        .or_else(|| try_score_line(scale, raw))
        .or_else(|| try_leading(scale, raw));
    match parsed {
        Some((score, explanation)) => JudgeVerdict {
            metric_name: metric_name.to_string(),
            scale,
            score: Some(score),
            explanation,
            raw_response: raw.to_string(),
            parse_ok: true,
            trial_index,
        },
        None => JudgeVerdict {
            metric_name: metric_name.to_string(),
            scale,
            score: None,
            explanation: String::new(),
            raw_response: raw.to_string(),
            parse_ok: false,
            trial_index,
        },
    }
}
