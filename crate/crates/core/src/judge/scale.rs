//! Score scales and values.

use serde::{Deserialize, Serialize};

/// What range/kind of score a metric uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreScale {
    /// Integer grades 1..=5 (integral floats like `4.0` are accepted;
    /// `4.5` is not a valid grade and fails parsing).
    OneToFive,
    /// A real score in [0, 1].
    ZeroToOne,
    /// Categorical: correct / partially correct / incorrect.
    ThreeWay,
}

impl ScoreScale {
    /// Checks `value` against this scale, returning the canonical
    /// [`ScoreValue`] or `None` if out of range or of the wrong kind.
    pub fn admit_numeric(self, value: f64) -> Option<ScoreValue> {
        if !value.is_finite() {
            return None;
        }
        match self {
            ScoreScale::OneToFive => {
                ((1.0..=5.0).contains(&value) && value.fract() == 0.0)
                    .then_some(ScoreValue::Numeric(value))
            }
            ScoreScale::ZeroToOne => {
                (0.0..=1.0).contains(&value).then_some(ScoreValue::Numeric(value))
            }
            ScoreScale::ThreeWay => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ScoreScale::OneToFive => "1-5",
            ScoreScale::ZeroToOne => "0-1",
            ScoreScale::ThreeWay => "3-way",
        }
    }
}

/// Categorical correctness grade.
///
/// The variant order is worst-to-best so that `Ord::min` (used for tie
/// breaking in majority votes) lands on the *worse* grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectnessGrade {
    Incorrect,
    PartiallyCorrect,
    Correct,
}

impl CorrectnessGrade {
    pub fn label(self) -> &'static str {
        match self {
            CorrectnessGrade::Incorrect => "incorrect",
            CorrectnessGrade::PartiallyCorrect => "partially_correct",
            CorrectnessGrade::Correct => "correct",
        }
    }
}

/// A parsed score: numeric for graded scales, a grade for the categorical
/// one. Serialized untagged so artifacts read naturally (`4.0`, `"correct"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScoreValue {
    Numeric(f64),
    Grade(CorrectnessGrade),
}

impl ScoreValue {
    /// Numeric view; grades have none.
    pub fn as_f64(self) -> Option<f64> {
        match self {
            ScoreValue::Numeric(v) => Some(v),
            ScoreValue::Grade(_) => None,
        }
    }

    pub fn as_grade(self) -> Option<CorrectnessGrade> {
        match self {
            ScoreValue::Numeric(_) => None,
            ScoreValue::Grade(g) => Some(g),
        }
    }
}
