//! Supporting-context extraction: tag a section with the locations, crops,
//! cattle, and diseases it mentions.
//!
//! The tagging prompt asks eight questions — four Yes/No and four answered
//! with a python-style list — and the parser here recovers a
//! [`SupportingContext`] from free-form completions. If parsing fails, the
//! request is retried once with a stricter formatting instruction appended;
//! a second failure is a loud [`GenesisError::ContextParse`].

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::llmclient::{ChatClient, ClientHandle, CompletionRequest};

use super::{GenesisError, PromptTemplate};

/// Default template for the tagging prompt.
pub const SUPPORTING_CONTEXT_TEMPLATE: &str = include_str!("templates/supporting_context.txt");

/// Instruction appended on the retry after the first unparseable completion.
const REFORMAT_INSTRUCTION: &str = "Your previous reply could not be parsed. Answer again. \
Give exactly eight lines: lines 1-4 must each be exactly Yes or No, and lines 5-8 must each \
be a python list of double-quoted strings such as [\"Washington\", \"Oregon\"] or [].";

/// What a section mentions, per the tagging prompt's eight questions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportingContext {
    pub mentions_location: bool,
    pub mentions_crop: bool,
    pub mentions_cattle: bool,
    pub mentions_disease: bool,
    #[serde(default)]
    pub locations: Vec<String>,
    #[serde(default)]
    pub crops: Vec<String>,
    #[serde(default)]
    pub cattle: Vec<String>,
    #[serde(default)]
    pub diseases: Vec<String>,
}

impl SupportingContext {
    /// Drops list entries whose Yes/No gate said No, so the two halves of the
    /// completion cannot contradict each other downstream.
    pub fn normalize(&mut self) {
        if !self.mentions_location {
            self.locations.clear();
        }
        if !self.mentions_crop {
            self.crops.clear();
        }
        if !self.mentions_cattle {
            self.cattle.clear();
        }
        if !self.mentions_disease {
            self.diseases.clear();
        }
    }

    /// Compact JSON for the question-generation metadata slot.
    pub fn to_compact_json(&self) -> String {
        serde_json::to_string(self).expect("supporting context serializes")
    }

    /// True when nothing at all was tagged.
    pub fn is_empty(&self) -> bool {
        !(self.mentions_location || self.mentions_crop || self.mentions_cattle
            || self.mentions_disease)
    }
}

fn list_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[[^\[\]]*\]").expect("list regex compiles"))
}

/// Strips leading enumeration markers ("3.", "7)", "-", "Q5:") from a line.
fn strip_numbering(line: &str) -> &str {
    let trimmed = line.trim_start();
    let trimmed = trimmed.strip_prefix(|c: char| c == '-' || c == '*').unwrap_or(trimmed);
    let mut rest = trimmed.trim_start();
    let digits: usize = rest.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let after = &rest[digits..];
        if let Some(stripped) =
            after.strip_prefix('.').or_else(|| after.strip_prefix(')')).or_else(|| after.strip_prefix(':'))
        {
            rest = stripped;
        }
    }
    rest.trim_start()
}

/// Splits a bracketed python-ish list into cleaned items.
fn parse_list(body: &str) -> Vec<String> {
    let inner = body.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(|item| item.trim().trim_matches(|c| c == '"' || c == '\'').trim().to_string())
        .filter(|item| !item.is_empty())
        .collect()
}

/// Parses a tagging completion into a [`SupportingContext`].
///
/// Recognizes, in line order: the first four lines that begin (after any
/// numbering) with Yes or No become the four booleans, and the first four
/// bracketed lists anywhere in the text become the four lists. Returns `None`
/// unless all four booleans were found.
pub fn parse_supporting_context(raw: &str) -> Option<SupportingContext> {
    let mut bools: Vec<bool> = Vec::with_capacity(4);
    for line in raw.lines() {
        if bools.len() == 4 {
            break;
        }
        let rest = strip_numbering(line);
        let lower = rest.to_ascii_lowercase();
        if lower.starts_with("yes") {
            bools.push(true);
        } else if lower.starts_with("no") {
            bools.push(false);
        }
    }
    if bools.len() < 4 {
        return None;
    }

    let mut lists: Vec<Vec<String>> = list_re()
        .find_iter(raw)
        .take(4)
        .map(|m| parse_list(m.as_str()))
        .collect();
    while lists.len() < 4 {
        lists.push(Vec::new());
    }
    let diseases = lists.pop().expect("padded to 4");
    let cattle = lists.pop().expect("padded to 4");
    let crops = lists.pop().expect("padded to 4");
    let locations = lists.pop().expect("padded to 4");

    let mut ctx = SupportingContext {
        mentions_location: bools[0],
        mentions_crop: bools[1],
        mentions_cattle: bools[2],
        mentions_disease: bools[3],
        locations,
        crops,
        cattle,
        diseases,
    };
    ctx.normalize();
    Some(ctx)
}

/// Runs the tagging prompt over `section_text` and parses the result.
///
/// Retries once with [`REFORMAT_INSTRUCTION`] appended if the first
/// completion cannot be parsed.
pub fn extract_supporting_context(
    client: &ClientHandle,
    model_label: &str,
    template: &PromptTemplate,
    section_text: &str,
) -> Result<SupportingContext, GenesisError> {
    if section_text.trim().is_empty() {
        return Err(GenesisError::InvalidArgument(
            "cannot tag an empty section".into(),
        ));
    }
    let mut slots: BTreeMap<&str, String> = BTreeMap::new();
    slots.insert("section", section_text.to_string());
    let messages = template.render(&slots)?;

    let mut request = CompletionRequest::new(model_label, messages.clone())
        .with_purpose("tag_context");
    if let Some(budget) = template.max_tokens() {
        request = request.with_max_tokens(budget);
    }
    let first = client.complete(&request)?;
    if let Some(ctx) = parse_supporting_context(&first) {
        return Ok(ctx);
    }
    log::warn!("supporting-context completion unparseable; retrying with stricter format");

    let mut retry_messages = messages;
    retry_messages.push(crate::llmclient::ChatMessage::user(REFORMAT_INSTRUCTION));
    let mut retry = CompletionRequest::new(model_label, retry_messages).with_purpose("tag_context");
    if let Some(budget) = template.max_tokens() {
        retry = retry.with_max_tokens(budget);
    }
    let second = client.complete(&retry)?;
    parse_supporting_context(&second).ok_or(GenesisError::ContextParse { raw: second })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llmclient::{ClientHandle, ScriptedStub};

    const WELL_FORMED: &str = "1. Yes\n2. Yes\n3. No\n4. No\n5. [\"Washington\", \"Yakima Valley\"]\n6. [\"wheat\", \"apples\"]\n7. []\n8. []";

    #[test]
    fn parses_well_formed_completion() {
        let ctx = parse_supporting_context(WELL_FORMED).unwrap();
        assert!(ctx.mentions_location);
        assert!(ctx.mentions_crop);
        assert!(!ctx.mentions_cattle);
        assert!(!ctx.mentions_disease);
        assert_eq!(ctx.locations, vec!["Washington", "Yakima Valley"]);
        assert_eq!(ctx.crops, vec!["wheat", "apples"]);
        assert!(ctx.cattle.is_empty());
        assert!(ctx.diseases.is_empty());
    }

    #[test]
    fn normalize_clears_lists_gated_off() {
        let raw = "No\nNo\nNo\nNo\n[\"Kansas\"]\n['corn']\n[\"Angus\"]\n[\"rust\"]";
        let ctx = parse_supporting_context(raw).unwrap();
        assert!(ctx.is_empty());
        assert!(ctx.locations.is_empty());
        assert!(ctx.crops.is_empty());
        assert!(ctx.cattle.is_empty());
        assert!(ctx.diseases.is_empty());
    }

    #[test]
    fn tolerates_prose_and_mixed_markers() {
        let raw = "Here are my answers:\n1) Yes, it mentions Idaho.\n2: No specific crop.\n- Yes\n4. No\nLocations: [\"Idaho\", \"United States\"]\n[]\nThe cattle list is [\"Holstein\"] as requested.\n[]";
        let ctx = parse_supporting_context(raw).unwrap();
        assert!(ctx.mentions_location);
        assert!(!ctx.mentions_crop);
        assert!(ctx.mentions_cattle);
        assert!(!ctx.mentions_disease);
        assert_eq!(ctx.locations, vec!["Idaho", "United States"]);
        assert_eq!(ctx.cattle, vec!["Holstein"]);
    }

    #[test]
    fn missing_booleans_is_unparseable() {
        assert!(parse_supporting_context("Yes\nNo\n[\"a\"]").is_none());
        assert!(parse_supporting_context("").is_none());
        assert!(parse_supporting_context("I cannot answer that.").is_none());
    }

    #[test]
    fn single_quoted_lists_are_accepted() {
        let raw = "Yes\nYes\nNo\nNo\n['Oregon']\n['pears', 'cherries']\n[]\n[]";
        let ctx = parse_supporting_context(raw).unwrap();
        assert_eq!(ctx.locations, vec!["Oregon"]);
        assert_eq!(ctx.crops, vec!["pears", "cherries"]);
    }

    #[test]
    fn extract_retries_once_then_succeeds() {
        let stub = ScriptedStub::new(vec![
            "gibberish with no structure".to_string(),
            WELL_FORMED.to_string(),
        ]);
        let client = ClientHandle::for_stub(Box::new(stub));
        let template = PromptTemplate::parse("tag", SUPPORTING_CONTEXT_TEMPLATE).unwrap();
        let ctx = extract_supporting_context(&client, "stub", &template, "Wheat in Washington.")
            .unwrap();
        assert!(ctx.mentions_location);
        assert_eq!(client.ledger().total_attempts(), 2);
    }

    #[test]
    fn extract_fails_loudly_after_two_bad_completions() {
        let stub = ScriptedStub::cycling(vec!["nope".to_string()]);
        let client = ClientHandle::for_stub(Box::new(stub));
        let template = PromptTemplate::parse("tag", SUPPORTING_CONTEXT_TEMPLATE).unwrap();
        let err = extract_supporting_context(&client, "stub", &template, "Some text.")
            .unwrap_err();
        match err {
            GenesisError::ContextParse { raw } => assert_eq!(raw, "nope"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn default_template_has_expected_slots() {
        let template = PromptTemplate::parse("tag", SUPPORTING_CONTEXT_TEMPLATE).unwrap();
        assert_eq!(template.required_slots(), vec!["section".to_string()]);
        assert_eq!(template.max_tokens(), Some(500));
    }
}
