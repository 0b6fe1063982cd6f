//! Minimal prompt-template engine.
//!
//! Templates are plain text with three light conventions borrowed from
//! guidance-style prompt files:
//!
//! * role blocks — `{{#system~}} ... {{~/system}}` (also `user` and
//!   `assistant`) map to chat messages; text outside any block in a file that
//!   has blocks is ignored. A file with no blocks becomes a single user
//!   message.
//! * slots — `{{name}}` must be supplied at render time (missing ones are an
//!   error); `{name}` is spliced when supplied and left verbatim otherwise,
//!   which lets templates embed literal braces such as JSON examples.
//! * generation markers — an assistant block containing
//!   `{{gen 'label' max_tokens=N}}` does not become a message; it only
//!   carries the token budget for the completion.
//!
//! Lines starting with `#!` are template comments and are stripped before
//! parsing.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use crate::llmclient::ChatMessage;

use super::GenesisError;

/// A parsed prompt template: ordered chat messages with named slots.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    name: String,
    /// (role, body) in file order; `gen`-only assistant blocks are excluded.
    segments: Vec<(TemplateRole, String)>,
    /// Token budget taken from a `{{gen ... max_tokens=N}}` marker, if any.
    max_tokens: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TemplateRole {
    System,
    User,
    Assistant,
}

fn block_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?s)\{\{#(system|user|assistant)~\}\}(.*?)\{\{~/(system|user|assistant)\}\}")
            .expect("block regex compiles")
    })
}

fn gen_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\{\{gen\s+'[^']*'(?:\s+max_tokens=(\d+))?[^}]*\}\}")
            .expect("gen regex compiles")
    })
}

fn slot_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Double-brace slots are required; single-brace are optional. Matching
    // both in one pass keeps `{{x}}` from being half-consumed as `{x}`.
    RE.get_or_init(|| Regex::new(r"\{\{(\w+)\}\}|\{(\w+)\}").expect("slot regex compiles"))
}

impl PromptTemplate {
    /// Parses template source. `name` is used only in error messages.
    pub fn parse(name: &str, source: &str) -> Result<Self, GenesisError> {
        let stripped: String = source
            .lines()
            .filter(|line| !line.trim_start().starts_with("#!"))
            .collect::<Vec<_>>()
            .join("\n");

        let mut segments = Vec::new();
        let mut max_tokens = None;
        let mut saw_block = false;
        for cap in block_re().captures_iter(&stripped) {
            saw_block = true;
            let open = &cap[1];
            let close = &cap[3];
            if open != close {
                return Err(GenesisError::Template {
                    template: name.to_string(),
                    message: format!("block opened as `{open}` but closed as `{close}`"),
                });
            }
            let role = match open {
                "system" => TemplateRole::System,
                "user" => TemplateRole::User,
                _ => TemplateRole::Assistant,
            };
            let body = cap[2].trim().to_string();
            if role == TemplateRole::Assistant {
                if let Some(gen) = gen_re().captures(&body) {
                    if let Some(n) = gen.get(1) {
                        let parsed: u32 = n.as_str().parse().map_err(|_| GenesisError::Template {
                            template: name.to_string(),
                            message: format!("bad max_tokens in gen marker: {}", n.as_str()),
                        })?;
                        max_tokens = Some(parsed);
                    }
                    // A gen marker means "the model speaks here"; there is no
                    // assistant message to send.
                    continue;
                }
            }
            if !body.is_empty() {
                segments.push((role, body));
            }
        }

        if !saw_block {
            let body = stripped.trim().to_string();
            if body.is_empty() {
                return Err(GenesisError::Template {
                    template: name.to_string(),
                    message: "template is empty".into(),
                });
            }
            segments.push((TemplateRole::User, body));
        }
        if segments.is_empty() {
            return Err(GenesisError::Template {
                template: name.to_string(),
                message: "template has no message content".into(),
            });
        }
        Ok(Self { name: name.to_string(), segments, max_tokens })
    }

    /// Token budget from the template's `gen` marker, if present.
    pub fn max_tokens(&self) -> Option<u32> {
        self.max_tokens
    }

    /// Template name (for error messages and logging).
    pub fn name(&self) -> &str {
        &self.name
    }

    /// All distinct required (double-brace) slot names, sorted.
    pub fn required_slots(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .segments
            .iter()
            .flat_map(|(_, body)| {
                slot_re()
                    .captures_iter(body)
                    .filter_map(|c| c.get(1).map(|m| m.as_str().to_string()))
                    .collect::<Vec<_>>()
            })
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Renders the template into chat messages, splicing `slots` values.
    ///
    /// A `{{name}}` slot with no value is a [`GenesisError::MissingSlot`];
    /// a `{name}` occurrence with no value stays as literal text.
    pub fn render(&self, slots: &BTreeMap<&str, String>) -> Result<Vec<ChatMessage>, GenesisError> {
        let mut messages = Vec::with_capacity(self.segments.len());
        for (role, body) in &self.segments {
            let mut missing: Option<String> = None;
            let rendered = slot_re().replace_all(body, |caps: &regex::Captures<'_>| {
                if let Some(required) = caps.get(1) {
                    match slots.get(required.as_str()) {
                        Some(value) => value.clone(),
                        None => {
                            if missing.is_none() {
                                missing = Some(required.as_str().to_string());
                            }
                            String::new()
                        }
                    }
                } else {
                    let optional = caps.get(2).expect("alternation arm");
                    match slots.get(optional.as_str()) {
                        Some(value) => value.clone(),
                        None => caps[0].to_string(),
                    }
                }
            });
            if let Some(slot) = missing {
                return Err(GenesisError::MissingSlot { template: self.name.clone(), slot });
            }
            let message = match role {
                TemplateRole::System => ChatMessage::system(rendered.as_ref()),
                TemplateRole::User => ChatMessage::user(rendered.as_ref()),
                TemplateRole::Assistant => ChatMessage::assistant(rendered.as_ref()),
            };
            messages.push(message);
        }
        Ok(messages)
    }
}
