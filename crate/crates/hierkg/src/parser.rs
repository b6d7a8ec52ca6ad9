//! Parsing of raw model text into validated triples, filter verdicts, split
//! parts, abstraction results, and judge scores.
//!
//! Near-valid structured output goes through a fixed, ordered repair list:
//! fence-strip, prose-strip, trailing-comma removal, smart-quote
//! normalization. Repairs only touch structural decoration, never the string
//! content of fields, and there is no speculative bracket insertion:
//! predictable failure beats silent corruption.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::model::{Entity, ExtraMap, Relation};

/// How a parse ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Repaired,
    Failed,
}

/// Parse result plus the diagnostics trail. `Ok`/`Repaired` carry a value;
/// `Failed` carries non-empty diagnostics including the raw text for audit.
#[derive(Debug, Clone)]
pub struct ParseOutcome<T> {
    pub status: ParseStatus,
    pub value: Option<T>,
    pub diagnostics: Vec<String>,
}

impl<T> ParseOutcome<T> {
    pub fn ok(value: T) -> Self {
        ParseOutcome {
            status: ParseStatus::Ok,
            value: Some(value),
            diagnostics: Vec::new(),
        }
    }

    pub fn repaired(value: T, diagnostics: Vec<String>) -> Self {
        ParseOutcome {
            status: ParseStatus::Repaired,
            value: Some(value),
            diagnostics,
        }
    }

    pub fn failed(diagnostics: Vec<String>) -> Self {
        debug_assert!(!diagnostics.is_empty());
        ParseOutcome {
            status: ParseStatus::Failed,
            value: None,
            diagnostics,
        }
    }

    pub fn is_failed(&self) -> bool {
        self.status == ParseStatus::Failed
    }
}

/// A triple as emitted by the model: no provenance yet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriplePayload {
    pub head: Entity,
    pub relation: Relation,
    pub tail: Entity,
    #[serde(flatten, default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: ExtraMap,
}

/// Parse an array of triple objects. Accepts `{"triples": [...]}` wrappers
/// as a repaired shape. Every element must have `head.text`, `relation.text`,
/// and `tail.text`; anything else fails the whole response.
pub fn parse_triples(raw: &str) -> ParseOutcome<Vec<TriplePayload>> {
    let outcome = parse_structured::<Vec<TriplePayload>>(raw, &["triples"]);
    validate_elements(outcome, raw, |payloads| -> Result<(), String> {
        for (idx, payload) in payloads.iter().enumerate() {
            payload
                .head
                .validate()
                .and_then(|_| payload.tail.validate())
                .and_then(|_| {
                    if payload.relation.text.trim().is_empty() {
                        Err(crate::error::Error::validation("relation text is empty"))
                    } else {
                        Ok(())
                    }
                })
                .map_err(|e| format!("triple {idx}: {e}"))?;
        }
        Ok(())
    })
}

/// Parse a yes/no filter verdict. Matches a case-insensitive leading
/// "yes"/"no" token, optionally inside a one-field JSON object. Anything
/// ambiguous resolves to `false`: the conservative answer is "no action".
pub fn parse_verdict(raw: &str) -> bool {
    let mut text = raw.trim();
    let unwrapped;
    if text.starts_with('{') {
        if let Ok(obj) = serde_json::from_str::<BTreeMap<String, serde_json::Value>>(text) {
            if obj.len() == 1 {
                if let Some(serde_json::Value::String(s)) = obj.into_values().next() {
                    unwrapped = s;
                    text = unwrapped.trim();
                }
            }
        }
    }
    let token: String = text
        .trim_start_matches(['"', '\'', '*', '`', ' '])
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect();
    token.eq_ignore_ascii_case("yes")
}

/// Parse split output: a JSON array of part texts. `{"parts": [...]}` style
/// wrappers unwrap as a repaired shape; an empty array fails.
pub fn parse_split(raw: &str) -> ParseOutcome<Vec<String>> {
    parse_string_list(raw, &["parts", "components", "entities"])
}

/// Parse abstraction output: a JSON array of parent-concept texts. A bare
/// JSON string is accepted as a repaired one-element list.
pub fn parse_abstraction(raw: &str) -> ParseOutcome<Vec<String>> {
    parse_string_list(raw, &["parent", "parents", "concept", "concepts"])
}

/// Judge scores as emitted by the evaluator model. Scores must be integers;
/// range is validated here so a 7 or a 4.5 both come back as failures.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct JudgeScoresPayload {
    pub accuracy: i64,
    pub comprehensiveness: i64,
    pub relevance: i64,
    #[serde(default)]
    pub rationale: String,
}

pub fn parse_judge_scores(raw: &str) -> ParseOutcome<JudgeScoresPayload> {
    let outcome = parse_structured::<JudgeScoresPayload>(raw, &["scores"]);
    validate_elements(outcome, raw, |payload| {
        for (name, value) in [
            ("accuracy", payload.accuracy),
            ("comprehensiveness", payload.comprehensiveness),
            ("relevance", payload.relevance),
        ] {
            if !(0..=5).contains(&value) {
                return Err(format!("{name} score {value} is outside 0..=5"));
            }
        }
        Ok(())
    })
}

fn validate_elements<T, E: std::fmt::Display>(
    outcome: ParseOutcome<T>,
    raw: &str,
    check: impl Fn(&T) -> Result<(), E>,
) -> ParseOutcome<T> {
    match outcome.value {
        Some(ref value) => match check(value) {
            Ok(()) => outcome,
            Err(e) => {
                let mut diagnostics = outcome.diagnostics;
                diagnostics.push(format!("validation failed: {e}"));
                diagnostics.push(raw_excerpt(raw));
                ParseOutcome::failed(diagnostics)
            }
        },
        None => outcome,
    }
}

fn parse_string_list(raw: &str, known_keys: &[&str]) -> ParseOutcome<Vec<String>> {
    let mut outcome = parse_structured::<Vec<String>>(raw, known_keys);
    // A bare JSON string becomes a one-element list.
    if outcome.is_failed() {
        if let Ok(single) = serde_json::from_str::<String>(raw.trim()) {
            let mut diagnostics = outcome.diagnostics.clone();
            diagnostics.push("wrapped bare string into a one-element list".to_string());
            outcome = ParseOutcome::repaired(vec![single], diagnostics);
        }
    }
    validate_elements(outcome, raw, |parts: &Vec<String>| {
        if parts.is_empty() {
            return Err("empty list".to_string());
        }
        if parts.iter().any(|p| p.trim().is_empty()) {
            return Err("list contains an empty element".to_string());
        }
        Ok(())
    })
}

/// Shared parse-then-repair driver. Tries the raw text first, then applies
/// the fixed repair list cumulatively, re-parsing after each change. A
/// single-key object wrapper whose key is in `unwrap_keys` also unwraps as a
/// repaired shape.
fn parse_structured<T: DeserializeOwned>(raw: &str, unwrap_keys: &[&str]) -> ParseOutcome<T> {
    let attempt = |text: &str| -> Result<(T, bool), String> {
        match serde_json::from_str::<T>(text) {
            Ok(value) => Ok((value, false)),
            Err(direct_err) => {
                // Unwrap {"key": <payload>} when the key is known.
                if let Ok(serde_json::Value::Object(map)) =
                    serde_json::from_str::<serde_json::Value>(text)
                {
                    if map.len() == 1 {
                        let (key, inner) = map.into_iter().next().expect("one entry");
                        if unwrap_keys.contains(&key.as_str()) {
                            if let Ok(value) = serde_json::from_value::<T>(inner) {
                                return Ok((value, true));
                            }
                        }
                    }
                }
                Err(direct_err.to_string())
            }
        }
    };

    let mut diagnostics = Vec::new();
    match attempt(raw) {
        Ok((value, false)) => return ParseOutcome::ok(value),
        Ok((value, true)) => {
            diagnostics.push("unwrapped single-key object".to_string());
            return ParseOutcome::repaired(value, diagnostics);
        }
        Err(e) => diagnostics.push(format!("direct parse failed: {e}")),
    }

    type Repair = fn(&str) -> String;
    let repairs: [(&str, Repair); 4] = [
        ("strip code fences", strip_code_fences),
        ("strip surrounding prose", strip_surrounding_prose),
        ("remove trailing commas", remove_trailing_commas),
        ("normalize smart quotes", normalize_smart_quotes),
    ];

    let mut text = raw.to_string();
    for (name, repair) in repairs {
        let repaired = repair(&text);
        if repaired == text {
            continue;
        }
        text = repaired;
        diagnostics.push(format!("applied repair: {name}"));
        match attempt(&text) {
            Ok((value, unwrapped)) => {
                if unwrapped {
                    diagnostics.push("unwrapped single-key object".to_string());
                }
                return ParseOutcome::repaired(value, diagnostics);
            }
            Err(e) => diagnostics.push(format!("parse after repair failed: {e}")),
        }
    }

    diagnostics.push(raw_excerpt(raw));
    ParseOutcome::failed(diagnostics)
}

fn raw_excerpt(raw: &str) -> String {
    const LIMIT: usize = 2000;
    if raw.len() <= LIMIT {
        format!("raw output: {raw}")
    } else {
        let cut: String = raw.chars().take(LIMIT).collect();
        format!("raw output (truncated): {cut}")
    }
}

/// Drop markdown code fences, keeping only the fenced body when a fence
/// pair exists. A language tag after the opening fence is ignored.
fn strip_code_fences(text: &str) -> String {
    let Some(open) = text.find("```") else {
        return text.to_string();
    };
    let after_open = &text[open + 3..];
    // Skip the rest of the opening fence line (language tag).
    let body_start = match after_open.find('\n') {
        Some(nl) => nl + 1,
        None => return text.to_string(),
    };
    let body = &after_open[body_start..];
    match body.find("```") {
        Some(close) => body[..close].trim().to_string(),
        None => body.trim().to_string(),
    }
}

/// Keep the span from the first opening bracket to the last closing bracket,
/// discarding prose before and after. No brackets are ever inserted.
fn strip_surrounding_prose(text: &str) -> String {
    let first = text.find(['[', '{']);
    let last = text.rfind([']', '}']);
    match (first, last) {
        (Some(a), Some(b)) if a < b => text[a..=b].to_string(),
        _ => text.to_string(),
    }
}

/// Remove commas that directly precede a closing bracket, outside JSON
/// strings. String content is never touched.
fn remove_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for (i, &ch) in chars.iter().enumerate() {
        if in_string {
            out.push(ch);
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
            continue;
        }
        match ch {
            '"' => {
                in_string = true;
                out.push(ch);
            }
            ',' => {
                let next_significant = chars[i + 1..].iter().find(|c| !c.is_whitespace());
                if matches!(next_significant, Some(']') | Some('}')) {
                    // drop the comma
                } else {
                    out.push(ch);
                }
            }
            _ => out.push(ch),
        }
    }
    out
}

/// Map typographic quotes onto their ASCII equivalents.
fn normalize_smart_quotes(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            '\u{201c}' | '\u{201d}' | '\u{201e}' => '"',
            '\u{2018}' | '\u{2019}' => '\'',
            other => other,
        })
        .collect()
}
