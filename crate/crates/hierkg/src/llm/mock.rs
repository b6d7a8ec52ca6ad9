//! Deterministic rule-based mock backend.
//!
//! The mock understands the prompts produced by this crate's builtin
//! templates and answers them from fixed rules over a toy sentence grammar,
//! so the whole pipeline runs offline and bit-for-bit reproducibly:
//!
//! - initial extraction: each target sentence of the form
//!   `X <verb> Y [and Z].` yields one triple; the pronoun tokens "It"/"This"
//!   resolve to the most recent head entity when the coreference instruction
//!   is present in the prompt;
//! - split filter: yes exactly when the entity text contains " and ";
//! - split: divides on " and "; when the prompt carries a known-entity list,
//!   each part is replaced by the longest known entity whose tokens are a
//!   prefix of the part's tokens (the consistency hint in action);
//! - abstraction filter: yes exactly when the text is a multi-token phrase
//!   without a conjunction, i.e. shaped like `<modifier> <head-noun>`;
//! - abstraction: the final token is the parent concept;
//! - judge: fixed scores 5/5/5.
//!
//! Any other prompt shape is a protocol error: it signals a prompt-builder
//! regression, not something to paper over.

use std::collections::BTreeMap;

use super::{BackendError, BackendReply, ChatBackend, ChatRequest};
use crate::error::LlmError;
use crate::prompts::{
    self, PromptStage, TemplateSet, CONTEXT_HEADER, COREFERENCE_BLOCK, ENTITY_FIELD,
    KNOWN_ENTITIES_HEADER, TARGETS_HEADER,
};

/// Verb lexicon of the toy grammar. Third-person singular forms only, so
/// noun usages like "teacher support" never collide.
const VERBS: &[&str] = &[
    "causes",
    "reduces",
    "increases",
    "affects",
    "improves",
    "worsens",
    "predicts",
    "influences",
    "supports",
    "disrupts",
];

const PRONOUNS: &[&str] = &["it", "this"];

pub struct MockBackend {
    /// First line of each builtin user template, keyed for dispatch.
    markers: BTreeMap<String, PromptStage>,
}

impl MockBackend {
    pub fn new() -> Self {
        let templates = TemplateSet::builtin();
        let markers = PromptStage::ALL
            .iter()
            .map(|stage| (templates.get(*stage).user_first_line().to_string(), *stage))
            .collect();
        MockBackend { markers }
    }

    fn stage_of(&self, user_prompt: &str) -> Option<PromptStage> {
        let first_line = user_prompt.lines().next().unwrap_or("");
        self.markers.get(first_line).copied()
    }

    fn respond(&self, request: &ChatRequest) -> Result<String, String> {
        let user = &request.user_prompt;
        match self.stage_of(user) {
            Some(PromptStage::Initial) => respond_initial(user),
            Some(PromptStage::SplitFilter) => {
                let entity = entity_field(user)?;
                Ok(verdict(entity.contains(" and ")))
            }
            Some(PromptStage::Split) => respond_split(user),
            Some(PromptStage::AbstractFilter) => {
                let entity = entity_field(user)?;
                let tokens: Vec<&str> = entity.split_whitespace().collect();
                Ok(verdict(tokens.len() >= 2 && !tokens.contains(&"and")))
            }
            Some(PromptStage::Abstract) => {
                let entity = entity_field(user)?;
                let parent = entity
                    .split_whitespace()
                    .last()
                    .ok_or_else(|| format!("entity {entity:?} has no tokens"))?;
                Ok(serde_json::json!([parent.to_lowercase()]).to_string())
            }
            Some(PromptStage::Judge) => Ok(serde_json::json!({
                "accuracy": 5,
                "comprehensiveness": 5,
                "relevance": 5,
                "rationale": "mock",
            })
            .to_string()),
            None => Err(format!(
                "unrecognized prompt shape (first line {:?})",
                user.lines().next().unwrap_or("")
            )),
        }
    }
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl ChatBackend for MockBackend {
    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError> {
        match self.respond(request) {
            Ok(text) => Ok(BackendReply {
                text,
                token_usage: None,
            }),
            Err(detail) => Err(BackendError::Fatal(LlmError::MockProtocol(detail))),
        }
    }

    fn name(&self) -> &'static str {
        "mock"
    }
}

fn verdict(yes: bool) -> String {
    if yes { "yes" } else { "no" }.to_string()
}

/// The value of the `Entity: ` field in filter/split/abstract prompts.
fn entity_field(user_prompt: &str) -> Result<String, String> {
    user_prompt
        .lines()
        .find_map(|line| line.strip_prefix(ENTITY_FIELD))
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .ok_or_else(|| "prompt carries no entity field".to_string())
}

/// Items of the bulleted block following `header`, if the header is present.
fn block_items(user_prompt: &str, header: &str) -> Option<Vec<String>> {
    let mut lines = user_prompt.lines();
    lines.by_ref().find(|line| *line == header)?;
    Some(prompts::parse_bullet_lines(lines))
}

fn respond_initial(user_prompt: &str) -> Result<String, String> {
    let targets = block_items(user_prompt, TARGETS_HEADER)
        .ok_or_else(|| "initial prompt carries no target block".to_string())?;
    if targets.is_empty() {
        return Err("initial prompt has an empty target block".to_string());
    }
    let context = block_items(user_prompt, CONTEXT_HEADER).unwrap_or_default();
    let resolve_pronouns = user_prompt.contains(COREFERENCE_BLOCK.trim_end());

    let mut last_head: Option<String> = None;
    // Walk the context first so the first target already has an antecedent.
    for sentence in &context {
        if let Ok(parsed) = parse_grammar_sentence(sentence) {
            last_head = Some(resolve_head(parsed.head, &last_head, resolve_pronouns));
        }
    }

    let mut triples = Vec::new();
    for sentence in &targets {
        let parsed = parse_grammar_sentence(sentence)?;
        let head = resolve_head(parsed.head, &last_head, resolve_pronouns);
        last_head = Some(head.clone());
        triples.push(serde_json::json!({
            "head": {"text": head},
            "relation": {"text": parsed.verb},
            "tail": {"text": parsed.tail},
        }));
    }
    Ok(serde_json::Value::Array(triples).to_string())
}

fn respond_split(user_prompt: &str) -> Result<String, String> {
    let entity = entity_field(user_prompt)?;
    let known = block_items(user_prompt, KNOWN_ENTITIES_HEADER);
    let parts: Vec<String> = entity
        .split(" and ")
        .map(|part| {
            let part = part.trim().to_lowercase();
            match &known {
                Some(known) => canonical_form(&part, known),
                None => part,
            }
        })
        .collect();
    Ok(serde_json::json!(parts).to_string())
}

/// Replace a split part with the longest known entity whose token sequence
/// is a prefix of the part's tokens. Models prompted with the known-entity
/// list reuse established wording; this is the deterministic stand-in.
fn canonical_form(part: &str, known: &[String]) -> String {
    let part_tokens: Vec<String> = part.split_whitespace().map(str::to_lowercase).collect();
    let mut best: Option<&String> = None;
    let mut best_len = 0;
    for candidate in known {
        let tokens: Vec<String> = candidate.split_whitespace().map(str::to_lowercase).collect();
        if tokens.is_empty() || tokens.len() > part_tokens.len() || tokens.len() <= best_len {
            continue;
        }
        if part_tokens[..tokens.len()] == tokens[..] {
            best_len = tokens.len();
            best = Some(candidate);
        }
    }
    match best {
        Some(canonical) => canonical.to_lowercase(),
        None => part.to_string(),
    }
}

struct GrammarTriple {
    head: String,
    verb: String,
    tail: String,
}

/// Parse `X <verb> Y.` against the toy grammar. The first token found in the
/// verb lexicon splits the sentence.
fn parse_grammar_sentence(sentence: &str) -> Result<GrammarTriple, String> {
    let trimmed = sentence.trim().trim_end_matches(['.', '!', '?']);
    let tokens: Vec<&str> = trimmed.split_whitespace().collect();
    let verb_index = tokens
        .iter()
        .position(|t| VERBS.contains(&t.to_lowercase().as_str()))
        .ok_or_else(|| format!("sentence {sentence:?} does not match the mock grammar"))?;
    if verb_index == 0 || verb_index == tokens.len() - 1 {
        return Err(format!(
            "sentence {sentence:?} lacks a head or tail around the verb"
        ));
    }
    Ok(GrammarTriple {
        head: tokens[..verb_index].join(" ").to_lowercase(),
        verb: tokens[verb_index].to_lowercase(),
        tail: tokens[verb_index + 1..].join(" ").to_lowercase(),
    })
}

fn resolve_head(head: String, last_head: &Option<String>, resolve: bool) -> String {
    if resolve && PRONOUNS.contains(&head.as_str()) {
        if let Some(antecedent) = last_head {
            return antecedent.clone();
        }
    }
    head
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mock_reply(user_prompt: &str) -> String {
        let backend = MockBackend::new();
        backend
            .respond(&ChatRequest {
                system_prompt: String::new(),
                user_prompt: user_prompt.to_string(),
            })
            .unwrap()
    }

    fn initial_prompt(context: &[&str], targets: &[&str], coreference: bool) -> String {
        let context_block = if context.is_empty() {
            String::new()
        } else {
            format!(
                "{CONTEXT_HEADER}\n{}\n\n",
                prompts::bullet_list(&context.iter().map(|s| s.to_string()).collect::<Vec<_>>())
            )
        };
        let coref = if coreference { COREFERENCE_BLOCK } else { "" };
        format!(
            "Extract relational triples from the target sentences.\n\n{coref}{context_block}{TARGETS_HEADER}\n{}\n",
            prompts::bullet_list(&targets.iter().map(|s| s.to_string()).collect::<Vec<_>>())
        )
    }

    #[test]
    fn grammar_sentence_with_conjunction_tail() {
        let reply = mock_reply(&initial_prompt(
            &[],
            &["Stress causes anxiety and insomnia."],
            true,
        ));
        let triples: serde_json::Value = serde_json::from_str(&reply).unwrap();
        assert_eq!(triples[0]["head"]["text"], "stress");
        assert_eq!(triples[0]["relation"]["text"], "causes");
        assert_eq!(triples[0]["tail"]["text"], "anxiety and insomnia");
    }

    #[test]
    fn pronoun_resolves_to_most_recent_head() {
        let reply = mock_reply(&initial_prompt(
            &[],
            &["Parental stress causes child anxiety.", "It disrupts family routines."],
            true,
        ));
        let triples: serde_json::Value = serde_json::from_str(&reply).unwrap();
        assert_eq!(triples[1]["head"]["text"], "parental stress");
    }

    #[test]
    fn pronoun_resolves_from_context_block() {
        let reply = mock_reply(&initial_prompt(
            &["Screen time reduces outdoor play."],
            &["This affects motor development."],
            true,
        ));
        let triples: serde_json::Value = serde_json::from_str(&reply).unwrap();
        assert_eq!(triples[0]["head"]["text"], "screen time");
    }

    #[test]
    fn pronoun_stays_literal_without_coreference_block() {
        let reply = mock_reply(&initial_prompt(
            &["Screen time reduces outdoor play."],
            &["This affects motor development."],
            false,
        ));
        let triples: serde_json::Value = serde_json::from_str(&reply).unwrap();
        assert_eq!(triples[0]["head"]["text"], "this");
    }

    #[test]
    fn split_filter_detects_conjunction() {
        let backend = MockBackend::new();
        let prompt = |entity: &str| {
            format!(
                "Decide whether the entity below is a compound mention of multiple distinct entities.\n\n{ENTITY_FIELD}{entity}\n"
            )
        };
        let yes = backend
            .respond(&ChatRequest {
                system_prompt: String::new(),
                user_prompt: prompt("anxiety and insomnia"),
            })
            .unwrap();
        assert_eq!(yes, "yes");
        let no = backend
            .respond(&ChatRequest {
                system_prompt: String::new(),
                user_prompt: prompt("anxiety"),
            })
            .unwrap();
        assert_eq!(no, "no");
    }

    #[test]
    fn split_divides_on_conjunction() {
        let reply = mock_reply(&format!(
            "Split the entity below into its distinct component entities.\n\n{ENTITY_FIELD}anxiety and insomnia\n"
        ));
        let parts: Vec<String> = serde_json::from_str(&reply).unwrap();
        assert_eq!(parts, vec!["anxiety", "insomnia"]);
    }

    #[test]
    fn split_reuses_known_entity_wording() {
        let reply = mock_reply(&format!(
            "Split the entity below into its distinct component entities.\n\n{ENTITY_FIELD}maternal stress levels and bedtime chaos\n\n{KNOWN_ENTITIES_HEADER}\n- maternal stress\n- bedtime chaos\n"
        ));
        let parts: Vec<String> = serde_json::from_str(&reply).unwrap();
        assert_eq!(parts, vec!["maternal stress", "bedtime chaos"]);
    }

    #[test]
    fn abstraction_filter_wants_multi_token_phrases() {
        let backend = MockBackend::new();
        let prompt = |entity: &str| {
            format!(
                "Decide whether the entity below names a specific form of a more general concept.\n\n{ENTITY_FIELD}{entity}\n"
            )
        };
        let cases = [
            ("chronic stress", "yes"),
            ("anxiety", "no"),
            ("anxiety and insomnia", "no"),
        ];
        for (entity, expected) in cases {
            let reply = backend
                .respond(&ChatRequest {
                    system_prompt: String::new(),
                    user_prompt: prompt(entity),
                })
                .unwrap();
            assert_eq!(reply, expected, "entity {entity:?}");
        }
    }

    #[test]
    fn abstraction_returns_final_token() {
        let reply = mock_reply(&format!(
            "Give the generalized parent concept for the entity below.\n\n{ENTITY_FIELD}chronic stress\n"
        ));
        let parents: Vec<String> = serde_json::from_str(&reply).unwrap();
        assert_eq!(parents, vec!["stress"]);
    }

    #[test]
    fn judge_prompt_scores_five() {
        let reply = mock_reply("Score the following knowledge-graph extraction output.\n");
        let scores: serde_json::Value = serde_json::from_str(&reply).unwrap();
        assert_eq!(scores["accuracy"], 5);
        assert_eq!(scores["rationale"], "mock");
    }

    #[test]
    fn unknown_prompt_is_a_protocol_error() {
        let backend = MockBackend::new();
        let err = backend
            .send(&ChatRequest {
                system_prompt: String::new(),
                user_prompt: "Translate this sentence.".to_string(),
            })
            .unwrap_err();
        match err {
            BackendError::Fatal(LlmError::MockProtocol(detail)) => {
                assert!(detail.contains("unrecognized prompt shape"))
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn non_grammar_target_is_a_protocol_error() {
        let backend = MockBackend::new();
        let err = backend
            .respond(&ChatRequest {
                system_prompt: String::new(),
                user_prompt: initial_prompt(&[], &["This sentence has no lexicon verb."], true),
            })
            .unwrap_err();
        assert!(err.contains("does not match the mock grammar"));
    }
}
