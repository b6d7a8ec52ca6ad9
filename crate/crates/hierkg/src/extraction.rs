//! The three hierarchy stages: initial triple extraction over sentence
//! batches, splitting of compound entity mentions, and abstraction of
//! specific entities into generalized parent concepts.
//!
//! Stage ordering: splitting runs over the entities present after initial
//! assembly; abstraction runs over the union of initial and split-produced
//! entities. Filter ambiguity always resolves to "no action", which leaves
//! the graph no worse than initial extraction. Split and abstract triples
//! never carry a paper id.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ExtractionBatch;
use crate::llm::{CallTag, ChatRequest, LlmClient};
use crate::model::{normalize, Entity, Provenance, Relation, Triple};
use crate::parser::{self, ParseOutcome};
use crate::prompts::{
    bullet_list, fill, PromptStage, TemplateSet, CONTEXT_HEADER, COREFERENCE_BLOCK,
    KNOWN_ENTITIES_HEADER, KNOWN_ENTITIES_INSTRUCTION,
};

/// Behavior switches for the extraction stages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionOptions {
    /// Include the coreference-resolution instruction in initial prompts.
    pub coreference: bool,
    /// Include the known-entity list (with the reuse-identical-wording
    /// instruction) in split prompts.
    pub entity_consistency: bool,
    pub split_relation_label: String,
    pub abstract_relation_label: String,
    /// Upper bound on known entities injected per split prompt,
    /// nearest-first by shared-token count with the target entity.
    pub known_entities_cap: usize,
    /// Split passes: parts produced by one pass are re-filtered in the next.
    pub max_split_depth: u32,
}

impl Default for ExtractionOptions {
    fn default() -> Self {
        ExtractionOptions {
            coreference: true,
            entity_consistency: true,
            split_relation_label: "has_component".to_string(),
            abstract_relation_label: "is_a".to_string(),
            known_entities_cap: 200,
            max_split_depth: 2,
        }
    }
}

/// Parts a compound entity divides into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    pub parent_text: String,
    pub parts: Vec<String>,
    pub relation_label: String,
}

impl SplitResult {
    /// Validates the split contract: at least two parts, pairwise distinct
    /// after normalization, none equal to the parent.
    pub fn new(parent_text: String, parts: Vec<String>, relation_label: String) -> Result<Self> {
        let parent_key = normalize(&parent_text);
        let mut seen = BTreeSet::new();
        for part in &parts {
            let key = normalize(part);
            if key.is_empty() {
                return Err(Error::validation(format!("split part {part:?} is empty")));
            }
            if key == parent_key {
                return Err(Error::validation(format!(
                    "split part {part:?} equals the parent entity"
                )));
            }
            if !seen.insert(key) {
                return Err(Error::validation(format!("split part {part:?} is duplicated")));
            }
        }
        if seen.len() < 2 {
            return Err(Error::validation("split produced fewer than two distinct parts"));
        }
        Ok(SplitResult {
            parent_text,
            parts,
            relation_label,
        })
    }
}

/// A generalized parent concept attached to a specific entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractionResult {
    pub child_text: String,
    pub parent_concept: String,
    pub relation_label: String,
}

impl AbstractionResult {
    pub fn new(child_text: String, parent_concept: String, relation_label: String) -> Result<Self> {
        let parent_key = normalize(&parent_concept);
        if parent_key.is_empty() {
            return Err(Error::validation("abstraction parent is empty"));
        }
        if parent_key == normalize(&child_text) {
            return Err(Error::validation(format!(
                "abstraction parent {parent_concept:?} equals the child entity"
            )));
        }
        Ok(AbstractionResult {
            child_text,
            parent_concept,
            relation_label,
        })
    }
}

// ---------------------------------------------------------------------------
// Prompt builders
// ---------------------------------------------------------------------------

/// Initial-extraction prompt: context sentences (labeled as reference only),
/// target sentences, the output-format contract, and, iff `coreference` is
/// on, the pronoun-resolution instruction. With the flag off the prompt is
/// byte-identical except that the coreference block is absent.
pub fn build_initial_prompt(
    batch: &ExtractionBatch,
    templates: &TemplateSet,
    coreference: bool,
) -> ChatRequest {
    let template = templates.get(PromptStage::Initial);
    let coreference_block = if coreference { COREFERENCE_BLOCK } else { "" };
    let context_block = if batch.context_sentences.is_empty() {
        String::new()
    } else {
        format!(
            "{CONTEXT_HEADER}\n{}\n\n",
            bullet_list(&batch.context_sentences)
        )
    };
    let targets = bullet_list(&batch.target_sentences);
    ChatRequest {
        system_prompt: template.system.clone(),
        user_prompt: fill(
            &template.user,
            &[
                ("coreference_block", coreference_block),
                ("context_block", &context_block),
                ("targets", &targets),
            ],
        ),
    }
}

pub fn build_split_filter_prompt(entity_text: &str, templates: &TemplateSet) -> ChatRequest {
    let template = templates.get(PromptStage::SplitFilter);
    ChatRequest {
        system_prompt: template.system.clone(),
        user_prompt: fill(&template.user, &[("entity_text", entity_text)]),
    }
}

/// Split prompt. Iff `consistency` is on and the known-entity list is
/// non-empty, the prompt carries the list plus the instruction to reuse
/// identical wording for identical concepts.
pub fn build_split_prompt(
    entity_text: &str,
    known_entities: &[String],
    templates: &TemplateSet,
    consistency: bool,
) -> ChatRequest {
    let template = templates.get(PromptStage::Split);
    let known_block = if consistency && !known_entities.is_empty() {
        format!(
            "{KNOWN_ENTITIES_HEADER}\n{}\n{KNOWN_ENTITIES_INSTRUCTION}\n\n",
            bullet_list(known_entities)
        )
    } else {
        String::new()
    };
    ChatRequest {
        system_prompt: template.system.clone(),
        user_prompt: fill(
            &template.user,
            &[
                ("entity_text", entity_text),
                ("known_entities_block", &known_block),
            ],
        ),
    }
}

pub fn build_abstract_filter_prompt(entity_text: &str, templates: &TemplateSet) -> ChatRequest {
    let template = templates.get(PromptStage::AbstractFilter);
    ChatRequest {
        system_prompt: template.system.clone(),
        user_prompt: fill(&template.user, &[("entity_text", entity_text)]),
    }
}

pub fn build_abstract_prompt(entity_text: &str, templates: &TemplateSet) -> ChatRequest {
    let template = templates.get(PromptStage::Abstract);
    ChatRequest {
        system_prompt: template.system.clone(),
        user_prompt: fill(&template.user, &[("entity_text", entity_text)]),
    }
}

/// Re-ask prompt sent once when a response failed to parse after repair.
fn build_repair_prompt(system_prompt: &str, malformed: &str) -> ChatRequest {
    ChatRequest {
        system_prompt: system_prompt.to_string(),
        user_prompt: format!(
            "The following output is not valid JSON in the requested shape. \
             Reproduce it as valid JSON with the same content. Return only the JSON.\n\n{malformed}"
        ),
    }
}

// ---------------------------------------------------------------------------
// Single-unit operations
// ---------------------------------------------------------------------------

/// Ask once, and on a malformed answer re-ask once with the repair prompt.
fn complete_and_parse<T>(
    client: &LlmClient,
    request: &ChatRequest,
    tag: &CallTag,
    parse: impl Fn(&str) -> ParseOutcome<T>,
) -> Result<ParseOutcome<T>> {
    let response = client.complete(request, tag)?;
    let outcome = parse(&response.text);
    if !outcome.is_failed() {
        return Ok(outcome);
    }
    log::warn!(
        "malformed output for {} ({}), re-asking once",
        tag.unit,
        outcome.diagnostics.join("; ")
    );
    let retry = build_repair_prompt(&request.system_prompt, &response.text);
    let response = client.complete(&retry, tag)?;
    Ok(parse(&response.text))
}

/// Convert one batch of sentences into provenance-stamped triples.
pub fn extract_initial(
    batch: &ExtractionBatch,
    client: &LlmClient,
    templates: &TemplateSet,
    opts: &ExtractionOptions,
) -> Result<Vec<Triple>> {
    let request = build_initial_prompt(batch, templates, opts.coreference);
    let tag = CallTag::new("initial", batch.id());
    let outcome = complete_and_parse(client, &request, &tag, parser::parse_triples)?;
    let payloads = match outcome.value {
        Some(payloads) => payloads,
        None => {
            return Err(Error::Extraction {
                batch_id: batch.id(),
                detail: outcome.diagnostics.join("; "),
            })
        }
    };
    let provenance = Provenance::initial(&batch.paper_id, &batch.section, batch.sentence_range)?;
    let mut triples = Vec::new();
    for payload in payloads {
        match Triple::new(
            payload.head,
            payload.relation,
            payload.tail,
            provenance.clone(),
        ) {
            Ok(mut triple) => {
                triple.extra = payload.extra;
                triples.push(triple);
            }
            Err(e) => log::warn!("dropping invalid triple from batch {}: {e}", batch.id()),
        }
    }
    Ok(triples)
}

/// Filter: does this entity need splitting? Ambiguous answers mean no.
pub fn needs_split(entity_text: &str, client: &LlmClient, templates: &TemplateSet) -> Result<bool> {
    if entity_text.trim().is_empty() {
        return Err(Error::validation("cannot filter an empty entity"));
    }
    let request = build_split_filter_prompt(entity_text, templates);
    let tag = CallTag::new("split_filter", entity_text.to_string());
    let response = client.complete(&request, &tag)?;
    Ok(parser::parse_verdict(&response.text))
}

/// Split one entity. Returns `None` when the response is rejected (fewer
/// than two distinct parts, a part equal to the parent, or a malformed
/// answer after the re-ask); the entity is left intact in that case.
pub fn split_entity(
    entity_text: &str,
    known_entities: &[String],
    client: &LlmClient,
    templates: &TemplateSet,
    opts: &ExtractionOptions,
) -> Result<Option<SplitResult>> {
    let request = build_split_prompt(entity_text, known_entities, templates, opts.entity_consistency);
    let tag = CallTag::new("split", entity_text.to_string());
    let outcome = complete_and_parse(client, &request, &tag, parser::parse_split)?;
    let Some(parts) = outcome.value else {
        log::warn!(
            "split of {entity_text:?} skipped: {}",
            outcome.diagnostics.join("; ")
        );
        return Ok(None);
    };
    match SplitResult::new(
        entity_text.to_string(),
        parts,
        opts.split_relation_label.clone(),
    ) {
        Ok(result) => Ok(Some(result)),
        Err(e) => {
            log::warn!("split of {entity_text:?} rejected: {e}");
            Ok(None)
        }
    }
}

/// Filter: does this entity need a generalized parent concept?
pub fn needs_abstraction(
    entity_text: &str,
    client: &LlmClient,
    templates: &TemplateSet,
) -> Result<bool> {
    if entity_text.trim().is_empty() {
        return Err(Error::validation("cannot filter an empty entity"));
    }
    let request = build_abstract_filter_prompt(entity_text, templates);
    let tag = CallTag::new("abstract_filter", entity_text.to_string());
    let response = client.complete(&request, &tag)?;
    Ok(parser::parse_verdict(&response.text))
}

/// Abstract one entity. The response may name several ancestors; every
/// valid one (non-empty, not equal to the child) becomes a result. An empty
/// vector means the abstraction was rejected and no action is taken.
pub fn abstract_entity(
    entity_text: &str,
    client: &LlmClient,
    templates: &TemplateSet,
    opts: &ExtractionOptions,
) -> Result<Vec<AbstractionResult>> {
    let request = build_abstract_prompt(entity_text, templates);
    let tag = CallTag::new("abstract", entity_text.to_string());
    let outcome = complete_and_parse(client, &request, &tag, parser::parse_abstraction)?;
    let Some(parents) = outcome.value else {
        log::warn!(
            "abstraction of {entity_text:?} skipped: {}",
            outcome.diagnostics.join("; ")
        );
        return Ok(Vec::new());
    };
    let mut results = Vec::new();
    for parent in parents {
        match AbstractionResult::new(
            entity_text.to_string(),
            parent,
            opts.abstract_relation_label.clone(),
        ) {
            Ok(result) => results.push(result),
            Err(e) => log::warn!("abstraction of {entity_text:?} rejected: {e}"),
        }
    }
    Ok(results)
}

// ---------------------------------------------------------------------------
// Stage runners
// ---------------------------------------------------------------------------

/// Outcome of one extraction batch: its triples, the canonical JSON of what
/// was produced (for judge units), or the error that exhausted the repair
/// budget.
#[derive(Debug)]
pub struct BatchResult {
    pub batch: ExtractionBatch,
    pub triples: Vec<Triple>,
    pub produced_json: String,
    pub error: Option<String>,
}

/// One filter consultation during splitting or abstraction: was the entity
/// marked for action, and what did the action produce. `outputs` can be
/// empty for a marked entity whose action was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityDecision {
    pub entity: String,
    pub marked: bool,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub known_entities: Vec<String>,
}

/// Run initial extraction over every batch. Parse failures that survive the
/// repair budget are recorded per batch and the stage continues; transport
/// and protocol errors abort the stage.
pub fn run_initial_stage(
    batches: &[ExtractionBatch],
    client: &LlmClient,
    templates: &TemplateSet,
    opts: &ExtractionOptions,
) -> Result<Vec<BatchResult>> {
    let workers = client.config().max_concurrent_requests;
    let results = parallel_map(batches, workers, |batch| {
        match extract_initial(batch, client, templates, opts) {
            Ok(triples) => {
                let payloads: Vec<serde_json::Value> = triples
                    .iter()
                    .map(|t| {
                        serde_json::json!({
                            "head": t.head,
                            "relation": t.relation,
                            "tail": t.tail,
                        })
                    })
                    .collect();
                Ok(BatchResult {
                    batch: batch.clone(),
                    produced_json: serde_json::Value::Array(payloads).to_string(),
                    triples,
                    error: None,
                })
            }
            Err(Error::Extraction { detail, .. }) => Ok(BatchResult {
                batch: batch.clone(),
                triples: Vec::new(),
                produced_json: String::new(),
                error: Some(detail),
            }),
            Err(other) => Err(other),
        }
    });
    results.into_iter().collect()
}

/// Distinct entities of a triple set: normalized key to first-seen surface
/// form, plus the sorted key list.
fn entity_surfaces(triples: &[Triple]) -> BTreeMap<String, String> {
    let mut surfaces = BTreeMap::new();
    for triple in triples {
        for entity in [&triple.head, &triple.tail] {
            let key = normalize(&entity.text);
            surfaces.entry(key).or_insert_with(|| entity.text.clone());
        }
    }
    surfaces
}

/// Rank the known-entity pool for one target entity: nearest first by
/// shared-token count with the target, ties broken lexicographically, capped.
fn known_entities_for(
    target_key: &str,
    pool: &BTreeMap<String, String>,
    cap: usize,
) -> Vec<String> {
    let target_tokens: BTreeSet<&str> = target_key.split_whitespace().collect();
    let mut ranked: Vec<(usize, &String, &String)> = pool
        .iter()
        .filter(|(key, _)| key.as_str() != target_key)
        .map(|(key, surface)| {
            let shared = key
                .split_whitespace()
                .filter(|token| target_tokens.contains(token))
                .count();
            (shared, key, surface)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    ranked
        .into_iter()
        .take(cap)
        .map(|(_, _, surface)| surface.clone())
        .collect()
}

/// Output of the splitting stage: the new hierarchy triples plus the full
/// decision log (one entry per filter consultation, in deterministic order).
#[derive(Debug)]
pub struct SplitStage {
    pub new_triples: Vec<Triple>,
    pub decisions: Vec<EntityDecision>,
}

/// Run the splitting stage over the entities of `current`. Parts produced by
/// one pass are re-filtered in the next, up to `max_split_depth` passes.
pub fn run_split_stage(
    current: &[Triple],
    client: &LlmClient,
    templates: &TemplateSet,
    opts: &ExtractionOptions,
) -> Result<SplitStage> {
    let workers = client.config().max_concurrent_requests;
    let mut surfaces = entity_surfaces(current);
    let mut decided: BTreeSet<String> = BTreeSet::new();
    let mut frontier: Vec<String> = surfaces.keys().cloned().collect();
    let mut new_triples = Vec::new();
    let mut decisions = Vec::new();

    for _depth in 0..opts.max_split_depth {
        let pending: Vec<String> = frontier
            .iter()
            .filter(|key| !decided.contains(*key))
            .cloned()
            .collect();
        if pending.is_empty() {
            break;
        }
        decided.extend(pending.iter().cloned());

        let verdicts = parallel_map(&pending, workers, |key| {
            needs_split(&surfaces[key], client, templates)
        });
        let mut marked_keys = Vec::new();
        let mut verdict_by_key = BTreeMap::new();
        for (key, verdict) in pending.iter().zip(verdicts) {
            let marked = verdict?;
            verdict_by_key.insert(key.clone(), marked);
            if marked {
                marked_keys.push(key.clone());
            }
        }

        let known_lists: Vec<Vec<String>> = marked_keys
            .iter()
            .map(|key| {
                if opts.entity_consistency {
                    known_entities_for(key, &surfaces, opts.known_entities_cap)
                } else {
                    Vec::new()
                }
            })
            .collect();
        let splits = parallel_map(&marked_keys.iter().cloned().zip(known_lists.iter()).collect::<Vec<_>>(), workers, |(key, known)| {
            split_entity(&surfaces[key], known, client, templates, opts)
        });

        let mut outputs_by_key: BTreeMap<String, (Vec<String>, Vec<String>)> = BTreeMap::new();
        let mut next_frontier = Vec::new();
        for ((key, known), split) in marked_keys.iter().zip(known_lists.iter()).zip(splits) {
            let split = split?;
            let parent_surface = surfaces[key].clone();
            let mut outputs = Vec::new();
            if let Some(result) = split {
                for part in &result.parts {
                    let triple = Triple::new(
                        Entity::new(parent_surface.clone())?,
                        Relation::new(result.relation_label.clone())?,
                        Entity::new(part.clone())?,
                        Provenance::split(),
                    )?;
                    new_triples.push(triple);
                    outputs.push(part.clone());
                    let part_key = normalize(part);
                    if !surfaces.contains_key(&part_key) {
                        surfaces.insert(part_key.clone(), part.clone());
                        next_frontier.push(part_key);
                    }
                }
            }
            outputs_by_key.insert(key.clone(), (outputs, known.clone()));
        }

        for key in &pending {
            let marked = verdict_by_key[key];
            let (outputs, known_entities) = outputs_by_key.remove(key).unwrap_or_default();
            decisions.push(EntityDecision {
                entity: surfaces[key].clone(),
                marked,
                outputs,
                known_entities,
            });
        }
        frontier = next_frontier;
    }

    Ok(SplitStage {
        new_triples,
        decisions,
    })
}

/// Output of the abstraction stage.
#[derive(Debug)]
pub struct AbstractStage {
    pub new_triples: Vec<Triple>,
    pub decisions: Vec<EntityDecision>,
}

/// Run abstraction over every entity of `current`, which must already hold
/// the union of initial and split-produced triples.
pub fn run_abstract_stage(
    current: &[Triple],
    client: &LlmClient,
    templates: &TemplateSet,
    opts: &ExtractionOptions,
) -> Result<AbstractStage> {
    let workers = client.config().max_concurrent_requests;
    let surfaces = entity_surfaces(current);
    let keys: Vec<String> = surfaces.keys().cloned().collect();

    let verdicts = parallel_map(&keys, workers, |key| {
        needs_abstraction(&surfaces[key], client, templates)
    });
    let mut marked_keys = Vec::new();
    let mut verdict_by_key = BTreeMap::new();
    for (key, verdict) in keys.iter().zip(verdicts) {
        let marked = verdict?;
        verdict_by_key.insert(key.clone(), marked);
        if marked {
            marked_keys.push(key.clone());
        }
    }

    let abstractions = parallel_map(&marked_keys, workers, |key| {
        abstract_entity(&surfaces[key], client, templates, opts)
    });
    let mut outputs_by_key: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut new_triples = Vec::new();
    for (key, results) in marked_keys.iter().zip(abstractions) {
        let results = results?;
        let mut outputs = Vec::new();
        for result in results {
            let triple = Triple::new(
                Entity::new(result.child_text.clone())?,
                Relation::new(result.relation_label.clone())?,
                Entity::new(result.parent_concept.clone())?,
                Provenance::abstracted(),
            )?;
            new_triples.push(triple);
            outputs.push(result.parent_concept);
        }
        outputs_by_key.insert(key.clone(), outputs);
    }

    let decisions = keys
        .iter()
        .map(|key| EntityDecision {
            entity: surfaces[key].clone(),
            marked: verdict_by_key[key],
            outputs: outputs_by_key.remove(key).unwrap_or_default(),
            known_entities: Vec::new(),
        })
        .collect();

    Ok(AbstractStage {
        new_triples,
        decisions,
    })
}

/// Run `f` over `items` with at most `workers` threads, preserving input
/// order in the result. Downstream assembly must not depend on completion
/// order, so results are buffered by index.
pub(crate) fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if items.is_empty() {
        return Vec::new();
    }
    let workers = workers.clamp(1, items.len());
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                if index >= items.len() {
                    break;
                }
                let result = f(&items[index]);
                *slots[index].lock().expect("result slot") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("result slot")
                .expect("worker filled every slot")
        })
        .collect()
}
