//! Core data model: entities, relations, provenance, triples, graphs, and judge scores.
//!
//! All types here are immutable values after construction and can be shared
//! freely across threads. Identity of an entity is its [`normalize`]d text;
//! the graph merges nodes on exact normalized-text equality and never merges
//! fuzzily.

use std::collections::{BTreeMap, HashMap};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A property value on an entity: a single string or a list of strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyValue {
    One(String),
    Many(Vec<String>),
}

impl PropertyValue {
    /// All values, in order. A scalar behaves as a one-element list.
    pub fn values(&self) -> Vec<&str> {
        match self {
            PropertyValue::One(v) => vec![v.as_str()],
            PropertyValue::Many(vs) => vs.iter().map(String::as_str).collect(),
        }
    }

    fn validate(&self, key: &str) -> Result<()> {
        match self {
            PropertyValue::One(v) if v.trim().is_empty() => Err(Error::validation(format!(
                "property {key:?} has an empty value"
            ))),
            PropertyValue::Many(vs) if vs.is_empty() => Err(Error::validation(format!(
                "property {key:?} has an empty value list"
            ))),
            PropertyValue::Many(vs) if vs.iter().any(|v| v.trim().is_empty()) => Err(
                Error::validation(format!("property {key:?} contains an empty list element")),
            ),
            _ => Ok(()),
        }
    }
}

impl From<&str> for PropertyValue {
    fn from(v: &str) -> Self {
        PropertyValue::One(v.to_string())
    }
}

/// Property map on an entity. Insertion order is preserved so that records
/// serialize deterministically.
pub type PropertyMap = IndexMap<String, PropertyValue>;

/// Extra fields a model attached to a record beyond the canonical schema.
/// Kept verbatim so foreign dumps survive a read/write cycle.
pub type ExtraMap = BTreeMap<String, serde_json::Value>;

/// A node candidate: surface text plus an open property map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub text: String,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub properties: PropertyMap,
    #[serde(flatten, default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: ExtraMap,
}

impl Entity {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let entity = Entity {
            text: text.into(),
            properties: PropertyMap::new(),
            extra: ExtraMap::new(),
        };
        entity.validate()?;
        Ok(entity)
    }

    pub fn with_properties(text: impl Into<String>, properties: PropertyMap) -> Result<Self> {
        let entity = Entity {
            text: text.into(),
            properties,
            extra: ExtraMap::new(),
        };
        entity.validate()?;
        Ok(entity)
    }

    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::validation("entity text is empty"));
        }
        for (key, value) in &self.properties {
            if key.trim().is_empty() {
                return Err(Error::validation("entity has an empty property key"));
            }
            value.validate(key)?;
        }
        Ok(())
    }

    /// The node key this entity merges under.
    pub fn key(&self) -> String {
        normalize(&self.text)
    }
}

/// A predicate phrase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub text: String,
}

impl Relation {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let relation = Relation { text: text.into() };
        if relation.text.trim().is_empty() {
            return Err(Error::validation("relation text is empty"));
        }
        Ok(relation)
    }
}

/// Hierarchy stage a triple was produced in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Initial,
    Split,
    Abstract,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Initial, Stage::Split, Stage::Abstract];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Initial => "initial",
            Stage::Split => "split",
            Stage::Abstract => "abstract",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

/// Where a triple came from.
///
/// Initial-stage triples carry the full source location (paper, section,
/// sentence span). Split- and abstract-stage triples are derived from the
/// graph itself and carry no paper id. The coupling is enforced at
/// construction and re-checked on every deserialized record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawProvenance")]
pub struct Provenance {
    pub stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub section: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentence_range: Option<(usize, usize)>,
}

#[derive(Deserialize)]
struct RawProvenance {
    stage: Stage,
    #[serde(default)]
    paper_id: Option<String>,
    #[serde(default)]
    section: Option<String>,
    #[serde(default)]
    sentence_range: Option<(usize, usize)>,
}

impl TryFrom<RawProvenance> for Provenance {
    type Error = Error;

    fn try_from(raw: RawProvenance) -> Result<Self> {
        let provenance = Provenance {
            stage: raw.stage,
            paper_id: raw.paper_id,
            section: raw.section,
            sentence_range: raw.sentence_range,
        };
        provenance.validate()?;
        Ok(provenance)
    }
}

impl Provenance {
    /// Provenance for an initial-stage triple: paper, section, and the
    /// inclusive sentence index span of the extraction batch.
    pub fn initial(
        paper_id: impl Into<String>,
        section: impl Into<String>,
        sentence_range: (usize, usize),
    ) -> Result<Self> {
        let provenance = Provenance {
            stage: Stage::Initial,
            paper_id: Some(paper_id.into()),
            section: Some(section.into()),
            sentence_range: Some(sentence_range),
        };
        provenance.validate()?;
        Ok(provenance)
    }

    /// Provenance for a split-stage triple (no paper id).
    pub fn split() -> Self {
        Provenance {
            stage: Stage::Split,
            paper_id: None,
            section: None,
            sentence_range: None,
        }
    }

    /// Provenance for an abstraction-stage triple (no paper id).
    pub fn abstracted() -> Self {
        Provenance {
            stage: Stage::Abstract,
            paper_id: None,
            section: None,
            sentence_range: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.stage {
            Stage::Initial => {
                if self.paper_id.is_none() || self.section.is_none() || self.sentence_range.is_none()
                {
                    return Err(Error::validation(
                        "initial-stage provenance requires paper_id, section, and sentence_range",
                    ));
                }
            }
            Stage::Split | Stage::Abstract => {
                if self.paper_id.is_some() {
                    return Err(Error::validation(format!(
                        "{}-stage provenance must not carry a paper_id",
                        self.stage
                    )));
                }
            }
        }
        if let Some((start, end)) = self.sentence_range {
            if start > end {
                return Err(Error::validation(format!(
                    "sentence_range start {start} exceeds end {end}"
                )));
            }
        }
        Ok(())
    }
}

/// The atomic extraction unit: head, relation, tail, and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub head: Entity,
    pub relation: Relation,
    pub tail: Entity,
    pub provenance: Provenance,
    #[serde(flatten, default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: ExtraMap,
}

impl Triple {
    pub fn new(head: Entity, relation: Relation, tail: Entity, provenance: Provenance) -> Result<Self> {
        if normalize(&head.text).is_empty() {
            return Err(Error::validation(format!(
                "head {:?} normalizes to an empty key",
                head.text
            )));
        }
        if normalize(&tail.text).is_empty() {
            return Err(Error::validation(format!(
                "tail {:?} normalizes to an empty key",
                tail.text
            )));
        }
        Ok(Triple {
            head,
            relation,
            tail,
            provenance,
            extra: ExtraMap::new(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.head.validate()?;
        self.tail.validate()?;
        if self.relation.text.trim().is_empty() {
            return Err(Error::validation("relation text is empty"));
        }
        if normalize(&self.head.text).is_empty() || normalize(&self.tail.text).is_empty() {
            return Err(Error::validation("triple endpoint normalizes to an empty key"));
        }
        self.provenance.validate()
    }
}

/// An edge in the assembled graph. Duplicate ⟨head, relation, tail⟩ triples
/// merge into one edge carrying every contributing provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub head_key: String,
    pub relation: String,
    pub tail_key: String,
    pub provenances: Vec<Provenance>,
}

/// A deduplicated node set plus a labeled edge multiset with per-edge
/// provenance. Nodes are keyed by normalized entity text; iteration order is
/// lexicographic over node keys and insertion order over edges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<String, Entity>,
    edges: Vec<Edge>,
    edge_lookup: HashMap<(String, String, String), usize>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Merge a triple into the graph, deduplicating nodes on normalized text
    /// and edges on ⟨head key, relation text, tail key⟩.
    pub fn insert_triple(&mut self, triple: &Triple) -> Result<()> {
        let head_key = normalize(&triple.head.text);
        let tail_key = normalize(&triple.tail.text);
        if head_key.is_empty() || tail_key.is_empty() {
            return Err(Error::validation(format!(
                "triple ⟨{} | {} | {}⟩ has an endpoint with an empty normalized key",
                triple.head.text, triple.relation.text, triple.tail.text
            )));
        }
        self.insert_node(&head_key, &triple.head);
        self.insert_node(&tail_key, &triple.tail);

        let relation = triple.relation.text.trim().to_string();
        let lookup_key = (head_key.clone(), relation.clone(), tail_key.clone());
        match self.edge_lookup.get(&lookup_key) {
            Some(&idx) => self.edges[idx].provenances.push(triple.provenance.clone()),
            None => {
                self.edge_lookup.insert(lookup_key, self.edges.len());
                self.edges.push(Edge {
                    head_key,
                    relation,
                    tail_key,
                    provenances: vec![triple.provenance.clone()],
                });
            }
        }
        Ok(())
    }

    fn insert_node(&mut self, key: &str, entity: &Entity) {
        match self.nodes.get_mut(key) {
            Some(existing) => {
                existing.properties = merge_properties(&existing.properties, &entity.properties);
            }
            None => {
                self.nodes.insert(key.to_string(), entity.clone());
            }
        }
    }

    /// Nodes in lexicographic key order.
    pub fn nodes(&self) -> impl Iterator<Item = (&str, &Entity)> {
        self.nodes.iter().map(|(k, e)| (k.as_str(), e))
    }

    pub fn node_keys(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn entity(&self, key: &str) -> Option<&Entity> {
        self.nodes.get(key)
    }

    pub fn contains_node(&self, key: &str) -> bool {
        self.nodes.contains_key(key)
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Integer 0–5 scores for one evaluated unit at one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeScore {
    pub accuracy: u8,
    pub comprehensiveness: u8,
    pub relevance: u8,
    pub rationale: String,
    pub stage: Stage,
}

impl JudgeScore {
    pub fn new(
        accuracy: u8,
        comprehensiveness: u8,
        relevance: u8,
        rationale: impl Into<String>,
        stage: Stage,
    ) -> Result<Self> {
        for (name, value) in [
            ("accuracy", accuracy),
            ("comprehensiveness", comprehensiveness),
            ("relevance", relevance),
        ] {
            if value > 5 {
                return Err(Error::validation(format!(
                    "{name} score {value} is outside 0..=5"
                )));
            }
        }
        Ok(JudgeScore {
            accuracy,
            comprehensiveness,
            relevance,
            rationale: rationale.into(),
            stage,
        })
    }
}

/// Canonical text normalization used for node identity: lowercase, collapse
/// whitespace runs, trim, and strip terminal sentence punctuation. Internal
/// punctuation is kept so parenthesized acronyms stay meaningful. Idempotent.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for ch in text.trim().chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            for lower in ch.to_lowercase() {
                out.push(lower);
            }
        }
    }
    while out.ends_with(['.', ',', ';', ':', ' ']) {
        out.pop();
    }
    out
}

/// Union two property maps. Shared keys with differing values become the
/// deduplicated list of all values (scalars treated as one-element lists),
/// preserving first-appearance order. Nothing is ever dropped.
pub fn merge_properties(existing: &PropertyMap, incoming: &PropertyMap) -> PropertyMap {
    let mut out = existing.clone();
    for (key, incoming_value) in incoming {
        match out.get(key) {
            None => {
                out.insert(key.clone(), incoming_value.clone());
            }
            Some(existing_value) => {
                let mut values: Vec<String> = Vec::new();
                for v in existing_value.values().into_iter().chain(incoming_value.values()) {
                    if !values.iter().any(|seen| seen == v) {
                        values.push(v.to_string());
                    }
                }
                let merged = if values.len() == 1 {
                    PropertyValue::One(values.pop().expect("one value"))
                } else {
                    PropertyValue::Many(values)
                };
                out.insert(key.clone(), merged);
            }
        }
    }
    out
}
