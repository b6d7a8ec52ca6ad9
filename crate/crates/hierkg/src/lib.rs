//! Hierarchical knowledge-graph construction from documents.
//!
//! `hierkg` turns a corpus of sectioned documents into a provenance-tagged
//! knowledge graph through three LLM-driven stages, then evaluates the
//! result structurally and semantically:
//!
//! 1. **Initial extraction** — each 3-sentence batch (with 3 sentences of
//!    context and coreference-aware prompting) becomes meaning-preserving
//!    ⟨head, relation, tail⟩ triples with entity properties and full source
//!    tracing (paper, section, sentence span).
//! 2. **Splitting** — compound mentions ("A and B") divide into component
//!    entities, with a known-entity list in the prompt so identical
//!    concepts reuse identical wording.
//! 3. **Abstraction** — specific entities gain generalized parent concepts
//!    ("a specific B" → "B"), linking islands bottom-up without a schema.
//!
//! Structural evaluation reports node/edge counts and the fraction of nodes
//! in the largest weakly connected component over three cumulative
//! snapshots; semantic evaluation scores each stage's outputs 0–5 on
//! accuracy, comprehensiveness, and relevance with an LLM judge, aggregated
//! over all samples and positive samples.
//!
//! Everything runs against any OpenAI-compatible endpoint or against a
//! deterministic offline mock, so the full pipeline is reproducible
//! bit-for-bit in tests.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run -p hierkg --example ingest_batches              # segmentation + batching
//! cargo run -p hierkg --example mock_pipeline               # full offline pipeline
//! cargo run -p hierkg --example structural_metrics          # components and F_GC
//! cargo run -p hierkg --example judge_report                # LLM-as-judge scoring
//! cargo run -p hierkg --example export_formats              # records / Cypher / GraphML
//! cargo run -p hierkg --example ablation_coreference        # coreference prompt ablation
//! cargo run -p hierkg --example ablation_entity_consistency # consistency ablation
//! cargo run -p hierkg --example live_endpoint               # real endpoint wiring
//! ```
//!
//! The `hierkg` binary wraps the same stages as resumable subcommands
//! (`extract`, `split`, `abstract`, `metrics`, `judge`, `export`,
//! `pipeline`); see the repository README.
//!
//! ## Module map
//!
//! - [`model`] — entities, relations, provenance, triples, graphs, scores
//! - [`ingest`] — document loading, sentence segmentation, batching
//! - [`llm`] — chat client, HTTP backend, deterministic mock, audit log
//! - [`prompts`] — editable prompt templates and their structural markers
//! - [`extraction`] — stage prompts, operations, and parallel stage runners
//! - [`parser`] — model-output parsing with bounded structural repair
//! - [`graph`] — assembly, connectivity metrics, stage snapshots
//! - [`judge`] — rubric prompts, scoring, all/positive-sample aggregation
//! - [`export`] — records, Cypher, and GraphML serialization
//! - [`records`] — the canonical line-delimited interchange format
//! - [`config`] / [`pipeline`] — TOML configuration and stage orchestration

pub mod config;
pub mod error;
pub mod export;
pub mod extraction;
pub mod graph;
pub mod ingest;
pub mod judge;
pub mod llm;
pub mod model;
pub mod parser;
pub mod pipeline;
pub mod prompts;
pub mod records;

pub use error::{Error, LlmError, Result};
pub use model::{
    Edge, Entity, JudgeScore, KnowledgeGraph, PropertyMap, PropertyValue, Provenance, Relation,
    Stage, Triple,
};
