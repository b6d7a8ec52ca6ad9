//! Prompt templates and the text blocks shared by prompt builders.
//!
//! Templates are plain text files with `{{slot}}` placeholders. The builtin
//! set ships inside the binary; a template directory from config can
//! override any of them file by file. The marker constants below are the
//! structural anchors both the prompt builders and the deterministic mock
//! backend rely on; a drift-guard test asserts the builtin templates still
//! contain them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The prompt families the pipeline sends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PromptStage {
    Initial,
    SplitFilter,
    Split,
    AbstractFilter,
    Abstract,
    Judge,
}

impl PromptStage {
    pub const ALL: [PromptStage; 6] = [
        PromptStage::Initial,
        PromptStage::SplitFilter,
        PromptStage::Split,
        PromptStage::AbstractFilter,
        PromptStage::Abstract,
        PromptStage::Judge,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PromptStage::Initial => "initial",
            PromptStage::SplitFilter => "split_filter",
            PromptStage::Split => "split",
            PromptStage::AbstractFilter => "abstract_filter",
            PromptStage::Abstract => "abstract",
            PromptStage::Judge => "judge",
        }
    }
}

/// System and user text for one prompt family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTemplate {
    pub system: String,
    pub user: String,
}

impl StageTemplate {
    /// First line of the user template; used by the mock backend to
    /// recognize which prompt family it received.
    pub fn user_first_line(&self) -> &str {
        self.user.lines().next().unwrap_or("")
    }
}

/// A full template set, one [`StageTemplate`] per prompt family.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<PromptStage, StageTemplate>,
}

macro_rules! builtin {
    ($stage:literal) => {
        StageTemplate {
            system: include_str!(concat!("../templates/", $stage, ".system.txt"))
                .trim_end()
                .to_string(),
            user: include_str!(concat!("../templates/", $stage, ".user.txt"))
                .trim_end()
                .to_string(),
        }
    };
}

impl TemplateSet {
    /// The template set shipped with the crate.
    pub fn builtin() -> Self {
        let mut templates = BTreeMap::new();
        templates.insert(PromptStage::Initial, builtin!("initial"));
        templates.insert(PromptStage::SplitFilter, builtin!("split_filter"));
        templates.insert(PromptStage::Split, builtin!("split"));
        templates.insert(PromptStage::AbstractFilter, builtin!("abstract_filter"));
        templates.insert(PromptStage::Abstract, builtin!("abstract"));
        templates.insert(PromptStage::Judge, builtin!("judge"));
        TemplateSet { templates }
    }

    /// Builtin templates with per-file overrides from `dir`. Override files
    /// are named `<stage>.system.txt` / `<stage>.user.txt`.
    pub fn with_overrides(dir: &Path) -> Result<Self> {
        let mut set = Self::builtin();
        for stage in PromptStage::ALL {
            let template = set.templates.get_mut(&stage).expect("all stages present");
            for (suffix, slot) in [("system", &mut template.system), ("user", &mut template.user)]
            {
                let path = dir.join(format!("{}.{suffix}.txt", stage.as_str()));
                if path.exists() {
                    *slot = fs::read_to_string(&path)
                        .map_err(|e| Error::io(&path, e))?
                        .trim_end()
                        .to_string();
                }
            }
        }
        Ok(set)
    }

    pub fn get(&self, stage: PromptStage) -> &StageTemplate {
        self.templates.get(&stage).expect("all stages present")
    }

    /// Per-stage SHA-256 over system and user text, for run manifests.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.templates
            .iter()
            .map(|(stage, t)| {
                let mut hasher = Sha256::new();
                hasher.update(t.system.as_bytes());
                hasher.update([0u8]);
                hasher.update(t.user.as_bytes());
                (stage.as_str().to_string(), hex_digest(hasher))
            })
            .collect()
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Replace `{{name}}` slots in a template. Unknown slots are left in place
/// so a drifted template shows up verbatim in the prompt rather than
/// vanishing silently.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (name, value) in slots {
        out = out.replace(&format!("{{{{{name}}}}}"), value);
    }
    out
}

// ---------------------------------------------------------------------------
// Shared prompt blocks and structural markers
// ---------------------------------------------------------------------------

/// Coreference instruction inserted into initial prompts when the ablation
/// flag is on. With the flag off, the prompt is byte-identical except that
/// this block is absent.
pub const COREFERENCE_BLOCK: &str = "Resolve pronouns and referring expressions before extracting: when a target sentence says \"it\", \"this\", or a similar referring phrase, replace the reference with the full text of the entity it refers to, using the context sentences and the earlier target sentences.\n\n";

/// Header introducing context sentences in initial prompts.
pub const CONTEXT_HEADER: &str =
    "Context (earlier sentences, for reference only; do not extract from them):";

/// Header introducing target sentences in initial prompts.
pub const TARGETS_HEADER: &str = "Target sentences:";

/// Header introducing the known-entity list in split prompts when entity
/// consistency is on.
pub const KNOWN_ENTITIES_HEADER: &str = "Known entities already in the graph:";

/// Instruction following the known-entity list.
pub const KNOWN_ENTITIES_INSTRUCTION: &str =
    "When a component is the same concept as a known entity, reuse the known entity's exact wording.";

/// Field prefix naming the entity under consideration in filter, split, and
/// abstraction prompts.
pub const ENTITY_FIELD: &str = "Entity: ";

/// Marker rendered for judge units where the filter declined to act.
pub const NO_ACTION_MARKER: &str =
    "No action was taken: the entity was left unchanged. Score whether declining was correct.";

/// Render sentences or entities as a bulleted block, one item per line.
pub fn bullet_list(items: &[String]) -> String {
    items
        .iter()
        .map(|item| format!("- {item}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parse a bulleted block back into items; used by the mock backend.
pub fn parse_bullet_lines<'a>(lines: impl Iterator<Item = &'a str>) -> Vec<String> {
    lines
        .take_while(|line| line.starts_with("- "))
        .map(|line| line[2..].to_string())
        .collect()
}
