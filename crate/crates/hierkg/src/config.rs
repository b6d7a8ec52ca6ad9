//! Run configuration: one TOML file with provider, pipeline, template, and
//! ablation sections. Every value has a default, all flags override config,
//! and the API key is only ever named by environment variable.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::extraction::ExtractionOptions;
use crate::judge::JudgeCriteria;
use crate::llm::ProviderConfig;
use crate::prompts::TemplateSet;

/// Which transport answers chat requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Deterministic offline rule-based responder.
    Mock,
    /// OpenAI-compatible HTTP endpoint.
    Live,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "live" => Ok(BackendKind::Live),
            other => Err(Error::Config(format!(
                "unknown backend {other:?} (expected live|mock)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSection {
    pub backend: BackendKind,
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key_env: String,
    pub temperature: f64,
    pub random_seed: Option<u64>,
    pub max_retries: u32,
    pub request_timeout_secs: u64,
    pub max_concurrent_requests: usize,
    pub retry_backoff_ms: u64,
}

impl Default for ProviderSection {
    fn default() -> Self {
        let defaults = ProviderConfig::default();
        ProviderSection {
            backend: BackendKind::Mock,
            endpoint_url: defaults.endpoint_url,
            model_name: defaults.model_name,
            api_key_env: defaults.api_key_env,
            temperature: defaults.temperature,
            random_seed: defaults.random_seed,
            max_retries: defaults.max_retries,
            request_timeout_secs: defaults.request_timeout.as_secs(),
            max_concurrent_requests: defaults.max_concurrent_requests,
            retry_backoff_ms: defaults.retry_backoff_ms,
        }
    }
}

impl ProviderSection {
    pub fn provider_config(&self) -> ProviderConfig {
        ProviderConfig {
            endpoint_url: self.endpoint_url.clone(),
            model_name: self.model_name.clone(),
            api_key_env: self.api_key_env.clone(),
            temperature: self.temperature,
            random_seed: self.random_seed,
            max_retries: self.max_retries,
            request_timeout: Duration::from_secs(self.request_timeout_secs),
            max_concurrent_requests: self.max_concurrent_requests,
            retry_backoff_ms: self.retry_backoff_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub batch_size: usize,
    pub context_size: usize,
    pub split_relation_label: String,
    pub abstract_relation_label: String,
    pub known_entities_cap: usize,
    pub max_split_depth: u32,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let defaults = ExtractionOptions::default();
        PipelineSection {
            batch_size: 3,
            context_size: 3,
            split_relation_label: defaults.split_relation_label,
            abstract_relation_label: defaults.abstract_relation_label,
            known_entities_cap: defaults.known_entities_cap,
            max_split_depth: defaults.max_split_depth,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplatesSection {
    /// Directory of `<stage>.system.txt` / `<stage>.user.txt` overrides.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationsSection {
    pub coreference: bool,
    pub entity_consistency: bool,
}

impl Default for AblationsSection {
    fn default() -> Self {
        AblationsSection {
            coreference: true,
            entity_consistency: true,
        }
    }
}

/// The whole run configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub provider: ProviderSection,
    /// Separate endpoint/model for the judge; falls back to `provider`.
    pub judge_provider: Option<ProviderSection>,
    pub pipeline: PipelineSection,
    pub templates: TemplatesSection,
    pub ablations: AblationsSection,
    pub judge: JudgeCriteriaSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JudgeCriteriaSection {
    pub accuracy: String,
    pub comprehensiveness: String,
    pub relevance: String,
}

impl Default for JudgeCriteriaSection {
    fn default() -> Self {
        let defaults = JudgeCriteria::default();
        JudgeCriteriaSection {
            accuracy: defaults.accuracy,
            comprehensiveness: defaults.comprehensiveness,
            relevance: defaults.relevance,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: Config = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pipeline.batch_size < 1 {
            return Err(Error::Config("pipeline.batch_size must be at least 1".into()));
        }
        self.provider.provider_config().validate()?;
        if let Some(judge) = &self.judge_provider {
            judge.provider_config().validate()?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON serialization, for run manifests.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn extraction_options(&self) -> ExtractionOptions {
        ExtractionOptions {
            coreference: self.ablations.coreference,
            entity_consistency: self.ablations.entity_consistency,
            split_relation_label: self.pipeline.split_relation_label.clone(),
            abstract_relation_label: self.pipeline.abstract_relation_label.clone(),
            known_entities_cap: self.pipeline.known_entities_cap,
            max_split_depth: self.pipeline.max_split_depth,
        }
    }

    pub fn judge_criteria(&self) -> JudgeCriteria {
        JudgeCriteria {
            accuracy: self.judge.accuracy.clone(),
            comprehensiveness: self.judge.comprehensiveness.clone(),
            relevance: self.judge.relevance.clone(),
        }
    }

    pub fn template_set(&self) -> Result<TemplateSet> {
        match &self.templates.dir {
            Some(dir) => TemplateSet::with_overrides(dir),
            None => Ok(TemplateSet::builtin()),
        }
    }

    /// Effective judge provider: the dedicated section, or the extractor's.
    pub fn effective_judge_provider(&self) -> &ProviderSection {
        self.judge_provider.as_ref().unwrap_or(&self.provider)
    }
}
