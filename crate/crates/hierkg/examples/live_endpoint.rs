//! Point the pipeline at a real OpenAI-compatible endpoint.
//!
//! Reads the endpoint, model, and API-key variable name from the
//! environment and runs a single extraction batch. Exits quietly when no
//! key is configured, so the example is safe to run in CI.
//!
//! ```bash
//! export OPENAI_API_KEY=...
//! HIERKG_MODEL=gpt-4o cargo run -p hierkg --example live_endpoint
//! ```

use hierkg::extraction::{extract_initial, ExtractionOptions};
use hierkg::ingest::ExtractionBatch;
use hierkg::llm::{LlmClient, ProviderConfig};
use hierkg::prompts::TemplateSet;

fn main() -> hierkg::Result<()> {
    let api_key_env = std::env::var("HIERKG_API_KEY_ENV").unwrap_or_else(|_| "OPENAI_API_KEY".into());
    if std::env::var(&api_key_env).is_err() {
        println!("{api_key_env} is not set; nothing to do. Set it to run against a live endpoint.");
        return Ok(());
    }

    let config = ProviderConfig {
        endpoint_url: std::env::var("HIERKG_ENDPOINT")
            .unwrap_or_else(|_| "https://api.openai.com/v1/chat/completions".into()),
        model_name: std::env::var("HIERKG_MODEL").unwrap_or_else(|_| "gpt-4o".into()),
        api_key_env,
        ..ProviderConfig::default()
    };
    println!("endpoint: {}", config.endpoint_url);
    println!("model:    {} (temperature 0, seed 42)", config.model_name);

    let client = LlmClient::live(config)?;
    let batch = ExtractionBatch {
        paper_id: "demo".to_string(),
        section: "body".to_string(),
        context_sentences: vec![
            "We first explored the relationship of infant TV exposure at 12 months and the composite IQ score at 4.5 years.".to_string(),
        ],
        target_sentences: vec![
            "This association remained significant after adjusting for maternal education.".to_string(),
        ],
        sentence_range: (1, 1),
    };
    let triples = extract_initial(&batch, &client, &TemplateSet::builtin(), &ExtractionOptions::default())?;
    println!("\nextracted {} triple(s):", triples.len());
    for triple in &triples {
        println!("  ⟨{} | {} | {}⟩", triple.head.text, triple.relation.text, triple.tail.text);
    }
    Ok(())
}
