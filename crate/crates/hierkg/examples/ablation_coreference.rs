//! Coreference ablation: the flag changes exactly one prompt block, and on
//! the mock backend the pronoun heads stop resolving when it is off.
//!
//! ```bash
//! cargo run -p hierkg --example ablation_coreference
//! ```

use hierkg::extraction::{build_initial_prompt, extract_initial, ExtractionOptions};
use hierkg::ingest::ExtractionBatch;
use hierkg::llm::{LlmClient, ProviderConfig};
use hierkg::prompts::{TemplateSet, COREFERENCE_BLOCK};

fn main() -> hierkg::Result<()> {
    let batch = ExtractionBatch {
        paper_id: "p1".to_string(),
        section: "stress".to_string(),
        context_sentences: vec!["Parental stress causes child anxiety.".to_string()],
        target_sentences: vec!["It disrupts family routines.".to_string()],
        sentence_range: (1, 1),
    };
    let templates = TemplateSet::builtin();

    let with = build_initial_prompt(&batch, &templates, true);
    let without = build_initial_prompt(&batch, &templates, false);
    assert_eq!(with.user_prompt.replace(COREFERENCE_BLOCK, ""), without.user_prompt);
    println!("prompts differ by exactly this block:\n---\n{COREFERENCE_BLOCK}---\n");

    let client = LlmClient::mock(ProviderConfig::default());
    for (label, coreference) in [("with coreference", true), ("without coreference", false)] {
        let opts = ExtractionOptions {
            coreference,
            ..ExtractionOptions::default()
        };
        let triples = extract_initial(&batch, &client, &templates, &opts)?;
        println!(
            "{label}: head of the pronoun sentence = {:?}",
            triples[0].head.text
        );
    }
    Ok(())
}
