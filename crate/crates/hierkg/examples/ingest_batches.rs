//! Load a sectioned corpus, segment it into sentences, and build the
//! 3-sentence extraction batches with their 3-sentence contexts.
//!
//! ```bash
//! cargo run -p hierkg --example ingest_batches
//! ```

use std::path::Path;

use hierkg::ingest::{load_corpus, make_batches, segment_sentences, CorpusFormat};

fn main() -> hierkg::Result<()> {
    // Sentence segmentation is rule-based: abbreviation and parenthesis
    // guards, no split unless the next sentence starts with an uppercase
    // letter or a digit.
    let text = "We studied X (n = 412. approx) in detail. See Fig. 2 for the cohort. Results follow.";
    println!("segmenting: {text}");
    for sentence in segment_sentences(text) {
        println!("  · {sentence}");
    }

    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy_corpus.jsonl");
    let documents = load_corpus(&corpus, CorpusFormat::SectionedRecords)?;
    println!("\nloaded {} papers from {}", documents.len(), corpus.display());

    for document in &documents {
        println!("\npaper {} ({} sentences)", document.paper_id, document.sentence_count());
        for batch in make_batches(document, 3, 3) {
            println!(
                "  batch {} targets={} context={}",
                batch.id(),
                batch.target_sentences.len(),
                batch.context_sentences.len()
            );
        }
    }
    Ok(())
}
