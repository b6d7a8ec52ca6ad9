//! Document loading, sentence segmentation, and extraction batching.
//!
//! Documents are processed in batches of three target sentences with the
//! three preceding sentences as context. Context never crosses a section
//! boundary: the section is the provenance unit, and pronouns rarely refer
//! across sections in scientific prose.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A source document: ordered sections of ordered sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub paper_id: String,
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub sentences: Vec<String>,
}

impl Document {
    pub fn sentence_count(&self) -> usize {
        self.sections.iter().map(|s| s.sentences.len()).sum()
    }
}

/// One unit of work for initial extraction: up to three target sentences
/// plus up to three context sentences that immediately precede them in the
/// same section. `sentence_range` holds the inclusive global indices of the
/// targets within the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionBatch {
    pub paper_id: String,
    pub section: String,
    pub context_sentences: Vec<String>,
    pub target_sentences: Vec<String>,
    pub sentence_range: (usize, usize),
}

impl ExtractionBatch {
    /// Stable identifier used in logs, audit entries, and judge units.
    pub fn id(&self) -> String {
        format!(
            "{}/{}/{}-{}",
            self.paper_id, self.section, self.sentence_range.0, self.sentence_range.1
        )
    }
}

/// Corpus file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    /// Raw prose; the whole file becomes one section named "body".
    PlainText,
    /// One JSON record per line with fields `paper_id`, `section`, `text`.
    SectionedRecords,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" | "plain_text" => Ok(CorpusFormat::PlainText),
            "sections" | "sectioned_records" => Ok(CorpusFormat::SectionedRecords),
            other => Err(Error::validation(format!(
                "unknown corpus format {other:?} (expected plain|sections)"
            ))),
        }
    }
}

#[derive(Debug, Deserialize)]
struct SectionRecord {
    paper_id: String,
    section: String,
    text: String,
}

/// Abbreviations that do not end a sentence. Compared case-insensitively
/// against the token ending at a period, including its dots.
const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "al.", "cf.", "fig.", "figs.", "eq.", "eqs.", "vs.", "dr.", "mr.",
    "mrs.", "ms.", "prof.", "st.", "no.", "approx.", "ca.",
];

/// Split text into sentences on `.`, `!`, `?` followed by whitespace and an
/// uppercase letter or digit. Does not split after a curated abbreviation
/// list or inside parentheses. Returns trimmed, non-empty sentences.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut paren_depth: usize = 0;
    let mut i = 0;

    while i < chars.len() {
        let ch = chars[i];
        match ch {
            '(' => paren_depth += 1,
            ')' => paren_depth = paren_depth.saturating_sub(1),
            '.' | '!' | '?'
                if paren_depth == 0
                    && is_boundary(&chars, i)
                    && !(ch == '.' && ends_with_abbreviation(&chars, start, i)) =>
            {
                push_sentence(&mut sentences, &chars[start..=i]);
                // advance past the whitespace run to the next sentence
                i += 1;
                while i < chars.len() && chars[i].is_whitespace() {
                    i += 1;
                }
                start = i;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    if start < chars.len() {
        push_sentence(&mut sentences, &chars[start..]);
    }
    sentences
}

fn push_sentence(sentences: &mut Vec<String>, slice: &[char]) {
    let sentence: String = slice.iter().collect();
    let trimmed = sentence.trim();
    if !trimmed.is_empty() {
        sentences.push(trimmed.to_string());
    }
}

/// True when the punctuation at `idx` is followed by whitespace and then an
/// uppercase letter or a digit.
fn is_boundary(chars: &[char], idx: usize) -> bool {
    let mut j = idx + 1;
    if j >= chars.len() || !chars[j].is_whitespace() {
        return false;
    }
    while j < chars.len() && chars[j].is_whitespace() {
        j += 1;
    }
    match chars.get(j) {
        Some(c) => c.is_uppercase() || c.is_ascii_digit(),
        None => false,
    }
}

/// True when the token ending at the period at `idx` is a known abbreviation.
fn ends_with_abbreviation(chars: &[char], start: usize, idx: usize) -> bool {
    let mut token_start = idx;
    while token_start > start && !chars[token_start - 1].is_whitespace() {
        token_start -= 1;
    }
    let token: String = chars[token_start..=idx].iter().collect::<String>().to_lowercase();
    ABBREVIATIONS.contains(&token.as_str())
}

/// Load one document. Plain text becomes a single "body" section; sectioned
/// records must all carry the same paper id.
pub fn load_document(path: &Path, format: CorpusFormat) -> Result<Document> {
    let mut documents = load_corpus(path, format)?;
    match documents.len() {
        1 => Ok(documents.pop().expect("one document")),
        n => Err(Error::validation(format!(
            "{} contains {n} papers; load it as a corpus",
            path.display()
        ))),
    }
}

/// Load every document in a corpus file. Sectioned records are grouped by
/// `paper_id` (papers ordered by first appearance, sections in file order).
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Document>> {
    match format {
        CorpusFormat::PlainText => {
            let mut text = String::new();
            File::open(path)
                .and_then(|mut f| f.read_to_string(&mut text))
                .map_err(|e| Error::io(path, e))?;
            let sentences = segment_sentences(&text);
            if sentences.is_empty() {
                return Err(Error::validation(format!(
                    "{} contains no sentences",
                    path.display()
                )));
            }
            let paper_id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "document".to_string());
            Ok(vec![Document {
                paper_id,
                sections: vec![Section {
                    name: "body".to_string(),
                    sentences,
                }],
            }])
        }
        CorpusFormat::SectionedRecords => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let mut documents: Vec<Document> = Vec::new();
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: SectionRecord =
                    serde_json::from_str(&line).map_err(|e| Error::Record {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        detail: e.to_string(),
                    })?;
                if record.paper_id.trim().is_empty() {
                    return Err(Error::Record {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        detail: "empty paper_id".to_string(),
                    });
                }
                let sentences = segment_sentences(&record.text);
                if sentences.is_empty() {
                    return Err(Error::Record {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        detail: format!(
                            "section {:?} of paper {:?} contains no sentences",
                            record.section, record.paper_id
                        ),
                    });
                }
                let doc = match documents.iter_mut().find(|d| d.paper_id == record.paper_id) {
                    Some(doc) => doc,
                    None => {
                        documents.push(Document {
                            paper_id: record.paper_id.clone(),
                            sections: Vec::new(),
                        });
                        documents.last_mut().expect("just pushed")
                    }
                };
                if doc.sections.iter().any(|s| s.name == record.section) {
                    return Err(Error::Record {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        detail: format!(
                            "duplicate section {:?} in paper {:?}",
                            record.section, record.paper_id
                        ),
                    });
                }
                doc.sections.push(Section {
                    name: record.section,
                    sentences,
                });
            }
            if documents.is_empty() {
                return Err(Error::validation(format!(
                    "{} contains no records",
                    path.display()
                )));
            }
            Ok(documents)
        }
    }
}

/// Partition a document's sentences into extraction batches. Each section is
/// chunked in order into runs of at most `batch_size` sentences; a batch's
/// context is the `context_size` sentences immediately before it in the same
/// section. Global sentence indices run across the whole document.
pub fn make_batches(doc: &Document, batch_size: usize, context_size: usize) -> Vec<ExtractionBatch> {
    assert!(batch_size >= 1, "batch_size must be at least 1");
    let mut batches = Vec::new();
    let mut global_index = 0;
    for section in &doc.sections {
        let sentences = &section.sentences;
        let mut offset = 0;
        while offset < sentences.len() {
            let end = (offset + batch_size).min(sentences.len());
            let context_start = offset.saturating_sub(context_size);
            batches.push(ExtractionBatch {
                paper_id: doc.paper_id.clone(),
                section: section.name.clone(),
                context_sentences: sentences[context_start..offset].to_vec(),
                target_sentences: sentences[offset..end].to_vec(),
                sentence_range: (global_index + offset, global_index + end - 1),
            });
            offset = end;
        }
        global_index += sentences.len();
    }
    batches
}
