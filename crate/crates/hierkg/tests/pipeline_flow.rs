//! Pipeline-level integration tests: stage ordering, resumability, the
//! concurrency bound, provenance invariants over a full mock run, and the
//! CLI binary.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use hierkg::config::Config;
use hierkg::extraction::build_split_filter_prompt;
use hierkg::ingest::CorpusFormat;
use hierkg::llm::{
    BackendError, BackendReply, CallTag, ChatBackend, ChatRequest, LlmClient, MockBackend,
    ProviderConfig,
};
use hierkg::model::{normalize, Stage};
use hierkg::pipeline::{self, JudgeSelector};
use hierkg::prompts::TemplateSet;
use hierkg::records::read_records_file;
use hierkg::Error;

fn toy_corpus() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy_corpus.jsonl")
}

#[test]
fn split_before_extract_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let err = pipeline::run_split(&Config::default(), dir.path()).unwrap_err();
    match err {
        Error::MissingArtifact { stage, .. } => assert_eq!(stage, "extract"),
        other => panic!("unexpected error: {other}"),
    }
}

#[test]
fn abstract_before_split_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = Config::default();
    pipeline::run_extract(&config, dir.path(), &toy_corpus(), CorpusFormat::SectionedRecords)
        .unwrap();
    let err = pipeline::run_abstract(&config, dir.path()).unwrap_err();
    match err {
        Error::MissingArtifact { stage, .. } => assert_eq!(stage, "split"),
        other => panic!("unexpected error: {other}"),
    }
}

#[test]
fn judge_all_requires_every_action_log() {
    let dir = tempfile::tempdir().unwrap();
    let config = Config::default();
    pipeline::run_extract(&config, dir.path(), &toy_corpus(), CorpusFormat::SectionedRecords)
        .unwrap();
    let err = pipeline::run_judge(&config, dir.path(), JudgeSelector::All).unwrap_err();
    assert!(matches!(err, Error::MissingArtifact { .. }));
    // Judging only the initial stage works with just the extract artifacts.
    let (report, unscored) =
        pipeline::run_judge(&config, dir.path(), JudgeSelector::Initial).unwrap();
    assert_eq!(unscored, 0);
    assert!(report.all_samples.contains_key(&Stage::Initial));
    assert!(report.split_ratio.is_none());
}

#[test]
fn staged_commands_reproduce_the_pipeline_artifacts() {
    let config = Config::default();
    let staged = tempfile::tempdir().unwrap();
    pipeline::run_extract(&config, staged.path(), &toy_corpus(), CorpusFormat::SectionedRecords)
        .unwrap();
    pipeline::run_split(&config, staged.path()).unwrap();
    pipeline::run_abstract(&config, staged.path()).unwrap();
    pipeline::run_metrics(&config, staged.path(), None).unwrap();
    pipeline::run_judge(&config, staged.path(), JudgeSelector::All).unwrap();

    let full = tempfile::tempdir().unwrap();
    pipeline::run_pipeline(&config, full.path(), &toy_corpus(), CorpusFormat::SectionedRecords)
        .unwrap();

    for artifact in [
        pipeline::INITIAL_RECORDS,
        pipeline::SPLIT_RECORDS,
        pipeline::ABSTRACT_RECORDS,
        pipeline::SPLIT_ACTIONS,
        pipeline::ABSTRACT_ACTIONS,
        pipeline::STRUCTURAL_JSON,
        pipeline::JUDGE_JSON,
    ] {
        let a = std::fs::read(staged.path().join(artifact)).unwrap();
        let b = std::fs::read(full.path().join(artifact)).unwrap();
        assert_eq!(a, b, "{artifact} differs between staged and pipeline runs");
    }
}

#[test]
fn hierarchy_triples_never_carry_paper_ids_and_children_exist() {
    let config = Config::default();
    let dir = tempfile::tempdir().unwrap();
    pipeline::run_pipeline(&config, dir.path(), &toy_corpus(), CorpusFormat::SectionedRecords)
        .unwrap();
    let triples = read_records_file(&dir.path().join(pipeline::ABSTRACT_RECORDS)).unwrap();

    let mut pre_abstract_nodes: BTreeSet<String> = BTreeSet::new();
    for triple in &triples {
        match triple.provenance.stage {
            Stage::Initial => {
                assert!(triple.provenance.paper_id.is_some());
                pre_abstract_nodes.insert(normalize(&triple.head.text));
                pre_abstract_nodes.insert(normalize(&triple.tail.text));
            }
            Stage::Split => {
                assert!(triple.provenance.paper_id.is_none());
                assert!(triple.provenance.section.is_none());
                pre_abstract_nodes.insert(normalize(&triple.head.text));
                pre_abstract_nodes.insert(normalize(&triple.tail.text));
            }
            Stage::Abstract => assert!(triple.provenance.paper_id.is_none()),
        }
    }
    // Every abstraction edge hangs off an entity that existed after the
    // initial and split stages.
    for triple in triples.iter().filter(|t| t.provenance.stage == Stage::Abstract) {
        assert!(
            pre_abstract_nodes.contains(&normalize(&triple.head.text)),
            "abstract child {:?} not in the initial+split node set",
            triple.head.text
        );
    }
}

#[test]
fn split_parts_reference_entities_present_after_initial_assembly() {
    let config = Config::default();
    let dir = tempfile::tempdir().unwrap();
    pipeline::run_extract(&config, dir.path(), &toy_corpus(), CorpusFormat::SectionedRecords)
        .unwrap();
    pipeline::run_split(&config, dir.path()).unwrap();

    let initial = read_records_file(&dir.path().join(pipeline::INITIAL_RECORDS)).unwrap();
    let initial_nodes: BTreeSet<String> = initial
        .iter()
        .flat_map(|t| [normalize(&t.head.text), normalize(&t.tail.text)])
        .collect();
    let with_split = read_records_file(&dir.path().join(pipeline::SPLIT_RECORDS)).unwrap();
    for triple in with_split.iter().filter(|t| t.provenance.stage == Stage::Split) {
        assert!(
            initial_nodes.contains(&normalize(&triple.head.text)),
            "split parent {:?} did not exist after initial assembly",
            triple.head.text
        );
    }
}

struct InstrumentedBackend {
    inner: MockBackend,
    in_flight: Arc<AtomicUsize>,
    max_in_flight: Arc<AtomicUsize>,
}

impl ChatBackend for InstrumentedBackend {
    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        std::thread::sleep(std::time::Duration::from_millis(2));
        let result = self.inner.send(request);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        result
    }

    fn name(&self) -> &'static str {
        "instrumented-mock"
    }
}

#[test]
fn in_flight_requests_never_exceed_the_configured_bound() {
    let bound = 4;
    let max_in_flight = Arc::new(AtomicUsize::new(0));
    let backend = InstrumentedBackend {
        inner: MockBackend::new(),
        in_flight: Arc::new(AtomicUsize::new(0)),
        max_in_flight: max_in_flight.clone(),
    };
    let client = LlmClient::new(
        ProviderConfig {
            max_concurrent_requests: bound,
            ..ProviderConfig::default()
        },
        Box::new(backend),
    );
    let templates = TemplateSet::builtin();

    std::thread::scope(|scope| {
        for i in 0..32 {
            let client = &client;
            let templates = &templates;
            scope.spawn(move || {
                let request = build_split_filter_prompt(&format!("entity {i} and other"), templates);
                client
                    .complete(&request, &CallTag::new("split_filter", format!("e{i}")))
                    .unwrap();
            });
        }
    });

    let observed = max_in_flight.load(Ordering::SeqCst);
    assert!(observed <= bound, "bound violated: {observed} > {bound}");
    assert!(observed >= 2, "test never overlapped requests");
}

#[test]
fn audit_log_tags_every_stage() {
    let config = Config::default();
    let dir = tempfile::tempdir().unwrap();
    pipeline::run_pipeline(&config, dir.path(), &toy_corpus(), CorpusFormat::SectionedRecords)
        .unwrap();
    let audit = std::fs::read_to_string(dir.path().join(pipeline::AUDIT_LOG)).unwrap();
    let stages: BTreeSet<String> = audit
        .lines()
        .map(|line| {
            let entry: serde_json::Value = serde_json::from_str(line).unwrap();
            entry["stage"].as_str().unwrap().to_string()
        })
        .collect();
    for expected in ["initial", "split_filter", "split", "abstract_filter", "abstract", "judge"] {
        assert!(stages.contains(expected), "no audit entries for {expected}");
    }
}

#[test]
fn manifest_records_config_and_template_hashes() {
    let config = Config::default();
    let dir = tempfile::tempdir().unwrap();
    pipeline::run_extract(&config, dir.path(), &toy_corpus(), CorpusFormat::SectionedRecords)
        .unwrap();
    pipeline::run_split(&config, dir.path()).unwrap();
    let manifest: Vec<serde_json::Value> = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join(pipeline::MANIFEST)).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest.len(), 2);
    assert_eq!(manifest[0]["command"], "extract");
    assert_eq!(manifest[1]["command"], "split");
    for entry in &manifest {
        assert_eq!(entry["config_hash"], serde_json::json!(config.hash()));
        assert!(entry["template_hashes"]["initial"].is_string());
        assert!(entry["started_unix"].as_u64().is_some());
    }
}

// ---------------------------------------------------------------------------
// CLI binary
// ---------------------------------------------------------------------------

fn hierkg_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hierkg"))
}

#[test]
fn cli_pipeline_runs_and_prints_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let output = hierkg_cmd()
        .args(["--run-dir", dir.path().to_str().unwrap()])
        .args(["pipeline", "--corpus", toy_corpus().to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("with_split_and_abstraction"));
    assert!(stdout.contains("Positive samples"));
    assert!(dir.path().join(pipeline::EXPORT_GRAPHML).exists());
}

#[test]
fn cli_split_without_extract_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = hierkg_cmd()
        .args(["--run-dir", dir.path().to_str().unwrap(), "split"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("run `extract` first"), "stderr: {stderr}");
}

#[test]
fn cli_export_writes_to_the_requested_path() {
    let dir = tempfile::tempdir().unwrap();
    let status = hierkg_cmd()
        .args(["--run-dir", dir.path().to_str().unwrap()])
        .args(["extract", "--corpus", toy_corpus().to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let dest = dir.path().join("initial_only.cypher");
    let output = hierkg_cmd()
        .args(["--run-dir", dir.path().to_str().unwrap()])
        .args(["export", "--format", "cypher", "--out", dest.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(dest.exists());
    let text = std::fs::read_to_string(&dest).unwrap();
    assert!(text.contains("MERGE (n:Entity"));
}

#[test]
fn cli_unknown_format_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let output = hierkg_cmd()
        .args(["--run-dir", dir.path().to_str().unwrap()])
        .args(["export", "--format", "rdf"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown export format"));
}
