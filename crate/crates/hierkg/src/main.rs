//! Thin command-line front end over the `hierkg` library.
//!
//! Each subcommand reads its predecessor's artifact from the run directory
//! and writes its own; `pipeline` runs every stage in order. Exit codes:
//! 0 success, 1 partial failure (skipped batches or unscored units),
//! 2 error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hierkg::config::Config;
use hierkg::ingest::CorpusFormat;
use hierkg::pipeline::{self, ExportFormat, JudgeSelector};

#[derive(Parser)]
#[command(
    name = "hierkg",
    version,
    about = "Hierarchical knowledge-graph construction from documents"
)]
struct Cli {
    /// TOML config file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory holding stage artifacts.
    #[arg(long, global = true, default_value = "run")]
    run_dir: PathBuf,

    /// Backend override: live or mock.
    #[arg(long, global = true)]
    backend: Option<String>,

    /// Chat-completions endpoint URL override.
    #[arg(long, global = true)]
    endpoint: Option<String>,

    /// Model name override.
    #[arg(long, global = true)]
    model: Option<String>,

    /// Drop the coreference instruction from initial prompts.
    #[arg(long, global = true)]
    no_coreference: bool,

    /// Drop the known-entity list from split prompts.
    #[arg(long, global = true)]
    no_entity_consistency: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Initial triple extraction over a corpus file.
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        /// Corpus layout: plain or sections.
        #[arg(long, default_value = "sections")]
        format: String,
    },
    /// Split compound entity mentions of the extracted graph.
    Split,
    /// Attach generalized parent concepts to specific entities.
    Abstract,
    /// Structural report (node/edge counts, giant-component fraction).
    Metrics {
        /// Records file to assemble; defaults to the most advanced stage file.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Score stage outputs with the judge model and aggregate.
    Judge {
        #[arg(long, default_value = "all")]
        stage: String,
    },
    /// Serialize the assembled graph.
    Export {
        /// records, cypher, or graphml.
        #[arg(long)]
        format: String,
        /// Output path; defaults into the run directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Records file to assemble; defaults to the most advanced stage file.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Run extract, split, abstract, metrics, judge, and export in order.
    Pipeline {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "sections")]
        format: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> hierkg::Result<ExitCode> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(backend) = &cli.backend {
        config.provider.backend = backend.parse()?;
    }
    if let Some(endpoint) = &cli.endpoint {
        config.provider.endpoint_url = endpoint.clone();
    }
    if let Some(model) = &cli.model {
        config.provider.model_name = model.clone();
    }
    if cli.no_coreference {
        config.ablations.coreference = false;
    }
    if cli.no_entity_consistency {
        config.ablations.entity_consistency = false;
    }
    config.validate()?;
    let run_dir = &cli.run_dir;

    match cli.command {
        Command::Extract { corpus, format } => {
            let format: CorpusFormat = format.parse()?;
            let summary = pipeline::run_extract(&config, run_dir, &corpus, format)?;
            println!(
                "extract: {} records, {} batches skipped → {}",
                summary.records_written,
                summary.skipped,
                run_dir.join(pipeline::INITIAL_RECORDS).display()
            );
            Ok(exit_for_skipped(summary.skipped))
        }
        Command::Split => {
            let summary = pipeline::run_split(&config, run_dir)?;
            println!(
                "split: {} records (cumulative) → {}",
                summary.records_written,
                run_dir.join(pipeline::SPLIT_RECORDS).display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Abstract => {
            let summary = pipeline::run_abstract(&config, run_dir)?;
            println!(
                "abstract: {} records (cumulative) → {}",
                summary.records_written,
                run_dir.join(pipeline::ABSTRACT_RECORDS).display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics { records } => {
            let report = pipeline::run_metrics(&config, run_dir, records.as_deref())?;
            print!("{}", report.to_table());
            Ok(ExitCode::SUCCESS)
        }
        Command::Judge { stage } => {
            let selector: JudgeSelector = stage.parse()?;
            let (report, unscored) = pipeline::run_judge(&config, run_dir, selector)?;
            print!("{}", report.to_table());
            if unscored > 0 {
                eprintln!("{unscored} units left unscored");
            }
            Ok(exit_for_skipped(unscored))
        }
        Command::Export {
            format,
            out,
            records,
        } => {
            let format: ExportFormat = format.parse()?;
            let (dest, count) =
                pipeline::run_export(&config, run_dir, format, out.as_deref(), records.as_deref())?;
            println!("export: {count} units → {}", dest.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Pipeline { corpus, format } => {
            let format: CorpusFormat = format.parse()?;
            let summary = pipeline::run_pipeline(&config, run_dir, &corpus, format)?;
            println!(
                "extract: {} records ({} batches skipped)",
                summary.extract.records_written, summary.extract.skipped
            );
            println!("split: {} records (cumulative)", summary.split.records_written);
            println!(
                "abstract: {} records (cumulative)",
                summary.abstract_.records_written
            );
            println!();
            print!("{}", summary.structural.to_table());
            println!();
            print!("{}", summary.judge.to_table());
            if summary.skipped_total() > 0 {
                eprintln!(
                    "partial failure: {} skipped batches, {} unscored units",
                    summary.extract.skipped, summary.unscored_units
                );
            }
            Ok(exit_for_skipped(summary.skipped_total()))
        }
    }
}

fn exit_for_skipped(skipped: usize) -> ExitCode {
    if skipped > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
