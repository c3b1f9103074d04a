use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ontoscaffold::config::{LlmMode, RunConfig, SimilarityBackend};
use ontoscaffold::graph::ExportFormat;
use ontoscaffold::pipeline::{self, PipelineError};

/// Build ontology scaffold graphs from standards text and evaluate them.
#[derive(Parser)]
#[command(name = "ontoscaffold", version)]
struct Cli {
    /// TOML run configuration. Paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory. Artifact inputs given as relative paths are read
    /// from here too.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment, mine, infer, validate and assemble a graph from a document.
    Extract(ExtractArgs),
    /// Merge near-duplicate term nodes.
    Align(AlignArgs),
    /// Sweep precision/recall/F1 of a prediction against gold sets.
    Eval(EvalArgs),
    /// Print node, triple and island counts.
    Stats(StatsArgs),
    /// Write a graph as JSON, DOT or CSV.
    Export(ExportArgs),
}

#[derive(Args)]
#[group(multiple = false)]
struct LlmModeArgs {
    /// Replay LLM responses from this cassette.
    #[arg(long, value_name = "CASSETTE")]
    replay: Option<PathBuf>,
    /// Call the live endpoint and append responses to this cassette.
    #[arg(long, value_name = "CASSETTE")]
    record: Option<PathBuf>,
    /// Call the live endpoint without recording.
    #[arg(long)]
    live: bool,
}

#[derive(Args)]
struct ExtractArgs {
    /// Input document (overrides the config).
    document: Option<PathBuf>,
    #[arg(long)]
    doc_id: Option<String>,
    #[command(flatten)]
    mode: LlmModeArgs,
}

#[derive(Args)]
struct AlignArgs {
    #[arg(long, default_value = pipeline::GRAPH_FILE)]
    graph: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    backend: Option<SimilarityBackend>,
}

#[derive(Args)]
struct EvalArgs {
    /// Prediction: graph JSON, or triples JSONL.
    #[arg(long, default_value = pipeline::GRAPH_FILE)]
    pred: PathBuf,
    /// Gold set JSON; repeat for several.
    #[arg(long, required = true)]
    gold: Vec<PathBuf>,
    #[arg(long)]
    backend: Option<SimilarityBackend>,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// Also write one SVG chart per (level, gold).
    #[arg(long)]
    charts: bool,
}

#[derive(Args)]
struct StatsArgs {
    /// Graph JSON files; defaults to the extracted graph.
    graphs: Vec<PathBuf>,
    /// Print a table with one row per graph instead of JSON.
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, default_value = pipeline::GRAPH_FILE)]
    graph: PathBuf,
    #[arg(long, default_value = "json")]
    format: ExportFormat,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn in_out(out: &Path, p: &Path) -> PathBuf {
    if p.is_relative() {
        out.join(p)
    } else {
        p.to_path_buf()
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, PipelineError> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn write_stdout(bytes: &[u8]) -> Result<(), PipelineError> {
    std::io::stdout()
        .write_all(bytes)
        .map_err(|source| PipelineError::Io {
            path: "<stdout>".into(),
            source,
        })
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut config = load_config(cli.config.as_deref())?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Extract(args) => {
            if let Some(doc) = args.document {
                config.document = Some(doc);
            }
            if args.doc_id.is_some() {
                config.doc_id = args.doc_id;
            }
            if let Some(c) = args.mode.replay {
                config.llm.mode = LlmMode::Replay;
                config.llm.cassette = Some(c);
            } else if let Some(c) = args.mode.record {
                config.llm.mode = LlmMode::Record;
                config.llm.cassette = Some(c);
            } else if args.mode.live {
                config.llm.mode = LlmMode::Live;
            }
            let result = pipeline::extract(&config)?;
            result.write(out)?;
            let c = &result.manifest.counts;
            eprintln!(
                "{} sentences: {} skipped, {} orphaned, {} with triples; {} nodes, {} edges, {} islands",
                c.sentences, c.gated_skips, c.orphans, c.sentences_with_batches, c.nodes, c.edges, c.islands
            );
        }
        Command::Align(args) => {
            if let Some(t) = args.threshold {
                config.alignment.threshold = t;
            }
            if let Some(b) = args.backend {
                config.alignment.backend = b;
            }
            let (graph, map) = pipeline::align(&in_out(out, &args.graph), &config)?;
            pipeline::write_alignment(out, &graph, &map)?;
            eprintln!(
                "merged {} labels; {} nodes remain",
                map.merged_count(),
                graph.node_count()
            );
        }
        Command::Eval(args) => {
            if let Some(b) = args.backend {
                config.evaluation.backend = b;
            }
            if let Some(t) = args.taus {
                config.evaluation.taus = t;
            }
            config.validate()?;
            let result = pipeline::evaluate(&in_out(out, &args.pred), &args.gold, &config)?;
            for path in pipeline::write_sweep(out, &result, args.charts)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Stats(args) => {
            let graphs = if args.graphs.is_empty() {
                vec![PathBuf::from(pipeline::GRAPH_FILE)]
            } else {
                args.graphs
            };
            let mut rows = Vec::new();
            for g in &graphs {
                let path = in_out(out, g);
                let name = path.file_stem().map_or_else(
                    || path.display().to_string(),
                    |s| s.to_string_lossy().into_owned(),
                );
                rows.push((name, pipeline::stats(&path)?));
            }
            if args.table {
                write_stdout(pipeline::stats_table(&rows).as_bytes())?;
            } else {
                for (_, s) in &rows {
                    write_stdout(pipeline::stats_json(s).as_bytes())?;
                }
            }
        }
        Command::Export(args) => {
            let bytes = pipeline::export(&in_out(out, &args.graph), args.format)?;
            match args.output {
                Some(p) => {
                    let p = in_out(out, &p);
                    std::fs::write(&p, bytes)
                        .map_err(|source| PipelineError::Io { path: p, source })?;
                }
                None => write_stdout(&bytes)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                pipeline::exit::CONFIG as u8
            } else {
                pipeline::exit::OK as u8
            });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
