//! Staged runs over files: extract, align, eval, stats, export.
//!
//! Every command reads the previous command's artifact and writes its own
//! into an output directory, so runs are diffable and resumable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::align::{align_nodes, AlignError, MergeMap};
use crate::config::{LlmMode, RunConfig, SimilarityBackend, TaggerMode};
use crate::error::ConfigError;
use crate::eval::chart::render_svg;
use crate::eval::similarity::{
    EmbeddingSimilarity, ExactSimilarity, Similarity, SimilarityError, TrigramSimilarity,
};
use crate::eval::{load_gold, load_prediction, sweep, EvalError, Level, SweepResult};
use crate::graph::{ExportFormat, GraphError, GraphStats, OrphanSentence, ScaffoldGraph};
use crate::inference::{
    build_request, candidate_gate, run_document, CassetteEntry, Gate, HttpChatClient, LlmClient,
    LlmError, OrphanReason, PromptRequest, RecordingClient, ReplayClient, SentenceOutcome,
};
use crate::ingest::{load_document, IngestError, SegmentedDocument};
use crate::mining::lexicon::LEXICON_VERSION;
use crate::mining::{
    mine_sentence, BuiltinTagger, CandidateSet, FallbackTagger, RemoteTagger, Tagger, TaggerError,
};
use crate::normalize::{validate_triple, Rejection};

pub const GRAPH_FILE: &str = "graph.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REJECTIONS_FILE: &str = "rejections.jsonl";
pub const OUTCOMES_FILE: &str = "outcomes.jsonl";
pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const SEGMENTS_FILE: &str = "segments.json";
pub const ALIGNED_GRAPH_FILE: &str = "aligned_graph.json";
pub const MERGE_MAP_FILE: &str = "merge_map.json";
pub const SWEEP_FILE: &str = "sweep.csv";

/// Error from any stage, tagged with the stage name in its message.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("[config] {0}")]
    Config(#[from] ConfigError),
    #[error("[io] {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("[ingest] {0}")]
    Ingest(#[from] IngestError),
    #[error("[mine] {0}")]
    Tagger(#[from] TaggerError),
    #[error("[infer] {0}")]
    Llm(#[from] LlmError),
    #[error("[graph] {path}: {source}")]
    Graph { path: PathBuf, source: GraphError },
    #[error("[align] {0}")]
    Align(#[from] AlignError),
    #[error("[eval] {0}")]
    Eval(#[from] EvalError),
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INPUT: i32 = 3;
    pub const LLM_UNAVAILABLE: i32 = 4;
    pub const CASSETTE_MISS: i32 = 5;
    pub const TAGGER_UNAVAILABLE: i32 = 6;
    pub const SIMILARITY_UNAVAILABLE: i32 = 7;
}

fn similarity_exit(e: &SimilarityError) -> i32 {
    match e {
        SimilarityError::Cassette { .. } => exit::INPUT,
        _ => exit::SIMILARITY_UNAVAILABLE,
    }
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => exit::CONFIG,
            PipelineError::Io { .. } | PipelineError::Ingest(_) | PipelineError::Graph { .. } => {
                exit::INPUT
            }
            PipelineError::Tagger(TaggerError::EmptyInput) => exit::OTHER,
            PipelineError::Tagger(_) => exit::TAGGER_UNAVAILABLE,
            PipelineError::Llm(LlmError::Unavailable(_)) => exit::LLM_UNAVAILABLE,
            PipelineError::Llm(LlmError::CassetteMiss { .. }) => exit::CASSETTE_MISS,
            PipelineError::Llm(LlmError::Cassette { .. }) => exit::INPUT,
            PipelineError::Align(AlignError::Config(_)) => exit::CONFIG,
            PipelineError::Align(AlignError::Similarity(e)) => similarity_exit(e),
            PipelineError::Align(AlignError::Graph(_)) => exit::INPUT,
            PipelineError::Eval(EvalError::Config(_)) => exit::CONFIG,
            PipelineError::Eval(EvalError::Similarity(e)) => similarity_exit(e),
            PipelineError::Eval(EvalError::Format { .. } | EvalError::Io { .. }) => exit::INPUT,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(io_err(path))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("record serializes") + "\n")
        .collect()
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set.
pub fn timestamp() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
    {
        return v;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub sentences: usize,
    pub gated_skips: usize,
    pub orphans: usize,
    pub orphans_no_verbs: usize,
    pub orphans_empty_result: usize,
    pub orphans_parse_failure: usize,
    pub sentences_with_batches: usize,
    /// Batch sentences whose every triple was rejected by validation.
    pub batches_fully_rejected: usize,
    pub llm_attempts: u64,
    pub max_attempts_used: u32,
    pub triples_raw: usize,
    pub triples_validated: usize,
    pub triples_rejected: usize,
    pub orphan_nodes: usize,
    pub nodes: usize,
    pub edges: usize,
    pub assertions: usize,
    pub islands: usize,
}

impl StageCounts {
    /// `sentences = gated_skips + orphans + sentences_with_batches` and
    /// `triples_raw = triples_validated + triples_rejected`.
    pub fn reconciles(&self) -> bool {
        self.sentences == self.gated_skips + self.orphans + self.sentences_with_batches
            && self.triples_raw == self.triples_validated + self.triples_rejected
            && self.orphans
                == self.orphans_no_verbs + self.orphans_empty_result + self.orphans_parse_failure
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub lexicon_version: String,
    pub doc_id: String,
    pub input_sha256: String,
    /// Present in replay mode.
    pub cassette_sha256: Option<String>,
    pub config: RunConfig,
    pub counts: StageCounts,
    pub started_at: u64,
    pub finished_at: u64,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub struct ExtractOutput {
    pub document: SegmentedDocument,
    pub candidates: Vec<CandidateSet>,
    pub outcomes: Vec<SentenceOutcome>,
    pub graph: ScaffoldGraph,
    pub rejections: Vec<Rejection>,
    pub manifest: RunManifest,
}

pub fn build_tagger(config: &RunConfig) -> Result<Box<dyn Tagger>, PipelineError> {
    Ok(match config.tagger.mode {
        TaggerMode::Builtin => Box::new(BuiltinTagger),
        TaggerMode::Remote => {
            let remote =
                RemoteTagger::new(config.tagger.endpoint.clone(), config.tagger_timeout())?;
            if config.tagger.fallback {
                Box::new(FallbackTagger::new(remote))
            } else {
                Box::new(remote)
            }
        }
    })
}

fn required_cassette(config: &RunConfig) -> Result<&Path, PipelineError> {
    config.llm.cassette.as_deref().ok_or_else(|| {
        ConfigError::Invalid("llm.cassette is required in replay and record modes".into()).into()
    })
}

fn http_client(config: &RunConfig) -> Result<HttpChatClient, PipelineError> {
    let key = std::env::var(&config.llm.api_key_env).ok();
    Ok(HttpChatClient::new(
        &config.llm.endpoint,
        key,
        Duration::from_millis(config.llm.timeout_ms),
    )?)
}

pub fn build_llm(config: &RunConfig) -> Result<Box<dyn LlmClient>, PipelineError> {
    Ok(match config.llm.mode {
        LlmMode::Replay => Box::new(ReplayClient::open(required_cassette(config)?)?),
        LlmMode::Live => Box::new(http_client(config)?),
        LlmMode::Record => Box::new(RecordingClient::new(
            http_client(config)?,
            required_cassette(config)?,
        )?),
    })
}

pub fn build_similarity(
    backend: SimilarityBackend,
    config: &RunConfig,
) -> Result<Box<dyn Similarity>, PipelineError> {
    let emb = &config.evaluation.embedding;
    let timeout = Duration::from_millis(emb.timeout_ms);
    let cassette = || {
        emb.cassette.as_deref().ok_or_else(|| {
            PipelineError::Config(ConfigError::Invalid(
                "evaluation.embedding.cassette is required unless mode is live".into(),
            ))
        })
    };
    let wrap = |r: Result<EmbeddingSimilarity, SimilarityError>| {
        r.map_err(|e| PipelineError::Eval(EvalError::Similarity(e)))
    };
    Ok(match backend {
        SimilarityBackend::Exact => Box::new(ExactSimilarity),
        SimilarityBackend::Trigram => Box::new(TrigramSimilarity),
        SimilarityBackend::Embedding => Box::new(match emb.mode {
            LlmMode::Replay => wrap(EmbeddingSimilarity::replay(cassette()?, &emb.model))?,
            LlmMode::Live => wrap(EmbeddingSimilarity::remote(
                &emb.endpoint,
                &emb.model,
                timeout,
            ))?,
            LlmMode::Record => wrap(EmbeddingSimilarity::record(
                &emb.endpoint,
                &emb.model,
                cassette()?,
                timeout,
            ))?,
        }),
    })
}

fn doc_id_for(config: &RunConfig, path: &Path) -> String {
    config.doc_id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map_or_else(|| "doc".into(), |s| s.to_string_lossy().into_owned())
    })
}

/// Run ingest, mining, inference, validation, assembly and orphan insertion
/// with clients built from `config`.
pub fn extract(config: &RunConfig) -> Result<ExtractOutput, PipelineError> {
    config.validate_for_extract()?;
    let tagger = build_tagger(config)?;
    let llm = build_llm(config)?;
    extract_with(config, tagger.as_ref(), llm.as_ref())
}

/// [`extract`] with caller-supplied tagger and LLM client.
pub fn extract_with(
    config: &RunConfig,
    tagger: &dyn Tagger,
    llm: &dyn LlmClient,
) -> Result<ExtractOutput, PipelineError> {
    use rayon::prelude::*;

    config.validate()?;
    let started_at = timestamp();
    let path = config
        .document
        .as_deref()
        .ok_or_else(|| ConfigError::Invalid("no input document given".into()))?;
    let source = read_bytes(path)?;
    let doc_id = doc_id_for(config, path);
    let document = load_document(&source, &doc_id)?;

    let inference = config.inference_config();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(inference.max_in_flight.max(1))
        .build()
        .map_err(|e| TaggerError::Unavailable {
            endpoint: "local".into(),
            reason: format!("worker pool: {e}"),
        })?;
    let sentences: Vec<_> = document.sentences().map(|(_, s)| s).collect();
    let candidates: Vec<CandidateSet> = pool.install(|| {
        sentences
            .par_iter()
            .map(|s| mine_sentence(s, tagger))
            .collect::<Result<_, _>>()
    })?;
    let outcomes = run_document(&document, &candidates, llm, &inference)?;

    let cassette_sha256 = match (config.llm.mode, &config.llm.cassette) {
        (LlmMode::Replay, Some(p)) => Some(sha256_hex(&read_bytes(p)?)),
        _ => None,
    };

    let mut counts = StageCounts {
        sentences: document.sentence_count(),
        ..Default::default()
    };
    let mut graph = ScaffoldGraph::new();
    let mut rejections = Vec::new();
    let mut orphans = Vec::new();
    for (((paragraph, sentence), cands), outcome) in
        document.sentences().zip(&candidates).zip(&outcomes)
    {
        match outcome {
            SentenceOutcome::Skipped { .. } => counts.gated_skips += 1,
            SentenceOutcome::Orphan(mark) => {
                counts.orphans += 1;
                match mark.reason {
                    OrphanReason::NoVerbs => counts.orphans_no_verbs += 1,
                    OrphanReason::EmptyResult => counts.orphans_empty_result += 1,
                    OrphanReason::ParseFailure { .. } => counts.orphans_parse_failure += 1,
                }
                counts.llm_attempts += u64::from(mark.attempts_used);
                counts.max_attempts_used = counts.max_attempts_used.max(mark.attempts_used);
                orphans.push(OrphanSentence {
                    sentence_id: sentence.sentence_id.clone(),
                    text: sentence.text.clone(),
                });
            }
            SentenceOutcome::Batch(batch) => {
                counts.sentences_with_batches += 1;
                counts.llm_attempts += u64::from(batch.attempts_used);
                counts.max_attempts_used = counts.max_attempts_used.max(batch.attempts_used);
                let mut accepted = 0;
                for raw in &batch.triples {
                    counts.triples_raw += 1;
                    match validate_triple(
                        raw,
                        cands,
                        config.validation.policy,
                        paragraph.section_label.as_deref(),
                    ) {
                        Ok(t) => {
                            counts.triples_validated += 1;
                            accepted += 1;
                            graph.add_triple(&t);
                        }
                        Err(r) => {
                            counts.triples_rejected += 1;
                            rejections.push(r);
                        }
                    }
                }
                if accepted == 0 {
                    counts.batches_fully_rejected += 1;
                    orphans.push(OrphanSentence {
                        sentence_id: sentence.sentence_id.clone(),
                        text: sentence.text.clone(),
                    });
                }
            }
        }
    }
    graph.insert_orphans(&orphans);
    counts.orphan_nodes = graph.orphan_ids().len();
    let stats = graph.stats();
    counts.nodes = stats.node_count;
    counts.edges = stats.triple_count;
    counts.islands = stats.island_count;
    counts.assertions = graph.assertion_count();

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        lexicon_version: LEXICON_VERSION.into(),
        doc_id,
        input_sha256: sha256_hex(&source),
        cassette_sha256,
        config: config.clone(),
        counts,
        started_at,
        finished_at: timestamp(),
    };
    log::info!(
        "extracted {} nodes, {} edges from {} sentences",
        manifest.counts.nodes,
        manifest.counts.edges,
        manifest.counts.sentences
    );
    Ok(ExtractOutput {
        document,
        candidates,
        outcomes,
        graph,
        rejections,
        manifest,
    })
}

impl ExtractOutput {
    /// Write every artifact into `out_dir`.
    pub fn write(&self, out_dir: &Path) -> Result<(), PipelineError> {
        write_file(&out_dir.join(SEGMENTS_FILE), self.document.to_json())?;
        write_file(&out_dir.join(CANDIDATES_FILE), jsonl(&self.candidates))?;
        write_file(&out_dir.join(OUTCOMES_FILE), jsonl(&self.outcomes))?;
        write_file(&out_dir.join(REJECTIONS_FILE), jsonl(&self.rejections))?;
        write_file(&out_dir.join(GRAPH_FILE), self.graph.to_json())?;
        write_file(&out_dir.join(MANIFEST_FILE), self.manifest.to_json())?;
        Ok(())
    }
}

/// One sentence's gate decision and, when it reaches the model, the request
/// that would be sent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedSentence {
    pub sentence_id: String,
    pub text: String,
    pub candidates: CandidateSet,
    pub gate: Gate,
    pub request: Option<PromptRequest>,
    pub fingerprint: Option<String>,
}

/// Segment and mine the configured document without calling the model.
pub fn plan(
    config: &RunConfig,
    tagger: &dyn Tagger,
) -> Result<Vec<PlannedSentence>, PipelineError> {
    config.validate()?;
    let path = config
        .document
        .as_deref()
        .ok_or_else(|| ConfigError::Invalid("no input document given".into()))?;
    let document = load_document(&read_bytes(path)?, &doc_id_for(config, path))?;
    let inference = config.inference_config();
    let mut out = Vec::new();
    for (_, sentence) in document.sentences() {
        let candidates = mine_sentence(sentence, tagger)?;
        let gate = candidate_gate(&candidates, inference.orphan_on_empty_verbs);
        let request = match gate {
            Gate::Infer => Some(build_request(sentence, &candidates, &inference)?),
            _ => None,
        };
        out.push(PlannedSentence {
            sentence_id: sentence.sentence_id.clone(),
            text: sentence.text.clone(),
            fingerprint: request.as_ref().map(PromptRequest::fingerprint),
            candidates,
            gate,
            request,
        });
    }
    Ok(out)
}

/// Cassette lines for hand-scripted responses keyed by sentence id, in
/// document order. Fails if a scripted sentence never reaches the model.
pub fn scripted_cassette(
    planned: &[PlannedSentence],
    script: &BTreeMap<String, Vec<String>>,
) -> Result<String, ConfigError> {
    for id in script.keys() {
        if !planned
            .iter()
            .any(|p| &p.sentence_id == id && p.fingerprint.is_some())
        {
            return Err(ConfigError::Invalid(format!(
                "scripted sentence {id} never reaches the model"
            )));
        }
    }
    let mut out = String::new();
    for p in planned {
        let (Some(fp), Some(responses)) = (&p.fingerprint, script.get(&p.sentence_id)) else {
            continue;
        };
        for r in responses {
            let entry = CassetteEntry {
                fingerprint: fp.clone(),
                response: r.clone(),
            };
            out.push_str(&serde_json::to_string(&entry).expect("entry serializes"));
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn read_graph(path: &Path) -> Result<ScaffoldGraph, PipelineError> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|e| io_err(path)(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    ScaffoldGraph::from_json(&text).map_err(|source| PipelineError::Graph {
        path: path.to_path_buf(),
        source,
    })
}

pub fn align(
    graph_path: &Path,
    config: &RunConfig,
) -> Result<(ScaffoldGraph, MergeMap), PipelineError> {
    crate::align::validate_threshold(config.alignment.threshold)?;
    let graph = read_graph(graph_path)?;
    let similarity = build_similarity(config.alignment.backend, config)?;
    Ok(align_nodes(
        &graph,
        similarity.as_ref(),
        config.alignment.threshold,
    )?)
}

pub fn write_alignment(
    out_dir: &Path,
    graph: &ScaffoldGraph,
    map: &MergeMap,
) -> Result<(), PipelineError> {
    write_file(&out_dir.join(ALIGNED_GRAPH_FILE), graph.to_json())?;
    write_file(&out_dir.join(MERGE_MAP_FILE), map.to_json())
}

pub fn evaluate(
    pred_path: &Path,
    gold_paths: &[PathBuf],
    config: &RunConfig,
) -> Result<SweepResult, PipelineError> {
    if gold_paths.is_empty() {
        return Err(ConfigError::Invalid("at least one gold file is required".into()).into());
    }
    let pred = load_prediction(pred_path)?;
    let golds = gold_paths
        .iter()
        .map(|p| load_gold(p))
        .collect::<Result<Vec<_>, _>>()?;
    let provider = build_similarity(config.evaluation.backend, config)?;
    Ok(sweep(
        &pred,
        &golds,
        provider.as_ref(),
        &config.evaluation.taus,
    )?)
}

/// Write `sweep.csv` and, when `charts` is set, one SVG per (level, gold)
/// into `out_dir/charts/`. Returns the written paths.
pub fn write_sweep(
    out_dir: &Path,
    result: &SweepResult,
    charts: bool,
) -> Result<Vec<PathBuf>, PipelineError> {
    let csv_path = out_dir.join(SWEEP_FILE);
    write_file(&csv_path, result.to_csv())?;
    let mut written = vec![csv_path];
    if charts {
        let mut golds: Vec<&str> = Vec::new();
        for r in &result.rows {
            if !golds.contains(&r.gold.as_str()) {
                golds.push(&r.gold);
            }
        }
        for level in [Level::Node, Level::Triple] {
            for gold in &golds {
                let rows = result.series(level, gold);
                if rows.is_empty() {
                    continue;
                }
                let path = out_dir
                    .join("charts")
                    .join(format!("{level}_{}.svg", file_safe(gold)));
                write_file(
                    &path,
                    render_svg(&format!("{level} level vs {gold}"), &rows),
                )?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn stats(graph_path: &Path) -> Result<GraphStats, PipelineError> {
    Ok(read_graph(graph_path)?.stats())
}

pub fn stats_json(stats: &GraphStats) -> String {
    serde_json::to_string(stats).expect("stats serialize") + "\n"
}

/// Plain-text table of node, triple and island counts, one row per dataset.
pub fn stats_table(rows: &[(String, GraphStats)]) -> String {
    let width = rows
        .iter()
        .map(|(n, _)| n.chars().count())
        .chain(std::iter::once("Dataset".len()))
        .max()
        .unwrap_or(7);
    let mut out = format!(
        "{:<width$}  {:>7}  {:>9}  {:>9}\n",
        "Dataset", "#Nodes", "#Triples", "#Islands"
    );
    for (name, s) in rows {
        out.push_str(&format!(
            "{:<width$}  {:>7}  {:>9}  {:>9}\n",
            name, s.node_count, s.triple_count, s.island_count
        ));
    }
    out
}

pub fn export(graph_path: &Path, format: ExportFormat) -> Result<Vec<u8>, PipelineError> {
    Ok(read_graph(graph_path)?.export(format))
}

/// Summary of rejection reasons by kind, for logs.
pub fn rejection_summary(rejections: &[Rejection]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in rejections {
        let kind = serde_json::to_value(&r.reason)
            .ok()
            .and_then(|v| v.get("kind").and_then(|k| k.as_str().map(String::from)))
            .unwrap_or_else(|| "unknown".into());
        *out.entry(kind).or_insert(0) += 1;
    }
    out
}
