//! Per-sentence relation inference: candidate gate, prompt, LLM call, strict
//! parsing with bounded retries, and orphan routing.

pub mod client;
pub mod parse;
pub mod prompt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::ingest::{SegmentedDocument, Sentence};
use crate::mining::CandidateSet;

pub use client::{
    infer, read_cassette, CassetteEntry, HttpChatClient, LlmClient, LlmError, PromptRequest,
    RecordingClient, ReplayClient,
};
pub use parse::{parse_valid_json, ParseError, RawTriple};
pub use prompt::{compose_constrained_prompt, dynamic_max_tokens, TokenBudget};

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    pub model_name: String,
    pub temperature: f64,
    /// Attempts per sentence (k).
    pub retries: u32,
    pub budget: TokenBudget,
    pub max_in_flight: usize,
    /// Orphan sentences that have terms but no verbs without calling the LLM.
    pub orphan_on_empty_verbs: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            model_name: "gpt-4o-mini".into(),
            temperature: 0.2,
            retries: 3,
            budget: TokenBudget::default(),
            max_in_flight: 4,
            orphan_on_empty_verbs: true,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(ConfigError::Invalid(format!(
                "temperature {} outside [0, 1]",
                self.temperature
            )));
        }
        if self.retries == 0 {
            return Err(ConfigError::Invalid("retries must be at least 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ConfigError::Invalid(
                "max_in_flight must be at least 1".into(),
            ));
        }
        self.budget.max_tokens(0).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    /// Nothing to constrain to; the sentence is skipped silently.
    Skip,
    /// Terms but no verbs: orphan without an LLM call.
    OrphanNoVerbs,
    Infer,
}

pub fn candidate_gate(candidates: &CandidateSet, orphan_on_empty_verbs: bool) -> Gate {
    match (candidates.terms.is_empty(), candidates.verbs.is_empty()) {
        (true, _) => Gate::Skip,
        (false, true) if orphan_on_empty_verbs => Gate::OrphanNoVerbs,
        _ => Gate::Infer,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTripleBatch {
    pub sentence_id: String,
    pub triples: Vec<RawTriple>,
    pub raw_response: String,
    pub attempts_used: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrphanReason {
    NoVerbs,
    EmptyResult,
    ParseFailure { last_error: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrphanMark {
    pub sentence_id: String,
    pub reason: OrphanReason,
    pub attempts_used: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SentenceOutcome {
    Skipped { sentence_id: String },
    Batch(RawTripleBatch),
    Orphan(OrphanMark),
}

impl SentenceOutcome {
    pub fn sentence_id(&self) -> &str {
        match self {
            SentenceOutcome::Skipped { sentence_id } => sentence_id,
            SentenceOutcome::Batch(b) => &b.sentence_id,
            SentenceOutcome::Orphan(o) => &o.sentence_id,
        }
    }
}

pub fn build_request(
    sentence: &Sentence,
    candidates: &CandidateSet,
    config: &InferenceConfig,
) -> Result<PromptRequest, ConfigError> {
    Ok(PromptRequest {
        sentence_id: sentence.sentence_id.clone(),
        prompt_text: compose_constrained_prompt(
            &sentence.text,
            &candidates.terms,
            &candidates.verbs,
        ),
        temperature: config.temperature,
        max_new_tokens: config.budget.max_tokens(candidates.terms.len())?,
        model_name: config.model_name.clone(),
    })
}

/// Run up to `config.retries` attempts of LLM call plus strict parse.
///
/// The first non-empty parse yields a batch; an empty array or exhausted
/// parse failures yield an orphan. Transport errors are retried and surface
/// only if the final attempt also failed in transport. Cassette misses are
/// deterministic and returned immediately.
pub fn extract_sentence_triples(
    sentence: &Sentence,
    candidates: &CandidateSet,
    client: &dyn LlmClient,
    config: &InferenceConfig,
) -> Result<SentenceOutcome, LlmError> {
    let request = build_request(sentence, candidates, config)
        .map_err(|e| LlmError::Unavailable(e.to_string()))?;
    let mut last_parse_error = None;
    let mut last_transport_error = None;
    for attempt in 1..=config.retries {
        let raw = match infer(&request, client, attempt) {
            Ok(raw) => raw,
            Err(e @ (LlmError::CassetteMiss { .. } | LlmError::Cassette { .. })) => return Err(e),
            Err(e) => {
                log::warn!("{}: attempt {attempt} failed: {e}", sentence.sentence_id);
                last_transport_error = Some(e);
                continue;
            }
        };
        last_transport_error = None;
        match parse_valid_json(&raw) {
            Ok(triples) if triples.is_empty() => {
                return Ok(SentenceOutcome::Orphan(OrphanMark {
                    sentence_id: sentence.sentence_id.clone(),
                    reason: OrphanReason::EmptyResult,
                    attempts_used: attempt,
                }))
            }
            Ok(triples) => {
                return Ok(SentenceOutcome::Batch(RawTripleBatch {
                    sentence_id: sentence.sentence_id.clone(),
                    triples,
                    raw_response: raw,
                    attempts_used: attempt,
                }))
            }
            Err(e) => {
                log::debug!(
                    "{}: attempt {attempt} unparseable: {e}",
                    sentence.sentence_id
                );
                last_parse_error = Some(e);
            }
        }
    }
    if let Some(e) = last_transport_error {
        return Err(e);
    }
    Ok(SentenceOutcome::Orphan(OrphanMark {
        sentence_id: sentence.sentence_id.clone(),
        reason: OrphanReason::ParseFailure {
            last_error: last_parse_error.map(|e| e.to_string()).unwrap_or_default(),
        },
        attempts_used: config.retries,
    }))
}

/// Gate one sentence and, if it passes, extract its triples.
pub fn process_sentence(
    sentence: &Sentence,
    candidates: &CandidateSet,
    client: &dyn LlmClient,
    config: &InferenceConfig,
) -> Result<SentenceOutcome, LlmError> {
    match candidate_gate(candidates, config.orphan_on_empty_verbs) {
        Gate::Skip => {
            log::debug!("{}: skipped by candidate gate", sentence.sentence_id);
            Ok(SentenceOutcome::Skipped {
                sentence_id: sentence.sentence_id.clone(),
            })
        }
        Gate::OrphanNoVerbs => {
            log::debug!("{}: no verb candidates, orphaned", sentence.sentence_id);
            Ok(SentenceOutcome::Orphan(OrphanMark {
                sentence_id: sentence.sentence_id.clone(),
                reason: OrphanReason::NoVerbs,
                attempts_used: 0,
            }))
        }
        Gate::Infer => extract_sentence_triples(sentence, candidates, client, config),
    }
}

/// Process every sentence with at most `max_in_flight` concurrent LLM calls.
/// Outcomes come back in document order; on failure the error of the
/// earliest failing sentence is returned.
pub fn run_document(
    doc: &SegmentedDocument,
    candidates: &[CandidateSet],
    client: &dyn LlmClient,
    config: &InferenceConfig,
) -> Result<Vec<SentenceOutcome>, LlmError> {
    use rayon::prelude::*;

    let sentences: Vec<&Sentence> = doc.sentences().map(|(_, s)| s).collect();
    assert_eq!(
        sentences.len(),
        candidates.len(),
        "one candidate set per sentence"
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.max_in_flight.max(1))
        .build()
        .map_err(|e| LlmError::Unavailable(format!("worker pool: {e}")))?;
    let results: Vec<Result<SentenceOutcome, LlmError>> = pool.install(|| {
        sentences
            .par_iter()
            .zip(candidates.par_iter())
            .map(|(s, c)| process_sentence(s, c, client, config))
            .collect()
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Scripted {
        replies: Vec<Result<&'static str, ()>>,
        calls: AtomicU32,
    }

    impl Scripted {
        fn new(replies: Vec<Result<&'static str, ()>>) -> Self {
            Self {
                replies,
                calls: AtomicU32::new(0),
            }
        }
    }

    impl LlmClient for Scripted {
        fn complete(&self, _: &PromptRequest, attempt: u32) -> Result<String, LlmError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            match self.replies[(attempt - 1) as usize] {
                Ok(s) => Ok(s.to_string()),
                Err(()) => Err(LlmError::Unavailable("down".into())),
            }
        }
    }

    const GOOD: &str =
        r#"[{"subject":"software engineer","predicate":"act in","object":"public interest"}]"#;

    fn sentence() -> Sentence {
        Sentence {
            sentence_id: "d:p0:s0".into(),
            text: "Software engineers shall act in the public interest.".into(),
            char_span: crate::ingest::CharSpan { start: 0, end: 52 },
        }
    }

    fn cands(terms: &[&str], verbs: &[&str]) -> CandidateSet {
        CandidateSet {
            sentence_id: "d:p0:s0".into(),
            terms: terms.iter().map(|s| s.to_string()).collect(),
            verbs: verbs.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn run(replies: Vec<Result<&'static str, ()>>) -> (Result<SentenceOutcome, LlmError>, u32) {
        let client = Scripted::new(replies);
        let out = process_sentence(
            &sentence(),
            &cands(&["software engineer", "public interest"], &["act"]),
            &client,
            &InferenceConfig::default(),
        );
        (out, client.calls.load(Ordering::SeqCst))
    }

    #[test]
    fn success_on_second_attempt() {
        let (out, calls) = run(vec![Ok("oops"), Ok(GOOD), Ok(GOOD)]);
        match out.unwrap() {
            SentenceOutcome::Batch(b) => {
                assert_eq!(b.attempts_used, 2);
                assert_eq!(b.triples.len(), 1);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(calls, 2);
    }

    #[test]
    fn three_parse_failures_orphan() {
        let (out, calls) = run(vec![Ok("x"), Ok("[{]"), Ok(r#"[{"subject":"a"}]"#)]);
        match out.unwrap() {
            SentenceOutcome::Orphan(o) => {
                assert_eq!(o.attempts_used, 3);
                assert!(matches!(o.reason, OrphanReason::ParseFailure { .. }));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(calls, 3);
    }

    #[test]
    fn empty_result_orphans_immediately() {
        let (out, calls) = run(vec![Ok("[]"), Ok(GOOD), Ok(GOOD)]);
        assert!(matches!(
            out.unwrap(),
            SentenceOutcome::Orphan(OrphanMark {
                reason: OrphanReason::EmptyResult,
                attempts_used: 1,
                ..
            })
        ));
        assert_eq!(calls, 1);
    }

    #[test]
    fn transport_errors_retry_then_propagate() {
        let (out, _) = run(vec![Err(()), Ok(GOOD), Ok(GOOD)]);
        assert!(matches!(out.unwrap(), SentenceOutcome::Batch(b) if b.attempts_used == 2));
        let (out, calls) = run(vec![Err(()), Err(()), Err(())]);
        assert!(matches!(out, Err(LlmError::Unavailable(_))));
        assert_eq!(calls, 3);
    }

    #[test]
    fn gate_rules() {
        assert_eq!(candidate_gate(&cands(&[], &[]), true), Gate::Skip);
        assert_eq!(candidate_gate(&cands(&[], &["act"]), true), Gate::Skip);
        assert_eq!(
            candidate_gate(&cands(&["x"], &[]), true),
            Gate::OrphanNoVerbs
        );
        assert_eq!(candidate_gate(&cands(&["x"], &[]), false), Gate::Infer);
        assert_eq!(candidate_gate(&cands(&["x"], &["act"]), true), Gate::Infer);
    }

    #[test]
    fn no_verbs_orphans_without_call() {
        let client = Scripted::new(vec![]);
        let out = process_sentence(
            &sentence(),
            &cands(&["x"], &[]),
            &client,
            &InferenceConfig::default(),
        )
        .unwrap();
        assert!(matches!(
            out,
            SentenceOutcome::Orphan(OrphanMark {
                reason: OrphanReason::NoVerbs,
                attempts_used: 0,
                ..
            })
        ));
        assert_eq!(client.calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn config_validation() {
        assert!(InferenceConfig::default().validate().is_ok());
        let bad = InferenceConfig {
            temperature: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = InferenceConfig {
            retries: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
