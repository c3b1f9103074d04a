//! Part-of-speech tagging providers.
//!
//! [`BuiltinTagger`] is a deterministic rule/lexicon tagger. [`RemoteTagger`]
//! talks to an HTTP sidecar speaking the `/tag` protocol, and
//! [`FallbackTagger`] degrades from remote to builtin when the sidecar is
//! unreachable.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lexicon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Propn,
    Adj,
    Verb,
    Aux,
    Det,
    Pron,
    Other,
}

impl PosTag {
    pub fn is_nominal(self) -> bool {
        matches!(self, PosTag::Noun | PosTag::Propn)
    }

    fn is_chunk_body(self) -> bool {
        matches!(self, PosTag::Noun | PosTag::Propn | PosTag::Adj)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub text: String,
    pub lemma: String,
    #[serde(rename = "pos")]
    pub pos_tag: PosTag,
    pub index: usize,
}

/// Half-open token index range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRange {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagOutput {
    pub tokens: Vec<TaggedToken>,
    pub noun_chunks: Vec<ChunkRange>,
}

impl TagOutput {
    /// Structural checks every provider's output must pass.
    pub fn validate(&self) -> Result<(), TaggerError> {
        for (i, t) in self.tokens.iter().enumerate() {
            if t.index != i {
                return Err(TaggerError::InvalidResponse(format!(
                    "token {i} carries index {}",
                    t.index
                )));
            }
        }
        let mut last_end = 0;
        for c in &self.noun_chunks {
            if c.start >= c.end || c.end > self.tokens.len() || c.start < last_end {
                return Err(TaggerError::InvalidResponse(format!(
                    "bad noun chunk {}..{}",
                    c.start, c.end
                )));
            }
            last_end = c.end;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("tagger unavailable at {endpoint}: {reason}")]
    Unavailable { endpoint: String, reason: String },
    #[error("tagger returned an invalid response: {0}")]
    InvalidResponse(String),
    #[error("cannot tag empty text")]
    EmptyInput,
}

pub trait Tagger: Send + Sync {
    fn tag(&self, text: &str) -> Result<TagOutput, TaggerError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinTagger;

impl Tagger for BuiltinTagger {
    fn tag(&self, text: &str) -> Result<TagOutput, TaggerError> {
        if text.trim().is_empty() {
            return Err(TaggerError::EmptyInput);
        }
        let words = tokenize(text);
        let tags = assign_tags(&words);
        let mut tokens: Vec<TaggedToken> = words
            .iter()
            .zip(&tags)
            .enumerate()
            .map(|(index, (w, &pos_tag))| TaggedToken {
                text: w.to_string(),
                lemma: lemma_for(w, pos_tag),
                pos_tag,
                index,
            })
            .collect();
        let noun_chunks = chunk(&mut tokens);
        Ok(TagOutput {
            tokens,
            noun_chunks,
        })
    }
}

/// Split into word tokens (alphanumerics with inner hyphens/apostrophes) and
/// single-character punctuation tokens. A possessive `'s` is its own token.
pub fn tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i + 1;
            while j < chars.len() {
                let cj = chars[j].1;
                let joiner = matches!(cj, '-' | '\'' | '.')
                    && j + 1 < chars.len()
                    && chars[j + 1].1.is_alphanumeric()
                    && (cj != '.'
                        || (chars[j - 1].1.is_ascii_digit() && chars[j + 1].1.is_ascii_digit()));
                if cj.is_alphanumeric() || joiner {
                    j += 1;
                } else {
                    break;
                }
            }
            let end = if j < chars.len() {
                chars[j].0
            } else {
                text.len()
            };
            let word = &text[pos..end];
            let lower = word.to_lowercase();
            if lower.ends_with("'s") && word.len() > 2 {
                out.push(&word[..word.len() - 2]);
                out.push(&word[word.len() - 2..]);
            } else {
                out.push(word);
            }
            i = j;
        } else {
            let end = if i + 1 < chars.len() {
                chars[i + 1].0
            } else {
                text.len()
            };
            out.push(&text[pos..end]);
            i += 1;
        }
    }
    out
}

fn is_word(w: &str) -> bool {
    w.chars().next().is_some_and(char::is_alphabetic)
}

fn closed_class(lower: &str) -> Option<PosTag> {
    if lexicon::DETERMINERS.contains(&lower) {
        Some(PosTag::Det)
    } else if lexicon::PRONOUNS.contains(&lower) {
        Some(PosTag::Pron)
    } else if lexicon::AUXILIARIES.contains(&lower) {
        Some(PosTag::Aux)
    } else if lexicon::FUNCTION_WORDS.contains(&lower) || lower == "'s" {
        Some(PosTag::Other)
    } else {
        None
    }
}

fn is_adjective(lower: &str) -> bool {
    if lexicon::ADJECTIVES.contains(&lower) {
        return true;
    }
    if let Some((_, last)) = lower.rsplit_once('-') {
        if last.ends_with("ed") || last.ends_with("ing") || lexicon::ADJECTIVES.contains(&last) {
            return true;
        }
    }
    lower.len() > 5
        && lexicon::ADJECTIVE_SUFFIXES
            .iter()
            .any(|s| lower.ends_with(s))
}

fn verb_form_lemma(lower: &str) -> Option<String> {
    let lemma = lexicon::verb_lemma(lower);
    let known = lexicon::is_known_verb(&lemma) && !matches!(lemma.as_str(), "be" | "have" | "do");
    known.then_some(lemma)
}

fn assign_tags(words: &[&str]) -> Vec<PosTag> {
    let mut tags: Vec<PosTag> = Vec::with_capacity(words.len());
    for (i, w) in words.iter().enumerate() {
        let lower = w.to_lowercase();
        let prev = tags.last().copied();
        let prev_lower = i.checked_sub(1).map(|p| words[p].to_lowercase());
        let prev_lower = prev_lower.as_deref();
        let sentence_initial =
            i == 0 || prev_lower.is_some_and(|p| matches!(p, ":" | "(" | "\"" | "-"));
        let tag = if !is_word(w) {
            PosTag::Other
        } else if let Some(t) = closed_class(&lower) {
            t
        } else if let Some(lemma) = verb_form_lemma(&lower) {
            verb_in_context(&lower, &lemma, i, words, &tags, sentence_initial)
        } else if lower.len() > 4 && lower.ends_with("ly") {
            PosTag::Other
        } else if lower.ends_with("ize") || lower.ends_with("ise") || lower.ends_with("ify") {
            if matches!(prev, Some(PosTag::Det | PosTag::Adj)) {
                PosTag::Noun
            } else {
                PosTag::Verb
            }
        } else if lower.ends_with("ing") && lower.len() > 5 {
            if matches!(
                prev,
                Some(PosTag::Det | PosTag::Adj | PosTag::Noun | PosTag::Propn)
            ) {
                PosTag::Noun
            } else {
                PosTag::Verb
            }
        } else if lower.ends_with("ed") && lower.len() > 4 && !lower.contains('-') {
            if matches!(prev, Some(PosTag::Aux))
                || prev_lower.is_some_and(|p| lexicon::MODALS.contains(&p))
            {
                PosTag::Verb
            } else {
                PosTag::Adj
            }
        } else if is_adjective(&lower) {
            PosTag::Adj
        } else if !sentence_initial && w.chars().next().is_some_and(char::is_uppercase) {
            PosTag::Propn
        } else {
            PosTag::Noun
        };
        tags.push(tag);
    }
    tags
}

/// Disambiguate a word whose form matches a lexicon verb.
fn verb_in_context(
    lower: &str,
    lemma: &str,
    i: usize,
    words: &[&str],
    tags: &[PosTag],
    sentence_initial: bool,
) -> PosTag {
    let inflected_s = lower != lemma && lower.ends_with('s');
    let inflected_ed =
        lower != lemma && (lower.ends_with("ed") || lexicon::irregular_lemma(lower).is_some());
    let gerund = lower.ends_with("ing");
    if sentence_initial {
        return PosTag::Verb;
    }
    let prev = tags[i - 1];
    let prev_lower = words[i - 1].to_lowercase();
    match prev {
        PosTag::Det | PosTag::Adj => PosTag::Noun,
        PosTag::Aux | PosTag::Pron => PosTag::Verb,
        PosTag::Noun | PosTag::Propn => {
            let prev_plural = prev_lower.ends_with('s') && !prev_lower.ends_with("ss");
            if inflected_ed
                || (inflected_s && !prev_plural)
                || (!inflected_s && !gerund && prev_plural)
            {
                PosTag::Verb
            } else {
                PosTag::Noun
            }
        }
        PosTag::Verb => PosTag::Noun,
        PosTag::Other => {
            if prev_lower == "to" || gerund || prev_lower.ends_with("ly") {
                PosTag::Verb
            } else if matches!(prev_lower.as_str(), "and" | "or" | "nor" | "but") {
                // coordinated with whatever came before the conjunction
                match tags[..i - 1].iter().rev().find(|t| **t != PosTag::Other) {
                    Some(PosTag::Verb) => PosTag::Verb,
                    // "is safe and meets"
                    Some(PosTag::Adj) if inflected_s || inflected_ed => PosTag::Verb,
                    _ => PosTag::Noun,
                }
            } else if matches!(prev_lower.as_str(), "," | ";" | ":") {
                PosTag::Verb
            } else {
                PosTag::Noun
            }
        }
    }
}

fn lemma_for(word: &str, tag: PosTag) -> String {
    let lower = word.to_lowercase();
    match tag {
        PosTag::Verb | PosTag::Aux => lexicon::verb_lemma(&lower),
        PosTag::Propn => word.to_string(),
        _ => lower,
    }
}

/// Noun chunks: optional determiners followed by a maximal ADJ/NOUN/PROPN run,
/// trimmed so the chunk ends on a noun. A determiner followed only by
/// adjectives has its last adjective retagged as a noun ("the public").
fn chunk(tokens: &mut [TaggedToken]) -> Vec<ChunkRange> {
    let mut chunks = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let start = i;
        let mut j = i;
        while j < tokens.len() && tokens[j].pos_tag == PosTag::Det {
            j += 1;
        }
        let body_start = j;
        while j < tokens.len() && tokens[j].pos_tag.is_chunk_body() {
            j += 1;
        }
        if j == body_start {
            i = start + 1;
            continue;
        }
        let last_noun = (body_start..j)
            .rev()
            .find(|&k| tokens[k].pos_tag.is_nominal());
        let end = match last_noun {
            Some(k) => k + 1,
            None if body_start > start => {
                let k = j - 1;
                tokens[k].pos_tag = PosTag::Noun;
                tokens[k].lemma = tokens[k].text.to_lowercase();
                j
            }
            None => {
                i = j;
                continue;
            }
        };
        chunks.push(ChunkRange { start, end });
        i = j;
    }
    chunks
}

/// HTTP client for a tagging sidecar.
#[derive(Debug, Clone)]
pub struct RemoteTagger {
    endpoint: String,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct TagRequest<'a> {
    text: &'a str,
}

impl RemoteTagger {
    /// `endpoint` is the service base URL; requests go to `{endpoint}/tag`.
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, TaggerError> {
        let endpoint = endpoint.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| TaggerError::Unavailable {
                endpoint: endpoint.clone(),
                reason: e.to_string(),
            })?;
        Ok(Self { endpoint, client })
    }

    fn url(&self) -> String {
        format!("{}/tag", self.endpoint.trim_end_matches('/'))
    }
}

impl Tagger for RemoteTagger {
    fn tag(&self, text: &str) -> Result<TagOutput, TaggerError> {
        if text.trim().is_empty() {
            return Err(TaggerError::EmptyInput);
        }
        let unavailable = |reason: String| TaggerError::Unavailable {
            endpoint: self.endpoint.clone(),
            reason,
        };
        let resp = self
            .client
            .post(self.url())
            .json(&TagRequest { text })
            .send()
            .map_err(|e| unavailable(e.to_string()))?;
        if resp.status() != reqwest::StatusCode::OK {
            return Err(unavailable(format!("HTTP {}", resp.status())));
        }
        let out: TagOutput = resp
            .json()
            .map_err(|e| TaggerError::InvalidResponse(e.to_string()))?;
        out.validate()?;
        Ok(out)
    }
}

/// Uses `primary` and falls back to the builtin tagger when it is unavailable.
pub struct FallbackTagger<T> {
    primary: T,
    builtin: BuiltinTagger,
}

impl<T: Tagger> FallbackTagger<T> {
    pub fn new(primary: T) -> Self {
        Self {
            primary,
            builtin: BuiltinTagger,
        }
    }
}

impl<T: Tagger> Tagger for FallbackTagger<T> {
    fn tag(&self, text: &str) -> Result<TagOutput, TaggerError> {
        match self.primary.tag(text) {
            Err(e @ TaggerError::Unavailable { .. }) => {
                log::warn!("{e}; falling back to builtin tagger");
                self.builtin.tag(text)
            }
            other => other,
        }
    }
}
