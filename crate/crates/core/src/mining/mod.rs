//! Candidate term and verb mining.

pub mod lexicon;
pub mod tagger;

use serde::{Deserialize, Serialize};

use crate::ingest::Sentence;
pub use tagger::{
    BuiltinTagger, ChunkRange, FallbackTagger, PosTag, RemoteTagger, TagOutput, TaggedToken,
    Tagger, TaggerError,
};

/// Per-sentence candidate terms (`terms`) and relation vocabulary (`verbs`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub sentence_id: String,
    pub terms: Vec<String>,
    pub verbs: Vec<String>,
}

/// One string per noun chunk, with leading determiners and pronouns removed.
/// Chunks consisting only of determiners/pronouns are dropped.
pub fn extract_noun_phrases(tokens: &[TaggedToken], noun_chunks: &[ChunkRange]) -> Vec<String> {
    noun_chunks
        .iter()
        .filter_map(|c| {
            let span = tokens.get(c.start..c.end)?;
            let body: Vec<&str> = span
                .iter()
                .skip_while(|t| {
                    matches!(t.pos_tag, PosTag::Det | PosTag::Pron)
                        || lexicon::DETERMINERS.contains(&t.text.to_lowercase().as_str())
                })
                .map(|t| t.text.as_str())
                .collect();
            (!body.is_empty()).then(|| body.join(" "))
        })
        .collect()
}

/// Lemmas of VERB tokens; AUX lemmas only when the sentence has no VERB.
pub fn extract_verbs(tokens: &[TaggedToken]) -> Vec<String> {
    let verbs: Vec<String> = tokens
        .iter()
        .filter(|t| t.pos_tag == PosTag::Verb)
        .map(|t| t.lemma.to_lowercase())
        .collect();
    if !verbs.is_empty() {
        return verbs;
    }
    tokens
        .iter()
        .filter(|t| t.pos_tag == PosTag::Aux)
        .map(|t| t.lemma.to_lowercase())
        .collect()
}

/// Trim, collapse whitespace, strip leading determiners, drop short and
/// stopword-only entries, and deduplicate case-insensitively keeping the
/// first-seen surface form.
pub fn clean_dedup<S: AsRef<str>>(items: &[S]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for item in items {
        let words: Vec<&str> = item.as_ref().split_whitespace().collect();
        let first_content = words
            .iter()
            .position(|w| !lexicon::DETERMINERS.contains(&w.to_lowercase().as_str()))
            .unwrap_or(words.len());
        let words = &words[first_content..];
        if words.iter().all(|w| lexicon::is_stopword(w)) {
            continue;
        }
        let cleaned = words.join(" ");
        if cleaned.chars().count() < 2 {
            continue;
        }
        if seen.insert(cleaned.to_lowercase()) {
            out.push(cleaned);
        }
    }
    out
}

/// Tag a sentence and build its candidate set.
pub fn mine_sentence(
    sentence: &Sentence,
    tagger: &dyn Tagger,
) -> Result<CandidateSet, TaggerError> {
    let tagged = tagger.tag(&sentence.text)?;
    Ok(CandidateSet {
        sentence_id: sentence.sentence_id.clone(),
        terms: clean_dedup(&extract_noun_phrases(&tagged.tokens, &tagged.noun_chunks)),
        verbs: clean_dedup(&extract_verbs(&tagged.tokens)),
    })
}
