//! Constrained prompt construction and token budgeting.

use std::fmt::Write as _;

use crate::error::ConfigError;

/// Token budget clamp used to size `max_tokens` for a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenBudget {
    /// Expected triples per candidate term.
    pub multiplier: u32,
    /// Estimated tokens needed to emit one triple.
    pub per_triple: u32,
    pub lo: u32,
    pub hi: u32,
}

impl Default for TokenBudget {
    fn default() -> Self {
        Self {
            multiplier: 2,
            per_triple: 24,
            lo: 256,
            hi: 1024,
        }
    }
}

impl TokenBudget {
    pub fn max_tokens(&self, n_terms: usize) -> Result<u32, ConfigError> {
        dynamic_max_tokens(n_terms, self.multiplier, self.lo, self.hi, self.per_triple)
    }
}

/// `min(hi, max(lo, n_terms * k * per_triple))`, saturating on overflow.
pub fn dynamic_max_tokens(
    n_terms: usize,
    k: u32,
    lo: u32,
    hi: u32,
    per_triple: u32,
) -> Result<u32, ConfigError> {
    if lo > hi {
        return Err(ConfigError::Invalid(format!(
            "token clamp lo ({lo}) exceeds hi ({hi})"
        )));
    }
    if lo == 0 {
        return Err(ConfigError::Invalid(
            "token clamp lo must be positive".into(),
        ));
    }
    let n = u64::try_from(n_terms).unwrap_or(u64::MAX);
    let raw = n
        .saturating_mul(u64::from(k))
        .saturating_mul(u64::from(per_triple));
    Ok(raw.clamp(u64::from(lo), u64::from(hi)) as u32)
}

/// Build the relation-extraction prompt for one sentence.
///
/// Blocks, in order: output-format instruction, the verbatim sentence, the
/// enumerated candidate terms, the enumerated verb list (omitted when empty,
/// which frees the predicate choice), and the empty-result instruction.
pub fn compose_constrained_prompt(sentence: &str, terms: &[String], verbs: &[String]) -> String {
    let mut p = String::new();
    p.push_str(
        "You extract relation triples from one sentence of a software engineering standard.\n\
         Output ONLY a JSON array of objects with the keys \"subject\", \"predicate\" and \"object\". \
         Do not add explanations.\n\n",
    );
    let _ = writeln!(p, "Sentence:\n\"\"\"{sentence}\"\"\"\n");
    p.push_str("Candidate terms (each subject and object MUST be chosen from this list):\n");
    for (i, t) in terms.iter().enumerate() {
        let _ = writeln!(p, "{}. {t}", i + 1);
    }
    p.push('\n');
    if verbs.is_empty() {
        p.push_str("Predicates: use a short verb phrase taken from the sentence.\n\n");
    } else {
        p.push_str("Candidate verbs (base each predicate on one of these verbs where possible):\n");
        for (i, v) in verbs.iter().enumerate() {
            let _ = writeln!(p, "{}. {v}", i + 1);
        }
        p.push('\n');
    }
    p.push_str("If the sentence states no relation between the candidate terms, output [].\n");
    p
}
