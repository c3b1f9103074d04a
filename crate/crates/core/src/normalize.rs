//! Term normalization and triple validation against the candidate set.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::inference::RawTriple;
use crate::mining::{lexicon, tagger, CandidateSet, PosTag};

const QUOTES: &[char] = &['"', '\'', '`'];

/// Canonical term form: trimmed, whitespace-collapsed, lowercase, without
/// enclosing quotes or leading determiners, final token singularized.
///
/// Applied until a fixed point, so the function is idempotent by construction.
pub fn normalize_term(s: &str) -> String {
    let mut current = normalize_once(s);
    // Every pass either leaves the string unchanged or shortens it.
    loop {
        let next = normalize_once(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

fn normalize_once(s: &str) -> String {
    let mut text = s
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    loop {
        let stripped = strip_enclosing_quotes(&text);
        if stripped.len() == text.len() {
            break;
        }
        text = stripped.trim().to_string();
    }
    let mut words: Vec<&str> = text.split(' ').filter(|w| !w.is_empty()).collect();
    while words.len() > 1 && lexicon::NORMALIZE_DETERMINERS.contains(&words[0]) {
        words.remove(0);
    }
    let Some(last) = words.pop() else {
        return String::new();
    };
    let singular = singularize(last);
    words.push(&singular);
    words.join(" ")
}

fn strip_enclosing_quotes(s: &str) -> &str {
    let mut chars = s.chars();
    match (chars.next(), chars.next_back()) {
        (Some(a), Some(b)) if a == b && QUOTES.contains(&a) => {
            &s[a.len_utf8()..s.len() - b.len_utf8()]
        }
        _ => s,
    }
}

/// Singular form of one lowercase word via an irregular table and suffix rules.
pub fn singularize(word: &str) -> String {
    if let Some((_, single)) = lexicon::IRREGULAR_PLURALS.iter().find(|(p, _)| *p == word) {
        return single.to_string();
    }
    if word.chars().count() <= 3
        || lexicon::INVARIANT_NOUNS.contains(&word)
        || !word.chars().all(|c| c.is_alphabetic() || c == '-')
    {
        return word.to_string();
    }
    // Only the segment after the last hyphen inflects.
    if let Some((head, tail)) = word.rsplit_once('-') {
        if !tail.is_empty() {
            return format!("{head}-{}", singularize(tail));
        }
    }
    // areas, ideas
    if let Some(stem) = word.strip_suffix("eas") {
        return format!("{stem}ea");
    }
    for suffix in ["ss", "us", "is", "ous", "as"] {
        if word.ends_with(suffix) {
            return word.to_string();
        }
    }
    if let Some(stem) = word.strip_suffix("ies") {
        return format!("{stem}y");
    }
    for suffix in ["sses", "shes", "ches", "xes", "zes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    if let Some(stem) = word.strip_suffix('s') {
        return stem.to_string();
    }
    word.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripleFlag {
    PredicateOutsideVocab,
    SubjectRepaired,
    ObjectRepaired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sentence_id: String,
    pub section_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatedTriple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub provenance: Provenance,
    pub flags: BTreeSet<TripleFlag>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationPolicy {
    Strict,
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RejectionReason {
    EmptyTerm {
        role: TermRole,
    },
    Unresolvable {
        role: TermRole,
        term: String,
    },
    AmbiguousContainment {
        role: TermRole,
        term: String,
        candidates: Vec<String>,
    },
    PredicateOutsideVocab {
        predicate: String,
        head_lemma: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermRole {
    Subject,
    Object,
}

/// One line of the rejection log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub sentence_id: String,
    pub raw: RawTriple,
    pub reason: RejectionReason,
}

/// Lemma of the head verb of a predicate phrase: the last VERB token, else
/// the last AUX token, else the last word.
pub fn predicate_head_lemma(predicate: &str) -> String {
    use tagger::Tagger as _;
    let Ok(out) = tagger::BuiltinTagger.tag(predicate) else {
        return String::new();
    };
    let pick = |tag: PosTag| out.tokens.iter().rev().find(|t| t.pos_tag == tag);
    match pick(PosTag::Verb).or_else(|| pick(PosTag::Aux)) {
        Some(t) => t.lemma.to_lowercase(),
        None => out
            .tokens
            .iter()
            .rev()
            .find(|t| t.text.chars().any(char::is_alphanumeric))
            .map(|t| lexicon::verb_lemma(&t.text))
            .unwrap_or_default(),
    }
}

fn contains_tokens(haystack: &str, needle: &str) -> bool {
    let h: Vec<&str> = haystack.split(' ').collect();
    let n: Vec<&str> = needle.split(' ').collect();
    n.len() <= h.len() && h.windows(n.len()).any(|w| w == n.as_slice())
}

fn resolve_term(
    term: &str,
    role: TermRole,
    normalized_candidates: &[String],
) -> Result<(String, bool), RejectionReason> {
    let norm = normalize_term(term);
    if norm.is_empty() {
        return Err(RejectionReason::EmptyTerm { role });
    }
    if normalized_candidates.contains(&norm) {
        return Ok((norm, false));
    }
    let hits: Vec<&String> = normalized_candidates
        .iter()
        .filter(|c| contains_tokens(&norm, c) || contains_tokens(c, &norm))
        .collect();
    match hits.as_slice() {
        [one] => Ok(((*one).clone(), true)),
        [] => Err(RejectionReason::Unresolvable { role, term: norm }),
        many => Err(RejectionReason::AmbiguousContainment {
            role,
            term: norm,
            candidates: many.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

/// Check a raw triple against its sentence's candidates.
///
/// Subjects and objects resolve to a normalized candidate term, first by exact
/// match and then by unique whole-word containment (flagged as repaired). The
/// predicate's head lemma is checked against the verb list; a miss is flagged
/// under the lenient policy and rejected under the strict one.
#[allow(clippy::result_large_err)]
pub fn validate_triple(
    raw: &RawTriple,
    candidates: &CandidateSet,
    policy: ValidationPolicy,
    section_label: Option<&str>,
) -> Result<ValidatedTriple, Rejection> {
    let reject = |reason| Rejection {
        sentence_id: candidates.sentence_id.clone(),
        raw: raw.clone(),
        reason,
    };
    let mut normalized: Vec<String> = Vec::new();
    for t in &candidates.terms {
        let n = normalize_term(t);
        if !n.is_empty() && !normalized.contains(&n) {
            normalized.push(n);
        }
    }
    let mut flags = BTreeSet::new();
    let (subject, repaired) =
        resolve_term(&raw.subject, TermRole::Subject, &normalized).map_err(reject)?;
    if repaired {
        flags.insert(TripleFlag::SubjectRepaired);
    }
    let (object, repaired) =
        resolve_term(&raw.object, TermRole::Object, &normalized).map_err(reject)?;
    if repaired {
        flags.insert(TripleFlag::ObjectRepaired);
    }
    let predicate = raw
        .predicate
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    let head = predicate_head_lemma(&predicate);
    let in_vocab = candidates
        .verbs
        .iter()
        .any(|v| lexicon::verb_lemma(v) == head);
    if !in_vocab {
        match policy {
            ValidationPolicy::Strict => {
                return Err(reject(RejectionReason::PredicateOutsideVocab {
                    predicate,
                    head_lemma: head,
                }))
            }
            ValidationPolicy::Lenient => {
                flags.insert(TripleFlag::PredicateOutsideVocab);
            }
        }
    }
    Ok(ValidatedTriple {
        subject,
        predicate,
        object,
        provenance: Provenance {
            sentence_id: candidates.sentence_id.clone(),
            section_label: section_label.map(str::to_string),
        },
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(s: &str, p: &str, o: &str) -> RawTriple {
        RawTriple {
            subject: s.into(),
            predicate: p.into(),
            object: o.into(),
        }
    }

    fn cands(terms: &[&str], verbs: &[&str]) -> CandidateSet {
        CandidateSet {
            sentence_id: "d:p0:s0".into(),
            terms: terms.iter().map(|s| s.to_string()).collect(),
            verbs: verbs.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_term("The Public Interest"), "public interest");
        assert_eq!(normalize_term("software engineers"), "software engineer");
        assert_eq!(
            normalize_term("  well-founded   belief "),
            "well-founded belief"
        );
        assert_eq!(normalize_term("ethics standards"), "ethics standard");
        assert_eq!(normalize_term("\"the policies\""), "policy");
        assert_eq!(normalize_term("processes"), "process");
        assert_eq!(normalize_term("processes"), "process");
        assert_eq!(normalize_term("areas of competence"), "areas of competence");
        assert_eq!(normalize_term("their areas"), "their area");
        assert_eq!(normalize_term("bias"), "bias");
        assert_eq!(normalize_term("   "), "");
    }

    #[test]
    fn exact_match_after_normalization() {
        let v = validate_triple(
            &raw("The software engineer", "act in", "public interest"),
            &cands(&["software engineers", "the public interest"], &["act"]),
            ValidationPolicy::Strict,
            Some("1"),
        )
        .unwrap();
        assert_eq!(v.subject, "software engineer");
        assert_eq!(v.object, "public interest");
        assert!(v.flags.is_empty());
        assert_eq!(v.provenance.section_label.as_deref(), Some("1"));
    }

    #[test]
    fn ambiguous_containment_rejected() {
        let r = validate_triple(
            &raw("engineer", "test", "software engineer"),
            &cands(&["software engineer", "test engineer"], &["test"]),
            ValidationPolicy::Lenient,
            None,
        )
        .unwrap_err();
        assert!(matches!(
            r.reason,
            RejectionReason::AmbiguousContainment {
                role: TermRole::Subject,
                ..
            }
        ));
    }

    #[test]
    fn unique_containment_repairs() {
        let v = validate_triple(
            &raw("competent software engineers", "maintain", "integrity"),
            &cands(&["software engineer", "integrity"], &["maintain"]),
            ValidationPolicy::Strict,
            None,
        )
        .unwrap();
        assert_eq!(v.subject, "software engineer");
        assert!(v.flags.contains(&TripleFlag::SubjectRepaired));
    }

    #[test]
    fn modal_predicate_matches_head_lemma() {
        let v = validate_triple(
            &raw("engineer", "must document", "decision"),
            &cands(&["engineer", "decision"], &["document"]),
            ValidationPolicy::Lenient,
            None,
        )
        .unwrap();
        assert!(!v.flags.contains(&TripleFlag::PredicateOutsideVocab));
        assert_eq!(predicate_head_lemma("shall act in"), "act");
        assert_eq!(predicate_head_lemma("is part of"), "be");
    }

    #[test]
    fn predicate_policy() {
        let t = raw("engineer", "ignores", "decision");
        let c = cands(&["engineer", "decision"], &["document"]);
        let v = validate_triple(&t, &c, ValidationPolicy::Lenient, None).unwrap();
        assert!(v.flags.contains(&TripleFlag::PredicateOutsideVocab));
        let r = validate_triple(&t, &c, ValidationPolicy::Strict, None).unwrap_err();
        assert!(matches!(
            r.reason,
            RejectionReason::PredicateOutsideVocab { .. }
        ));
    }

    #[test]
    fn unresolvable_term_rejected() {
        let r = validate_triple(
            &raw("management", "act", "engineer"),
            &cands(&["engineer"], &["act"]),
            ValidationPolicy::Lenient,
            None,
        )
        .unwrap_err();
        assert!(matches!(r.reason, RejectionReason::Unresolvable { .. }));
        let line = serde_json::to_value(&r).unwrap();
        assert_eq!(line["sentence_id"], "d:p0:s0");
        assert_eq!(line["raw"]["subject"], "management");
    }

    proptest! {
        #[test]
        fn normalize_idempotent_and_clean(s in "\\PC{0,40}") {
            let once = normalize_term(&s);
            prop_assert_eq!(normalize_term(&once), once.clone());
            prop_assert_eq!(once.trim(), once.as_str());
            prop_assert_eq!(once.to_lowercase(), once.clone());
        }

        #[test]
        fn strict_output_terms_are_candidates(
            terms in proptest::collection::vec("[a-z]{2,6}( [a-z]{2,6})?", 1..5),
            s in "[a-z]{2,6}( [a-z]{2,6})?",
            o in "[a-z]{2,6}",
        ) {
            let c = CandidateSet { sentence_id: "x".into(), terms: terms.clone(), verbs: vec!["act".into()] };
            if let Ok(v) = validate_triple(&raw(&s, "act", &o), &c, ValidationPolicy::Strict, None) {
                let norm: Vec<String> = terms.iter().map(|t| normalize_term(t)).collect();
                prop_assert!(norm.contains(&v.subject));
                prop_assert!(norm.contains(&v.object));
            }
        }
    }
}
