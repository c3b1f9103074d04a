//! Closed-class word lists and morphology tables used by the builtin tagger,
//! candidate cleaning and term normalization.
//!
//! The lists are versioned: any change to their content must bump
//! [`LEXICON_VERSION`], which is recorded in run manifests.

pub const LEXICON_VERSION: &str = "1";

pub const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "each", "every", "any", "all", "some",
    "no", "another", "both", "either", "neither", "such", "their", "its", "his", "her", "our",
    "your", "my", "whose",
];

/// Determiners stripped by term normalization.
pub const NORMALIZE_DETERMINERS: &[&str] = &["the", "a", "an", "this", "that", "these", "those"];

pub const PRONOUNS: &[&str] = &[
    "i",
    "me",
    "we",
    "us",
    "you",
    "he",
    "him",
    "she",
    "it",
    "they",
    "them",
    "one",
    "oneself",
    "myself",
    "ourselves",
    "yourself",
    "yourselves",
    "himself",
    "herself",
    "itself",
    "themselves",
    "who",
    "whom",
    "which",
    "what",
    "whoever",
    "whatever",
    "someone",
    "anyone",
    "everyone",
    "something",
    "anything",
    "everything",
    "nothing",
    "nobody",
    "others",
    "theirs",
    "ours",
    "hers",
    "mine",
    "yours",
];

pub const AUXILIARIES: &[&str] = &[
    "shall", "should", "will", "would", "can", "could", "may", "might", "must", "be", "is", "are",
    "was", "were", "been", "being", "am", "do", "does", "did", "have", "has", "had", "having",
];

pub const MODALS: &[&str] = &[
    "shall", "should", "will", "would", "can", "could", "may", "might", "must",
];

/// Prepositions, conjunctions, particles and common adverbs.
pub const FUNCTION_WORDS: &[&str] = &[
    "of",
    "in",
    "on",
    "at",
    "to",
    "for",
    "with",
    "by",
    "from",
    "as",
    "into",
    "onto",
    "about",
    "over",
    "under",
    "between",
    "through",
    "during",
    "before",
    "after",
    "above",
    "below",
    "within",
    "without",
    "against",
    "among",
    "upon",
    "toward",
    "towards",
    "across",
    "via",
    "per",
    "and",
    "or",
    "but",
    "nor",
    "if",
    "than",
    "so",
    "yet",
    "when",
    "where",
    "while",
    "whether",
    "because",
    "although",
    "though",
    "unless",
    "until",
    "since",
    "not",
    "only",
    "also",
    "very",
    "too",
    "just",
    "then",
    "there",
    "here",
    "how",
    "why",
    "even",
    "ever",
    "never",
    "always",
    "often",
    "well",
    "rather",
    "instead",
    "including",
    "regarding",
    "concerning",
    "insofar",
    "whenever",
    "wherever",
    "both",
    "either",
    "neither",
    "thus",
    "therefore",
    "hence",
    "however",
    "moreover",
    "furthermore",
];

/// Stopwords for candidate cleaning: every closed-class list combined.
pub fn is_stopword(word: &str) -> bool {
    let w = word.to_lowercase();
    let w = w.as_str();
    DETERMINERS.contains(&w)
        || PRONOUNS.contains(&w)
        || AUXILIARIES.contains(&w)
        || FUNCTION_WORDS.contains(&w)
}

/// Verb base forms recognised by the builtin tagger.
pub const VERBS: &[&str] = &[
    "accept",
    "achieve",
    "acknowledge",
    "act",
    "adapt",
    "address",
    "adhere",
    "adopt",
    "advance",
    "advise",
    "affect",
    "agree",
    "aid",
    "allow",
    "analyze",
    "apply",
    "approve",
    "assess",
    "assign",
    "assist",
    "assure",
    "attempt",
    "avoid",
    "balance",
    "become",
    "begin",
    "believe",
    "benefit",
    "build",
    "care",
    "cause",
    "certify",
    "change",
    "check",
    "choose",
    "claim",
    "collaborate",
    "commit",
    "communicate",
    "comply",
    "conduct",
    "conform",
    "consider",
    "consult",
    "contribute",
    "cooperate",
    "correct",
    "create",
    "credit",
    "deal",
    "decide",
    "define",
    "deliver",
    "demonstrate",
    "deny",
    "deploy",
    "describe",
    "design",
    "detect",
    "develop",
    "disclose",
    "discuss",
    "document",
    "emphasize",
    "employ",
    "enable",
    "encourage",
    "endorse",
    "enhance",
    "ensure",
    "establish",
    "estimate",
    "evaluate",
    "exercise",
    "expect",
    "explain",
    "express",
    "extend",
    "fail",
    "follow",
    "foster",
    "fulfil",
    "fulfill",
    "gain",
    "get",
    "give",
    "go",
    "help",
    "hold",
    "identify",
    "implement",
    "improve",
    "include",
    "increase",
    "inform",
    "install",
    "interfere",
    "involve",
    "issue",
    "keep",
    "know",
    "lead",
    "learn",
    "maintain",
    "make",
    "manage",
    "meet",
    "minimize",
    "moderate",
    "modify",
    "monitor",
    "need",
    "notify",
    "obey",
    "obtain",
    "offer",
    "operate",
    "oppose",
    "participate",
    "pay",
    "perform",
    "permit",
    "plan",
    "practice",
    "prepare",
    "prevent",
    "produce",
    "promote",
    "protect",
    "provide",
    "publish",
    "pursue",
    "recognize",
    "recommend",
    "reduce",
    "refuse",
    "reject",
    "relate",
    "release",
    "remain",
    "remove",
    "report",
    "represent",
    "require",
    "resolve",
    "respect",
    "review",
    "reward",
    "see",
    "seek",
    "serve",
    "share",
    "show",
    "sign",
    "solve",
    "specify",
    "strive",
    "subscribe",
    "support",
    "take",
    "teach",
    "test",
    "treat",
    "understand",
    "uphold",
    "use",
    "value",
    "verify",
    "violate",
    "work",
    "write",
];

/// Irregular inflected verb forms and their lemmas.
pub const IRREGULAR_VERBS: &[(&str, &str)] = &[
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("being", "be"),
    ("am", "be"),
    ("has", "have"),
    ("had", "have"),
    ("having", "have"),
    ("does", "do"),
    ("did", "do"),
    ("done", "do"),
    ("doing", "do"),
    ("made", "make"),
    ("took", "take"),
    ("taken", "take"),
    ("gave", "give"),
    ("given", "give"),
    ("went", "go"),
    ("gone", "go"),
    ("got", "get"),
    ("gotten", "get"),
    ("kept", "keep"),
    ("held", "hold"),
    ("led", "lead"),
    ("knew", "know"),
    ("known", "know"),
    ("built", "build"),
    ("began", "begin"),
    ("begun", "begin"),
    ("became", "become"),
    ("chose", "choose"),
    ("chosen", "choose"),
    ("dealt", "deal"),
    ("met", "meet"),
    ("paid", "pay"),
    ("saw", "see"),
    ("seen", "see"),
    ("sought", "seek"),
    ("shown", "show"),
    ("strove", "strive"),
    ("striven", "strive"),
    ("taught", "teach"),
    ("understood", "understand"),
    ("upheld", "uphold"),
    ("wrote", "write"),
    ("written", "write"),
    ("learnt", "learn"),
];

pub const ADJECTIVES: &[&str] = &[
    "public",
    "own",
    "full",
    "good",
    "high",
    "best",
    "fair",
    "honest",
    "safe",
    "legal",
    "ethical",
    "professional",
    "appropriate",
    "accurate",
    "relevant",
    "necessary",
    "possible",
    "human",
    "social",
    "general",
    "common",
    "private",
    "confidential",
    "independent",
    "competent",
    "consistent",
    "current",
    "new",
    "other",
    "same",
    "whole",
    "true",
    "false",
    "open",
    "clear",
    "free",
    "due",
    "proper",
    "reasonable",
    "realistic",
    "positive",
    "fundamental",
    "personal",
    "potential",
    "adequate",
    "acceptable",
    "sound",
    "sole",
    "specific",
    "technical",
    "various",
    "complete",
    "correct",
    "moral",
    "careful",
    "useful",
    "harmful",
    "dangerous",
    "serious",
    "unfair",
    "unethical",
    "illegal",
    "unsafe",
    "well-founded",
    "well-being",
    "low",
    "long",
    "short",
    "major",
    "minor",
    "prior",
    "responsible",
    "reliable",
];

/// Adjective-forming suffixes for open-class guessing.
pub const ADJECTIVE_SUFFIXES: &[&str] = &[
    "able", "ible", "ful", "ous", "ive", "ical", "less", "ary", "ic",
];

/// Nouns whose plural form equals the singular, or that only look plural.
pub const INVARIANT_NOUNS: &[&str] = &[
    "ethics",
    "news",
    "series",
    "species",
    "physics",
    "mathematics",
    "economics",
    "politics",
    "analytics",
    "statistics",
    "data",
    "software",
    "hardware",
    "information",
    "equipment",
    "status",
    "process",
    "access",
    "business",
    "success",
    "progress",
    "class",
    "bias",
    "basis",
    "thesis",
    "analysis",
    "crisis",
    "diagnosis",
    "emphasis",
    "corpus",
    "campus",
    "focus",
    "consensus",
    "bonus",
    "virus",
    "census",
    "apparatus",
    "always",
    "various",
    "previous",
    "serious",
    "obvious",
    "numerous",
    "its",
    "this",
    "thus",
    "us",
    "as",
    "is",
    "was",
    "has",
    "yes",
    "gas",
    "lens",
    "means",
    "whereas",
    "perhaps",
];

/// Irregular plural nouns and their singular forms.
pub const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("people", "person"),
    ("children", "child"),
    ("men", "man"),
    ("women", "woman"),
    ("criteria", "criterion"),
    ("phenomena", "phenomenon"),
    ("analyses", "analysis"),
    ("bases", "basis"),
    ("crises", "crisis"),
    ("theses", "thesis"),
    ("indices", "index"),
    ("matrices", "matrix"),
    ("appendices", "appendix"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("lives", "life"),
    ("knives", "knife"),
    ("wives", "wife"),
    ("selves", "self"),
    ("halves", "half"),
    ("leaves", "leaf"),
    ("policies", "policy"),
];

pub fn irregular_lemma(word: &str) -> Option<&'static str> {
    IRREGULAR_VERBS
        .iter()
        .find(|(form, _)| *form == word)
        .map(|(_, lemma)| *lemma)
}

pub fn is_known_verb(lemma: &str) -> bool {
    VERBS.binary_search(&lemma).is_ok() || lemma == "be" || lemma == "have" || lemma == "do"
}

/// Lemmatize a verb form: irregular table first, then suffix stripping
/// validated against the verb list, then an unvalidated heuristic.
pub fn verb_lemma(word: &str) -> String {
    let w = word.to_lowercase();
    if let Some(l) = irregular_lemma(&w) {
        return l.to_string();
    }
    if is_known_verb(&w) {
        return w;
    }
    for cand in verb_lemma_candidates(&w) {
        if is_known_verb(&cand) {
            return cand;
        }
    }
    verb_lemma_candidates(&w).into_iter().next().unwrap_or(w)
}

fn verb_lemma_candidates(w: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut push_stem = |stem: &str| {
        if stem.len() >= 2 {
            out.push(stem.to_string());
            out.push(format!("{stem}e"));
            let b = stem.as_bytes();
            if b.len() >= 3 && b[b.len() - 1] == b[b.len() - 2] {
                out.push(stem[..stem.len() - 1].to_string());
            }
        }
    };
    if let Some(stem) = w.strip_suffix("ies") {
        out.push(format!("{stem}y"));
    } else if let Some(stem) = w.strip_suffix("ied") {
        out.push(format!("{stem}y"));
    } else if let Some(stem) = w.strip_suffix("ing") {
        push_stem(stem);
    } else if let Some(stem) = w.strip_suffix("ed") {
        push_stem(stem);
    } else if let Some(stem) = w.strip_suffix("es") {
        out.push(stem.to_string());
        out.push(format!("{stem}e"));
    } else if let Some(stem) = w.strip_suffix('s') {
        if !w.ends_with("ss") {
            out.push(stem.to_string());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verb_list_sorted_for_binary_search() {
        let mut sorted = VERBS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, VERBS);
    }

    #[test]
    fn lemmas() {
        assert_eq!(verb_lemma("is"), "be");
        assert_eq!(verb_lemma("acts"), "act");
        assert_eq!(verb_lemma("approved"), "approve");
        assert_eq!(verb_lemma("promoting"), "promote");
        assert_eq!(verb_lemma("ensures"), "ensure");
        assert_eq!(verb_lemma("identifies"), "identify");
        assert_eq!(verb_lemma("committed"), "commit");
        assert_eq!(verb_lemma("maintain"), "maintain");
        assert_eq!(verb_lemma("Wrote"), "write");
    }
}
