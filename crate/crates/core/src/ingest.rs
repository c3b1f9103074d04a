//! Document loading and segmentation.
//!
//! A document is cleaned (NFC, typographic quotes mapped to ASCII), split into
//! paragraphs and then into sentences. Sentence spans are byte offsets into
//! the cleaned text returned by [`clean_text`], so `&clean[start..end]`
//! recovers the raw sentence slice before whitespace collapsing.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input is not valid UTF-8: {0}")]
    InputEncoding(#[from] std::str::Utf8Error),
    #[error("document '{0}' contains no text")]
    EmptyDocument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: String,
    pub text: String,
    pub char_span: CharSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub index: usize,
    pub section_label: Option<String>,
    pub sentences: Vec<Sentence>,
}

impl Paragraph {
    /// Whitespace-collapsed paragraph body with the section label removed.
    pub fn text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedDocument {
    pub doc_id: String,
    pub paragraphs: Vec<Paragraph>,
}

impl SegmentedDocument {
    pub fn sentences(&self) -> impl Iterator<Item = (&Paragraph, &Sentence)> {
        self.paragraphs
            .iter()
            .flat_map(|p| p.sentences.iter().map(move |s| (p, s)))
    }

    pub fn sentence_count(&self) -> usize {
        self.paragraphs.iter().map(|p| p.sentences.len()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

/// Clause numbers such as `1.01`, `8.` or `2.3.1` at the start of a line.
static CLAUSE_LABEL: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^(\d+(?:\.\d+)*\.?)\s+").expect("valid regex"));

/// Bullet markers (`-`, `*`, `+`) and Markdown heading hashes.
static LINE_MARKER: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^(?:[-*+]|#{1,6})\s+").expect("valid regex"));

/// Abbreviations whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "al.", "approx.", "dr.", "mr.", "mrs.", "ms.", "no.",
    "fig.", "sec.", "st.", "inc.", "ltd.", "jr.", "sr.",
];

/// NFC normalization plus typographic quote/dash folding. Line structure is
/// preserved so spans computed on the result stay meaningful.
pub fn clean_text(raw: &str) -> String {
    raw.nfc()
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '\u{2032}' => '\'',
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '\u{2033}' => '"',
            '\u{00A0}' | '\u{2007}' | '\u{202F}' => ' ',
            '\r' => '\n',
            c => c,
        })
        .collect()
}

/// Collapse every run of whitespace into one ASCII space and trim.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct RawParagraph {
    label: Option<String>,
    /// Byte ranges of body text (label/marker removed), one per line.
    lines: Vec<(usize, usize)>,
}

fn raw_paragraphs(clean: &str) -> Vec<RawParagraph> {
    let mut out: Vec<RawParagraph> = Vec::new();
    let mut current: Option<RawParagraph> = None;
    let mut offset = 0;
    for line in clean.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let body = line.trim_end_matches('\n');
        let trimmed = body.trim_start();
        if trimmed.trim().is_empty() {
            if let Some(p) = current.take() {
                out.push(p);
            }
            continue;
        }
        let mut start = line_start + (body.len() - trimmed.len());
        let mut rest = trimmed;
        let mut label = None;
        let mut marker = false;
        if let Some(m) = LINE_MARKER.find(rest) {
            start += m.end();
            rest = &rest[m.end()..];
            marker = true;
        }
        if let Some(caps) = CLAUSE_LABEL.captures(rest) {
            let whole = caps.get(0).expect("match");
            label = Some(caps[1].trim_end_matches('.').to_string());
            start += whole.end();
            rest = &rest[whole.end()..];
        }
        let end = start + rest.trim_end().len();
        // A labelled or bulleted line opens a new paragraph even without a
        // blank line before it.
        if label.is_some() || marker {
            if let Some(p) = current.take() {
                out.push(p);
            }
        }
        let para = current.get_or_insert_with(|| RawParagraph {
            label: label.clone(),
            lines: Vec::new(),
        });
        if end > start {
            para.lines.push((start, end));
        }
    }
    if let Some(p) = current.take() {
        out.push(p);
    }
    out.retain(|p| !p.lines.is_empty());
    out
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!' | ';')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']')
}

fn ends_with_abbreviation(text: &str, dot: usize) -> bool {
    let head = &text[..=dot];
    let word_start = head
        .rfind(|c: char| c.is_whitespace() || c == '(')
        .map_or(0, |i| i + 1);
    let word = head[word_start..].to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

/// Split text into sentence byte ranges (trimmed, non-empty).
///
/// Boundaries fall after `.`, `?`, `!` or `;` (plus any closing quotes or
/// brackets) when followed by whitespace or end of text. A period that ends a
/// known abbreviation never splits. Text without a terminator is one sentence.
pub fn split_into_sentences(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if is_terminator(c) {
            let mut j = i + 1;
            while j < chars.len() && (is_terminator(chars[j].1) || is_closer(chars[j].1)) {
                j += 1;
            }
            let at_end = j == chars.len();
            let boundary = at_end || chars[j].1.is_whitespace();
            let abbreviated =
                c == '.' && j == i + 1 && !at_end && ends_with_abbreviation(text, pos);
            if boundary && !abbreviated {
                let end = if at_end { text.len() } else { chars[j].0 };
                push_trimmed(text, start, end, &mut spans);
                start = end;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    push_trimmed(text, start, text.len(), &mut spans);
    spans
}

fn push_trimmed(text: &str, start: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() {
        spans.push((start + lead, start + lead + trimmed.len()));
    }
}

pub fn sentence_id(doc_id: &str, paragraph: usize, sentence: usize) -> String {
    format!("{doc_id}:p{paragraph}:s{sentence}")
}

/// Decode, clean and segment a document.
pub fn load_document(source: &[u8], doc_id: &str) -> Result<SegmentedDocument, IngestError> {
    let raw = std::str::from_utf8(source)?;
    let clean = clean_text(raw);
    segment(&clean, doc_id)
}

/// Segment already-cleaned text. Spans index into `clean`.
pub fn segment(clean: &str, doc_id: &str) -> Result<SegmentedDocument, IngestError> {
    let mut paragraphs = Vec::new();
    for raw in raw_paragraphs(clean) {
        let index = paragraphs.len();
        // Lines of a paragraph are joined for splitting; spans are mapped back
        // line by line so that every span stays inside the cleaned text.
        let mut joined = String::new();
        let mut map: Vec<(usize, usize)> = Vec::new(); // (joined offset, clean offset)
        for (n, &(s, e)) in raw.lines.iter().enumerate() {
            if n > 0 {
                joined.push(' ');
            }
            map.push((joined.len(), s));
            joined.push_str(&clean[s..e]);
        }
        let to_clean = |off: usize, is_end: bool| -> usize {
            let idx = map
                .iter()
                .rposition(|&(j, _)| if is_end { j < off } else { j <= off })
                .unwrap_or(0);
            let (j, c) = map[idx];
            c + (off - j)
        };
        let sentences = split_into_sentences(&joined)
            .into_iter()
            .enumerate()
            .map(|(si, (s, e))| Sentence {
                sentence_id: sentence_id(doc_id, index, si),
                text: collapse_whitespace(&joined[s..e]),
                char_span: CharSpan {
                    start: to_clean(s, false),
                    end: to_clean(e, true),
                },
            })
            .collect::<Vec<_>>();
        if sentences.is_empty() {
            continue;
        }
        paragraphs.push(Paragraph {
            index,
            section_label: raw.label,
            sentences,
        });
    }
    if paragraphs.is_empty() {
        return Err(IngestError::EmptyDocument(doc_id.to_string()));
    }
    Ok(SegmentedDocument {
        doc_id: doc_id.to_string(),
        paragraphs,
    })
}
