//! String similarity backends.
//!
//! All backends return values in `[0, 1]`, are symmetric, and give exactly
//! `1.0` for identical non-empty strings.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("similarity backend unavailable: {0}")]
    Unavailable(String),
    #[error("no recorded embedding for {0:?}")]
    EmbeddingMiss(String),
    #[error("embedding cassette {path}: {reason}")]
    Cassette { path: PathBuf, reason: String },
}

pub trait Similarity: Send + Sync {
    /// Identifier recorded in merge maps and reports.
    fn backend_id(&self) -> String;

    fn similarity(&self, a: &str, b: &str) -> Result<f64, SimilarityError>;

    /// Similarity of every `rows[i]` against every `cols[j]`.
    fn matrix(&self, rows: &[String], cols: &[String]) -> Result<Vec<Vec<f64>>, SimilarityError> {
        rows.iter()
            .map(|a| cols.iter().map(|b| self.similarity(a, b)).collect())
            .collect()
    }
}

/// 1.0 for identical strings, 0.0 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSimilarity;

impl Similarity for ExactSimilarity {
    fn backend_id(&self) -> String {
        "exact".into()
    }

    fn similarity(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        Ok(if a == b && !a.is_empty() { 1.0 } else { 0.0 })
    }
}

/// Cosine of character-trigram count vectors. Strings are case-folded,
/// whitespace-collapsed and padded with two leading spaces and one trailing
/// space before trigrams are taken.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrigramSimilarity;

pub fn trigram_counts(s: &str) -> HashMap<[char; 3], u64> {
    let body = s
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    let mut counts = HashMap::new();
    if body.is_empty() {
        return counts;
    }
    let padded: Vec<char> = "  "
        .chars()
        .chain(body.chars())
        .chain(" ".chars())
        .collect();
    for w in padded.windows(3) {
        *counts.entry([w[0], w[1], w[2]]).or_insert(0) += 1;
    }
    counts
}

fn count_cosine(a: &HashMap<[char; 3], u64>, b: &HashMap<[char; 3], u64>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: u64 = small
        .iter()
        .filter_map(|(k, v)| large.get(k).map(|w| v * w))
        .sum();
    let na: u64 = a.values().map(|v| v * v).sum();
    let nb: u64 = b.values().map(|v| v * v).sum();
    // na * nb is an exact integer, so identical vectors give exactly 1.0
    (dot as f64 / ((na as f64) * (nb as f64)).sqrt()).clamp(0.0, 1.0)
}

impl Similarity for TrigramSimilarity {
    fn backend_id(&self) -> String {
        "trigram".into()
    }

    fn similarity(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        Ok(count_cosine(&trigram_counts(a), &trigram_counts(b)))
    }

    fn matrix(&self, rows: &[String], cols: &[String]) -> Result<Vec<Vec<f64>>, SimilarityError> {
        use rayon::prelude::*;
        let col_counts: Vec<_> = cols.iter().map(|c| trigram_counts(c)).collect();
        Ok(rows
            .par_iter()
            .map(|r| {
                let rc = trigram_counts(r);
                col_counts.iter().map(|cc| count_cosine(&rc, cc)).collect()
            })
            .collect())
    }
}

/// Cosine clamped to `[0, 1]`.
pub fn clamped_cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| f64::from(*x) * f64::from(*y))
        .sum();
    let na: f64 = a.iter().map(|x| f64::from(*x).powi(2)).sum();
    let nb: f64 = b.iter().map(|x| f64::from(*x).powi(2)).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb).sqrt()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub text: String,
    pub vector: Vec<f32>,
}

pub fn read_embedding_cassette(path: &Path) -> Result<HashMap<String, Vec<f32>>, SimilarityError> {
    let err = |reason: String| SimilarityError::Cassette {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| err(e.to_string()))?;
    let mut out = HashMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingRecord =
            serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", n + 1)))?;
        out.insert(rec.text, rec.vector);
    }
    Ok(out)
}

enum Source {
    Remote(RemoteEmbedder),
    Replay,
    Record(RemoteEmbedder, Mutex<BufWriter<File>>),
}

/// Embedding-cosine similarity over a remote endpoint or a recorded
/// `{"text", "vector"}` JSON Lines cassette.
pub struct EmbeddingSimilarity {
    model: String,
    source: Source,
    cache: Mutex<HashMap<String, Vec<f32>>>,
}

impl EmbeddingSimilarity {
    pub fn remote(endpoint: &str, model: &str, timeout: Duration) -> Result<Self, SimilarityError> {
        Ok(Self {
            model: model.into(),
            source: Source::Remote(RemoteEmbedder::new(endpoint, model, timeout)?),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn replay(cassette: &Path, model: &str) -> Result<Self, SimilarityError> {
        Ok(Self {
            model: model.into(),
            source: Source::Replay,
            cache: Mutex::new(read_embedding_cassette(cassette)?),
        })
    }

    pub fn from_vectors(model: &str, vectors: HashMap<String, Vec<f32>>) -> Self {
        Self {
            model: model.into(),
            source: Source::Replay,
            cache: Mutex::new(vectors),
        }
    }

    pub fn record(
        endpoint: &str,
        model: &str,
        cassette: &Path,
        timeout: Duration,
    ) -> Result<Self, SimilarityError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(cassette)
            .map_err(|e| SimilarityError::Cassette {
                path: cassette.to_path_buf(),
                reason: e.to_string(),
            })?;
        Ok(Self {
            model: model.into(),
            source: Source::Record(
                RemoteEmbedder::new(endpoint, model, timeout)?,
                Mutex::new(BufWriter::new(file)),
            ),
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Ensure every text has a vector in the cache.
    fn fetch(&self, texts: &[&str]) -> Result<(), SimilarityError> {
        let missing: Vec<String> = {
            let cache = self.cache.lock().expect("embedding cache poisoned");
            let mut m: Vec<String> = texts
                .iter()
                .filter(|t| !cache.contains_key(**t))
                .map(|t| t.to_string())
                .collect();
            m.sort();
            m.dedup();
            m
        };
        if missing.is_empty() {
            return Ok(());
        }
        let vectors = match &self.source {
            Source::Replay => return Err(SimilarityError::EmbeddingMiss(missing[0].clone())),
            Source::Remote(r) => r.embed(&missing)?,
            Source::Record(r, writer) => {
                let vectors = r.embed(&missing)?;
                let mut w = writer.lock().expect("embedding cassette poisoned");
                for (text, vector) in missing.iter().zip(&vectors) {
                    let line = serde_json::to_string(&EmbeddingRecord {
                        text: text.clone(),
                        vector: vector.clone(),
                    })
                    .expect("record serializes");
                    writeln!(w, "{line}")
                        .map_err(|e| SimilarityError::Unavailable(e.to_string()))?;
                }
                w.flush()
                    .map_err(|e| SimilarityError::Unavailable(e.to_string()))?;
                vectors
            }
        };
        let mut cache = self.cache.lock().expect("embedding cache poisoned");
        cache.extend(missing.into_iter().zip(vectors));
        Ok(())
    }
}

impl Similarity for EmbeddingSimilarity {
    fn backend_id(&self) -> String {
        format!("embedding:{}", self.model)
    }

    fn similarity(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        if a == b && !a.is_empty() {
            return Ok(1.0);
        }
        self.fetch(&[a, b])?;
        let cache = self.cache.lock().expect("embedding cache poisoned");
        Ok(clamped_cosine(&cache[a], &cache[b]))
    }

    fn matrix(&self, rows: &[String], cols: &[String]) -> Result<Vec<Vec<f64>>, SimilarityError> {
        let all: Vec<&str> = rows.iter().chain(cols).map(String::as_str).collect();
        self.fetch(&all)?;
        let cache = self.cache.lock().expect("embedding cache poisoned");
        Ok(rows
            .iter()
            .map(|a| {
                cols.iter()
                    .map(|b| {
                        if a == b && !a.is_empty() {
                            1.0
                        } else {
                            clamped_cosine(&cache[a.as_str()], &cache[b.as_str()])
                        }
                    })
                    .collect()
            })
            .collect())
    }
}

struct RemoteEmbedder {
    endpoint: String,
    model: String,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    input: &'a [String],
    model: &'a str,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EmbedResponse {
    Vectors(Vec<Vec<f32>>),
    Data { data: Vec<EmbedDatum> },
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f32>,
}

impl RemoteEmbedder {
    fn new(endpoint: &str, model: &str, timeout: Duration) -> Result<Self, SimilarityError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| SimilarityError::Unavailable(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            model: model.into(),
            client,
        })
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, SimilarityError> {
        let unavailable =
            |e: String| SimilarityError::Unavailable(format!("{}: {e}", self.endpoint));
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&EmbedRequest {
                input: texts,
                model: &self.model,
            })
            .send()
            .map_err(|e| unavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unavailable(format!("HTTP {}", resp.status())));
        }
        let vectors = match resp
            .json::<EmbedResponse>()
            .map_err(|e| unavailable(e.to_string()))?
        {
            EmbedResponse::Vectors(v) => v,
            EmbedResponse::Data { data } => data.into_iter().map(|d| d.embedding).collect(),
        };
        if vectors.len() != texts.len() {
            return Err(unavailable(format!(
                "expected {} vectors, got {}",
                texts.len(),
                vectors.len()
            )));
        }
        Ok(vectors)
    }
}
