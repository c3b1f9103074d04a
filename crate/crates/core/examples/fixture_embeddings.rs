//! Write a replayable embedding cassette of feature-hashed vectors for every
//! node label and triple string in the given prediction and gold files.
//!
//!     cargo run -p ontoscaffold --example fixture_embeddings -- OUT PRED GOLD...
//!
//! The vectors are not from a neural model. They exist so the embedding
//! backend can be exercised offline with stable numbers.

use std::collections::BTreeSet;
use std::path::Path;

use ontoscaffold::eval::similarity::EmbeddingRecord;
use ontoscaffold::eval::{load_gold, load_prediction, Level, Prediction};
use sha2::{Digest, Sha256};

const DIM: usize = 64;

fn bucket(feature: &str) -> (usize, f32) {
    let h = Sha256::digest(feature.as_bytes());
    let idx = usize::from(h[0]) << 8 | usize::from(h[1]);
    let sign = if h[2] & 1 == 0 { 1.0 } else { -1.0 };
    (idx % DIM, sign)
}

fn embed(text: &str) -> Vec<f32> {
    let mut v = vec![0f32; DIM];
    let lower = text.to_lowercase();
    let chars: Vec<char> = format!("  {lower} ").chars().collect();
    for w in chars.windows(3) {
        let (i, s) = bucket(&format!("c:{}", w.iter().collect::<String>()));
        v[i] += s;
    }
    for word in lower.split_whitespace() {
        let (i, s) = bucket(&format!("w:{word}"));
        v[i] += 2.0 * s;
    }
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x = ((*x / norm) * 1e6).round() / 1e6;
        }
    }
    v
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut texts = BTreeSet::new();
    let mut preds = vec![load_prediction(Path::new(&args[1]))?];
    for g in &args[2..] {
        preds.push(Prediction::from_gold(&load_gold(Path::new(g))?));
    }
    for p in &preds {
        for level in [Level::Node, Level::Triple] {
            texts.extend(p.items(level));
        }
    }
    let mut out = String::new();
    for text in texts {
        let vector = embed(&text);
        out.push_str(&serde_json::to_string(&EmbeddingRecord { text, vector })?);
        out.push('\n');
    }
    std::fs::write(&args[0], out)?;
    Ok(())
}
