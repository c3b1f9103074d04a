//! Node- and triple-level evaluation of predicted graphs against gold sets
//! under a similarity-threshold sweep.

pub mod chart;
pub mod greedy;
pub mod similarity;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ConfigError;
use crate::graph::ScaffoldGraph;
use crate::inference::RawTriple;

pub use greedy::{greedy_align, greedy_align_matrix, greedy_match_counts};
pub use similarity::{
    EmbeddingSimilarity, ExactSimilarity, Similarity, SimilarityError, TrigramSimilarity,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: line {line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Subject, predicate and object joined by single spaces.
///
/// Not injective: `("a b", "c", "d")` and `("a", "b c", "d")` collide.
pub fn triple_string(t: &RawTriple) -> String {
    format!("{} {} {}", t.subject, t.predicate, t.object)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSet {
    pub name: String,
    pub triples: Vec<RawTriple>,
    #[serde(default)]
    pub extra_nodes: Vec<String>,
}

fn push_unique(out: &mut Vec<String>, item: &str) {
    if !out.iter().any(|x| x == item) {
        out.push(item.to_string());
    }
}

impl GoldSet {
    /// Triple endpoints and extra nodes, deduplicated in first-seen order.
    pub fn node_labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.triples {
            push_unique(&mut out, &t.subject);
            push_unique(&mut out, &t.object);
        }
        for n in &self.extra_nodes {
            push_unique(&mut out, n);
        }
        out
    }

    pub fn triple_strings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.triples {
            push_unique(&mut out, &triple_string(t));
        }
        out
    }
}

/// Items under evaluation: node labels and triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub nodes: Vec<String>,
    pub triples: Vec<RawTriple>,
}

impl Prediction {
    pub fn from_graph(graph: &ScaffoldGraph) -> Self {
        Self {
            nodes: graph.nodes().map(|n| n.label.clone()).collect(),
            triples: graph
                .edges()
                .iter()
                .map(|e| RawTriple {
                    subject: e.subject_label.clone(),
                    predicate: e.predicate.clone(),
                    object: e.object_label.clone(),
                })
                .collect(),
        }
    }

    pub fn from_triples(triples: Vec<RawTriple>) -> Self {
        let mut nodes = Vec::new();
        for t in &triples {
            push_unique(&mut nodes, &t.subject);
            push_unique(&mut nodes, &t.object);
        }
        Self { nodes, triples }
    }

    pub fn from_gold(gold: &GoldSet) -> Self {
        Self {
            nodes: gold.node_labels(),
            triples: gold.triples.clone(),
        }
    }

    pub fn triple_strings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.triples {
            push_unique(&mut out, &triple_string(t));
        }
        out
    }

    pub fn items(&self, level: Level) -> Vec<String> {
        match level {
            Level::Node => {
                let mut out = Vec::new();
                for n in &self.nodes {
                    push_unique(&mut out, n);
                }
                out
            }
            Level::Triple => self.triple_strings(),
        }
    }
}

#[derive(Deserialize)]
struct TripleLine {
    subject: String,
    predicate: String,
    object: String,
    #[allow(dead_code)]
    #[serde(default)]
    sentence_id: Option<String>,
    #[allow(dead_code)]
    #[serde(default)]
    section: Option<String>,
}

/// Parse triples JSON Lines. Blank lines are skipped; line numbers are 1-based.
pub fn parse_triples(text: &str, path: &str) -> Result<Vec<RawTriple>, EvalError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let format = |message: String| EvalError::Format {
            path: path.to_string(),
            line: n + 1,
            message,
        };
        let t: TripleLine = serde_json::from_str(line).map_err(|e| format(e.to_string()))?;
        for (name, value) in [
            ("subject", &t.subject),
            ("predicate", &t.predicate),
            ("object", &t.object),
        ] {
            if value.trim().is_empty() {
                return Err(format(format!("empty \"{name}\"")));
            }
        }
        out.push(RawTriple {
            subject: t.subject,
            predicate: t.predicate,
            object: t.object,
        });
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, EvalError> {
    std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_triples(path: &Path) -> Result<Vec<RawTriple>, EvalError> {
    parse_triples(&read(path)?, &path.display().to_string())
}

pub fn load_gold(path: &Path) -> Result<GoldSet, EvalError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| EvalError::Format {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Load predictions from a graph JSON file or a triples JSONL file, chosen
/// by extension (`.jsonl` means triples).
pub fn load_prediction(path: &Path) -> Result<Prediction, EvalError> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return Ok(Prediction::from_triples(load_triples(path)?));
    }
    let text = read(path)?;
    let graph = ScaffoldGraph::from_json(&text).map_err(|e| EvalError::Format {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    Ok(Prediction::from_graph(&graph))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Node,
    Triple,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Node => "node",
            Level::Triple => "triple",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub level: Level,
    pub gold: String,
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub pred_count: usize,
    pub gold_count: usize,
}

impl SweepRow {
    pub fn from_counts(
        level: Level,
        gold: &str,
        tau: f64,
        matched: usize,
        pred_count: usize,
        gold_count: usize,
    ) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(matched, pred_count);
        let recall = ratio(matched, gold_count);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            level,
            gold: gold.to_string(),
            tau,
            precision,
            recall,
            f1,
            matched,
            pred_count,
            gold_count,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: [&str; 9] = [
    "level",
    "gold",
    "tau",
    "precision",
    "recall",
    "f1",
    "matched",
    "pred_count",
    "gold_count",
];

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory csv");
        for r in &self.rows {
            w.write_record([
                r.level.to_string(),
                r.gold.clone(),
                format!("{:.2}", r.tau),
                r.precision.to_string(),
                r.recall.to_string(),
                r.f1.to_string(),
                r.matched.to_string(),
                r.pred_count.to_string(),
                r.gold_count.to_string(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (n, rec) in r.deserialize::<SweepRow>().enumerate() {
            rows.push(rec.map_err(|e| EvalError::Format {
                path: "<csv>".into(),
                line: n + 2,
                message: e.to_string(),
            })?);
        }
        Ok(Self { rows })
    }

    /// Rows of one (level, gold) series in tau order.
    pub fn series(&self, level: Level, gold: &str) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.level == level && r.gold == gold)
            .collect()
    }
}

/// 0.10, 0.15, ..., 0.90 (17 values).
pub fn default_taus() -> Vec<f64> {
    (0..17).map(|i| f64::from(10 + 5 * i) / 100.0).collect()
}

pub fn validate_taus(taus: &[f64]) -> Result<(), ConfigError> {
    if taus.is_empty() {
        return Err(ConfigError::Invalid("tau list is empty".into()));
    }
    if taus.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(ConfigError::Invalid("every tau must lie in (0, 1]".into()));
    }
    if taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::Invalid(
            "taus must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Score one (level, gold, tau) cell.
pub fn evaluate_level(
    pred: &Prediction,
    gold: &GoldSet,
    level: Level,
    provider: &dyn Similarity,
    tau: f64,
) -> Result<SweepRow, EvalError> {
    let result = sweep(pred, std::slice::from_ref(gold), provider, &[tau])?;
    Ok(result
        .rows
        .into_iter()
        .find(|r| r.level == level)
        .expect("sweep emits every level"))
}

/// Rows for every (level, gold, tau); similarity matrices are computed once
/// per (level, gold).
pub fn sweep(
    pred: &Prediction,
    golds: &[GoldSet],
    provider: &dyn Similarity,
    taus: &[f64],
) -> Result<SweepResult, EvalError> {
    validate_taus(taus)?;
    let mut rows = Vec::new();
    for level in [Level::Node, Level::Triple] {
        let pred_items = pred.items(level);
        for gold in golds {
            let gold_items = match level {
                Level::Node => gold.node_labels(),
                Level::Triple => gold.triple_strings(),
            };
            let matrix = provider.matrix(&pred_items, &gold_items)?;
            let counts = greedy_match_counts(&matrix, taus);
            for (&tau, matched) in taus.iter().zip(counts) {
                rows.push(SweepRow::from_counts(
                    level,
                    &gold.name,
                    tau,
                    matched,
                    pred_items.len(),
                    gold_items.len(),
                ));
            }
        }
    }
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str, p: &str, o: &str) -> RawTriple {
        RawTriple {
            subject: s.into(),
            predicate: p.into(),
            object: o.into(),
        }
    }

    #[test]
    fn triple_string_rule() {
        assert_eq!(triple_string(&t("a", "b", "c")), "a b c");
        assert_eq!(
            triple_string(&t("software engineer", "act in", "x")),
            "software engineer act in x"
        );
        assert_eq!(
            triple_string(&t("a b", "c", "d")),
            triple_string(&t("a", "b c", "d"))
        );
    }

    #[test]
    fn row_arithmetic() {
        let r = SweepRow::from_counts(Level::Node, "g", 0.5, 2, 3, 4);
        assert_eq!(r.precision, 2.0 / 3.0);
        assert_eq!(r.recall, 0.5);
        assert!((r.f1 - 4.0 / 7.0).abs() < 1e-15);
        let r = SweepRow::from_counts(Level::Node, "g", 0.5, 0, 0, 4);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        let r = SweepRow::from_counts(Level::Node, "g", 0.5, 3, 3, 3);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn taus() {
        let d = default_taus();
        assert_eq!(d.len(), 17);
        assert_eq!(d[0], 0.10);
        assert_eq!(d[16], 0.90);
        assert_eq!(d[1], 0.15);
        assert!(validate_taus(&d).is_ok());
        assert!(validate_taus(&[0.5, 0.5]).is_err());
        assert!(validate_taus(&[0.0, 0.5]).is_err());
    }

    #[test]
    fn gold_node_set() {
        let g = GoldSet {
            name: "g".into(),
            triples: vec![t("a", "r", "b"), t("c", "r", "d")],
            extra_nodes: vec!["e".into()],
        };
        assert_eq!(g.node_labels().len(), 5);
    }

    #[test]
    fn self_evaluation_identity() {
        let g = GoldSet {
            name: "g".into(),
            triples: vec![
                t("software engineer", "act in", "public interest"),
                t("engineer", "serve", "client"),
            ],
            extra_nodes: vec!["Engineer".into()],
        };
        let pred = Prediction::from_gold(&g);
        for tau in default_taus() {
            for level in [Level::Node, Level::Triple] {
                let r = evaluate_level(&pred, &g, level, &TrigramSimilarity, tau).unwrap();
                assert_eq!(
                    (r.precision, r.recall, r.f1),
                    (1.0, 1.0, 1.0),
                    "{level} {tau}"
                );
            }
        }
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let g = GoldSet {
            name: "g".into(),
            triples: vec![t("a", "b", "c")],
            extra_nodes: vec![],
        };
        let r = evaluate_level(
            &Prediction::from_triples(vec![]),
            &g,
            Level::Triple,
            &TrigramSimilarity,
            0.5,
        )
        .unwrap();
        assert_eq!(
            (r.precision, r.recall, r.f1, r.pred_count),
            (0.0, 0.0, 0.0, 0)
        );
    }

    #[test]
    fn jsonl_parsing() {
        let text = "{\"subject\":\"a\",\"predicate\":\"b\",\"object\":\"c\"}\n\n{\"subject\":\"d\",\"predicate\":\"e\",\"object\":\"f\",\"sentence_id\":\"s\",\"section\":\"1.01\"}\n{\"subject\":\"g\",\"predicate\":\"h\",\"object\":\"i\"}\n";
        assert_eq!(parse_triples(text, "x").unwrap().len(), 3);
        let bad = "{\"subject\":\"a\",\"predicate\":\"b\",\"object\":\"c\"}\n{\"subject\":\"a\",\"predicate\":\"b\"}\n";
        match parse_triples(bad, "x") {
            Err(EvalError::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = GoldSet {
            name: "g".into(),
            triples: vec![t("a", "b", "c")],
            extra_nodes: vec![],
        };
        let res = sweep(
            &Prediction::from_gold(&g),
            &[g],
            &TrigramSimilarity,
            &default_taus(),
        )
        .unwrap();
        assert_eq!(res.rows.len(), 34);
        let csv = res.to_csv();
        assert!(
            csv.starts_with("level,gold,tau,precision,recall,f1,matched,pred_count,gold_count\n")
        );
        assert_eq!(SweepResult::from_csv(&csv).unwrap(), res);
    }
}
