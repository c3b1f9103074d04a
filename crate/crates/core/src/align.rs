//! Cross-section term consolidation: single-link clustering of near-duplicate
//! term nodes, followed by edge rewriting onto canonical labels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsu::DisjointSet;
use crate::error::ConfigError;
use crate::eval::similarity::{Similarity, SimilarityError};
use crate::graph::{Edge, GraphError, Node, NodeKind, ScaffoldGraph};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeMap {
    /// Original term label to canonical label; canonical labels map to
    /// themselves.
    pub mapping: BTreeMap<String, String>,
    pub merge_threshold: f64,
    pub backend: String,
}

impl MergeMap {
    pub fn canonical<'a>(&'a self, label: &'a str) -> &'a str {
        self.mapping.get(label).map_or(label, String::as_str)
    }

    pub fn merged_count(&self) -> usize {
        self.mapping.iter().filter(|(k, v)| k != v).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("merge map serializes");
        s.push('\n');
        s
    }
}

/// Highest provenance count, then shortest label, then lexicographically
/// smallest.
pub fn canonical_label<'a>(cluster: &[&'a Node]) -> &'a str {
    cluster
        .iter()
        .min_by(|a, b| {
            b.provenance
                .len()
                .cmp(&a.provenance.len())
                .then(a.label.chars().count().cmp(&b.label.chars().count()))
                .then(a.label.cmp(&b.label))
        })
        .map(|n| n.label.as_str())
        .expect("cluster is non-empty")
}

pub fn validate_threshold(threshold: f64) -> Result<(), ConfigError> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!(
            "merge threshold {threshold} outside (0, 1]"
        )))
    }
}

/// Merge every pair of term nodes with similarity `>= merge_threshold`
/// (transitively) and rewrite edges onto each cluster's canonical label.
/// Orphan-sentence nodes are never merged.
pub fn align_nodes(
    graph: &ScaffoldGraph,
    similarity: &dyn Similarity,
    merge_threshold: f64,
) -> Result<(ScaffoldGraph, MergeMap), AlignError> {
    validate_threshold(merge_threshold)?;
    let terms: Vec<&Node> = graph.nodes().filter(|n| n.kind == NodeKind::Term).collect();
    let labels: Vec<String> = terms.iter().map(|n| n.label.clone()).collect();
    let matrix = similarity.matrix(&labels, &labels)?;

    let mut dsu = DisjointSet::new(terms.len());
    for (i, row) in matrix.iter().enumerate() {
        for (j, &score) in row.iter().enumerate().skip(i + 1) {
            if score >= merge_threshold {
                dsu.union(i, j);
            }
        }
    }

    let mut mapping = BTreeMap::new();
    let mut merged_nodes: Vec<Node> = Vec::new();
    for group in dsu.groups() {
        let members: Vec<&Node> = group.iter().map(|&i| terms[i]).collect();
        let canonical = canonical_label(&members).to_string();
        let mut provenance = Vec::new();
        for m in &members {
            provenance.extend(m.provenance.iter().cloned());
            mapping.insert(m.label.clone(), canonical.clone());
        }
        merged_nodes.push(Node {
            label: canonical,
            kind: NodeKind::Term,
            provenance,
        });
    }
    merged_nodes.extend(
        graph
            .nodes()
            .filter(|n| n.kind == NodeKind::OrphanSentence)
            .cloned(),
    );

    let lookup = |l: &str| mapping.get(l).cloned().unwrap_or_else(|| l.to_string());
    let edges: Vec<Edge> = graph
        .edges()
        .iter()
        .map(|e| Edge {
            subject_label: lookup(&e.subject_label),
            object_label: lookup(&e.object_label),
            ..e.clone()
        })
        .collect();
    let aligned = ScaffoldGraph::from_parts(
        merged_nodes,
        edges,
        graph.orphan_ids().iter().cloned().collect::<BTreeSet<_>>(),
    )?;
    Ok((
        aligned,
        MergeMap {
            mapping,
            merge_threshold,
            backend: similarity.backend_id(),
        },
    ))
}
