//! Ontology scaffold graph: assembly from validated triples, orphan
//! insertion, statistics and export.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsu::DisjointSet;
use crate::error::ConfigError;
use crate::normalize::{normalize_term, Provenance, TripleFlag, ValidatedTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Term,
    OrphanSentence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub label: String,
    pub kind: NodeKind,
    pub provenance: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub subject_label: String,
    pub predicate: String,
    pub object_label: String,
    pub provenance: Vec<Provenance>,
    pub flags: BTreeSet<TripleFlag>,
}

impl Edge {
    fn key(&self) -> EdgeKey {
        (
            self.subject_label.clone(),
            self.predicate.clone(),
            self.object_label.clone(),
        )
    }
}

type EdgeKey = (String, String, String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    #[serde(rename = "nodes")]
    pub node_count: usize,
    #[serde(rename = "triples")]
    pub triple_count: usize,
    #[serde(rename = "islands")]
    pub island_count: usize,
}

/// A sentence that produced no triples, to be materialized as a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrphanSentence {
    pub sentence_id: String,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("edge {index} references missing node '{label}'")]
    DanglingEdge { index: usize, label: String },
    #[error("duplicate node label '{0}'")]
    DuplicateNode(String),
}

#[derive(Debug, Clone, Default)]
pub struct ScaffoldGraph {
    /// Keyed by case-folded label.
    nodes: BTreeMap<String, Node>,
    edges: Vec<Edge>,
    orphan_ids: BTreeSet<String>,
    edge_index: HashMap<EdgeKey, usize>,
}

impl PartialEq for ScaffoldGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.orphan_ids == other.orphan_ids
    }
}

impl Eq for ScaffoldGraph {}

/// Serialized form: nodes sorted by label, edges in insertion order.
#[derive(Serialize, Deserialize)]
struct GraphDocument {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    orphan_ids: Vec<String>,
}

fn fold(label: &str) -> String {
    label.to_lowercase()
}

/// Node label for an orphan sentence: the normalized sentence text without
/// its terminal punctuation.
pub fn orphan_label(text: &str) -> String {
    normalize_term(text.trim().trim_end_matches(['.', ';', '!', '?', ':']))
}

impl ScaffoldGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node(&self, label: &str) -> Option<&Node> {
        self.nodes.get(&fold(label))
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.nodes.contains_key(&fold(label))
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn orphan_ids(&self) -> &BTreeSet<String> {
        &self.orphan_ids
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triple_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of triple assertions before duplicate merging.
    pub fn assertion_count(&self) -> usize {
        self.edges.iter().map(|e| e.provenance.len()).sum()
    }

    fn touch_node(&mut self, label: &str, kind: NodeKind, sentence_id: &str) {
        self.nodes
            .entry(fold(label))
            .or_insert_with(|| Node {
                label: label.to_string(),
                kind,
                provenance: Vec::new(),
            })
            .provenance
            .push(sentence_id.to_string());
    }

    /// Insert endpoints and append the edge; an identical (subject,
    /// predicate, object) edge merges provenance and flags instead.
    pub fn add_triple(&mut self, t: &ValidatedTriple) {
        let sid = &t.provenance.sentence_id;
        self.touch_node(&t.subject, NodeKind::Term, sid);
        self.touch_node(&t.object, NodeKind::Term, sid);
        let subject_label = self.nodes[&fold(&t.subject)].label.clone();
        let object_label = self.nodes[&fold(&t.object)].label.clone();
        self.push_edge(Edge {
            subject_label,
            predicate: t.predicate.clone(),
            object_label,
            provenance: vec![t.provenance.clone()],
            flags: t.flags.clone(),
        });
    }

    fn push_edge(&mut self, edge: Edge) {
        let key = edge.key();
        match self.edge_index.get(&key) {
            Some(&i) => {
                let existing = &mut self.edges[i];
                existing.provenance.extend(edge.provenance);
                existing.flags.extend(edge.flags);
            }
            None => {
                self.edge_index.insert(key, self.edges.len());
                self.edges.push(edge);
            }
        }
    }

    /// Materialize orphan sentences as isolated nodes unless their label
    /// already names a node.
    pub fn insert_orphans(&mut self, orphans: &[OrphanSentence]) {
        for o in orphans {
            let label = orphan_label(&o.text);
            if label.is_empty() || self.contains_label(&label) {
                continue;
            }
            self.touch_node(&label, NodeKind::OrphanSentence, &o.sentence_id);
            self.orphan_ids.insert(o.sentence_id.clone());
        }
    }

    /// Connected components of the undirected view.
    pub fn island_count(&self) -> usize {
        let index: HashMap<&str, usize> = self
            .nodes
            .keys()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i))
            .collect();
        let mut dsu = DisjointSet::new(self.nodes.len());
        for e in &self.edges {
            let a = index[fold(&e.subject_label).as_str()];
            let b = index[fold(&e.object_label).as_str()];
            dsu.union(a, b);
        }
        dsu.components()
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            node_count: self.node_count(),
            triple_count: self.triple_count(),
            island_count: self.island_count(),
        }
    }

    /// Rebuild a graph from parts, merging duplicate edges.
    pub(crate) fn from_parts(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        orphan_ids: BTreeSet<String>,
    ) -> Result<Self, GraphError> {
        let mut g = ScaffoldGraph {
            orphan_ids,
            ..Default::default()
        };
        for n in nodes {
            let key = fold(&n.label);
            if g.nodes.insert(key, n.clone()).is_some() {
                return Err(GraphError::DuplicateNode(n.label));
            }
        }
        for (index, e) in edges.into_iter().enumerate() {
            for label in [&e.subject_label, &e.object_label] {
                if !g.contains_label(label) {
                    return Err(GraphError::DanglingEdge {
                        index,
                        label: label.clone(),
                    });
                }
            }
            g.push_edge(e);
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDocument {
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges.clone(),
            orphan_ids: self.orphan_ids.iter().cloned().collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("graph serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument = serde_json::from_str(text)?;
        Self::from_parts(doc.nodes, doc.edges, doc.orphan_ids.into_iter().collect())
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph scaffold {\n  rankdir=LR;\n");
        for n in self.nodes.values() {
            let shape = match n.kind {
                NodeKind::Term => "ellipse",
                NodeKind::OrphanSentence => "note",
            };
            let _ = writeln!(s, "  {} [shape={shape}];", dot_quote(&n.label));
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "  {} -> {} [label={}];",
                dot_quote(&e.subject_label),
                dot_quote(&e.object_label),
                dot_quote(&e.predicate)
            );
        }
        s.push_str("}\n");
        s
    }

    /// One row per edge: subject, predicate, object, sentence ids joined by `;`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["subject", "predicate", "object", "sentence_id"])
            .expect("in-memory csv");
        for e in &self.edges {
            let ids = e
                .provenance
                .iter()
                .map(|p| p.sentence_id.as_str())
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([&e.subject_label, &e.predicate, &e.object_label, &ids])
                .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    pub fn export(&self, format: ExportFormat) -> Vec<u8> {
        match format {
            ExportFormat::Json => self.to_json(),
            ExportFormat::Dot => self.to_dot(),
            ExportFormat::Csv => self.to_csv(),
        }
        .into_bytes()
    }
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
    Csv,
}

impl FromStr for ExportFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "dot" => Ok(Self::Dot),
            "csv" => Ok(Self::Csv),
            _ => Err(ConfigError::Unknown {
                kind: "export format",
                value: s.to_string(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vt(s: &str, p: &str, o: &str, sid: &str) -> ValidatedTriple {
        ValidatedTriple {
            subject: s.into(),
            predicate: p.into(),
            object: o.into(),
            provenance: Provenance {
                sentence_id: sid.into(),
                section_label: None,
            },
            flags: BTreeSet::new(),
        }
    }

    #[test]
    fn add_triple_rules() {
        let mut g = ScaffoldGraph::new();
        g.add_triple(&vt("software engineer", "act in", "public interest", "s0"));
        assert_eq!((g.node_count(), g.triple_count()), (2, 1));
        g.add_triple(&vt("software engineer", "act in", "public interest", "s1"));
        assert_eq!((g.node_count(), g.triple_count()), (2, 1));
        assert_eq!(g.edges()[0].provenance.len(), 2);
        assert_eq!(g.assertion_count(), 2);
        g.add_triple(&vt("software engineer", "maintain", "integrity", "s2"));
        assert_eq!((g.node_count(), g.triple_count()), (3, 2));
        g.add_triple(&vt("software engineer", "serve", "public interest", "s3"));
        assert_eq!(
            g.triple_count(),
            3,
            "distinct predicates stay distinct edges"
        );
    }

    #[test]
    fn orphan_insertion() {
        let mut g = ScaffoldGraph::new();
        g.insert_orphans(&[]);
        assert_eq!(g, ScaffoldGraph::new());
        g.insert_orphans(&[
            OrphanSentence {
                sentence_id: "a".into(),
                text: "Principles.".into(),
            },
            OrphanSentence {
                sentence_id: "b".into(),
                text: "Product quality matters".into(),
            },
        ]);
        assert_eq!(
            g.stats(),
            GraphStats {
                node_count: 2,
                triple_count: 0,
                island_count: 2
            }
        );
        assert_eq!(g.node("principle").unwrap().kind, NodeKind::OrphanSentence);

        let mut g = ScaffoldGraph::new();
        g.add_triple(&vt("judgment", "maintain", "integrity", "s0"));
        g.insert_orphans(&[OrphanSentence {
            sentence_id: "x".into(),
            text: "Integrity.".into(),
        }]);
        assert_eq!(g.node_count(), 2);
        assert!(g.orphan_ids().is_empty());
    }

    #[test]
    fn stats_cases() {
        assert_eq!(
            ScaffoldGraph::new().stats(),
            GraphStats {
                node_count: 0,
                triple_count: 0,
                island_count: 0
            }
        );
        let mut g = ScaffoldGraph::new();
        g.add_triple(&vt("a", "r", "b", "s"));
        assert_eq!(
            g.stats(),
            GraphStats {
                node_count: 2,
                triple_count: 1,
                island_count: 1
            }
        );
        g.add_triple(&vt("b", "r", "c", "s"));
        g.add_triple(&vt("c", "r", "a", "s"));
        g.insert_orphans(&[OrphanSentence {
            sentence_id: "d".into(),
            text: "d d".into(),
        }]);
        assert_eq!(g.island_count(), 2);
        let stats = serde_json::to_string(&g.stats()).unwrap();
        assert_eq!(stats, r#"{"nodes":4,"triples":3,"islands":2}"#);
    }

    #[test]
    fn exports() {
        let mut g = ScaffoldGraph::new();
        g.add_triple(&vt(
            "software engineer",
            "act in",
            "public \"interest\"",
            "s0",
        ));
        let dot = g.to_dot();
        let arrows: Vec<&str> = dot.lines().filter(|l| l.contains("->")).collect();
        assert_eq!(
            arrows,
            vec![r#"  "software engineer" -> "public \"interest\"" [label="act in"];"#]
        );
        let csv = g.to_csv();
        assert_eq!(csv.lines().count() - 1, g.triple_count());
        assert_eq!(ScaffoldGraph::from_json(&g.to_json()).unwrap(), g);
        assert_eq!("DOT".parse::<ExportFormat>().unwrap(), ExportFormat::Dot);
        assert!("owl".parse::<ExportFormat>().is_err());
    }

    #[test]
    fn dangling_edge_rejected_on_import() {
        let json = r#"{"nodes":[{"label":"a","kind":"term","provenance":[]}],
            "edges":[{"subject_label":"a","predicate":"r","object_label":"b","provenance":[],"flags":[]}],
            "orphan_ids":[]}"#;
        assert!(matches!(
            ScaffoldGraph::from_json(json),
            Err(GraphError::DanglingEdge { index: 0, .. })
        ));
    }

    fn components_by_search(g: &ScaffoldGraph) -> usize {
        let labels: Vec<String> = g.nodes().map(|n| n.label.clone()).collect();
        let mut seen = vec![false; labels.len()];
        let pos = |l: &str| labels.iter().position(|x| x == l).unwrap();
        let mut count = 0;
        for start in 0..labels.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for e in g.edges() {
                    let (a, b) = (pos(&e.subject_label), pos(&e.object_label));
                    for (x, y) in [(a, b), (b, a)] {
                        if x == v && !seen[y] {
                            seen[y] = true;
                            stack.push(y);
                        }
                    }
                }
            }
        }
        count
    }

    proptest! {
        #[test]
        fn islands_match_search_and_counts_monotone(
            edges in proptest::collection::vec((0u8..12, 0u8..3, 0u8..12), 0..25),
        ) {
            let mut g = ScaffoldGraph::new();
            let mut last = (0, 0);
            for (a, p, b) in edges {
                g.add_triple(&vt(&format!("n{a}"), &format!("r{p}"), &format!("n{b}"), "s"));
                let now = (g.node_count(), g.triple_count());
                prop_assert!(now.0 >= last.0 && now.1 >= last.1);
                last = now;
            }
            prop_assert_eq!(g.island_count(), components_by_search(&g));
            prop_assert_eq!(ScaffoldGraph::from_json(&g.to_json()).unwrap().to_json(), g.to_json());
        }
    }
}
