//! Relation-triple extraction pipeline that turns standards text into an
//! ontology scaffold graph, plus an evaluation harness for comparing
//! predicted graphs against gold reference sets.

pub mod align;
pub mod config;
pub mod dsu;
pub mod error;
pub mod eval;
pub mod graph;
pub mod inference;
pub mod ingest;
pub mod mining;
pub mod normalize;
pub mod pipeline;

pub use error::ConfigError;
