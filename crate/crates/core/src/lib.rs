//! Knowledge-graph measures over per-paper claim edge lists.
//!
//! Each working paper contributes a small directed graph whose nodes are JEL
//! concept codes and whose edges are extracted claims. From these graphs the
//! crate computes narrative complexity, chronological novelty, gap filling,
//! source-sink balance and prior-year centrality, and regresses publication
//! and citation outcomes on them.

pub mod centrality;
pub mod concept;
pub mod econometrics;
pub mod embedding;
pub mod error;
pub mod frontier;
pub mod gaps;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod synthetic;
pub mod trends;

pub use concept::ConceptCode;
pub use error::{Error, Result};
