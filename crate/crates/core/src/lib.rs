//! Entity resolution between two knowledge graphs from attribute
//! similarities and graph embeddings.
//!
//! Pairs of entities are described by string similarities of their
//! attribute profiles, by their TransE vectors, or by both, and a random
//! forest or MLP decides whether they match.

pub mod attr_sim;
pub mod classifiers;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod kg;
pub mod pipeline;
pub mod synthetic;

pub use error::{Error, Result};
pub use kg::{AlignmentSet, EntityId, EntityRef, KgSide, KnowledgeGraph};
