//! Node embeddings for attributed networks.
//!
//! Instead of assigning each node a free embedding vector, the model learns a
//! parametric transformation from node attributes to embedding space and trains
//! it to predict random-walk context nodes with negative sampling. Because the
//! embedding is a function of attributes alone, nodes unseen during training
//! can be embedded afterwards from their attribute vectors.
//!
//! Pipeline: [`graph`] loads the network, [`walker`] produces context
//! co-occurrence counts, [`sampler`] draws training pairs and negatives in
//! O(1), [`mapping`] defines the attribute-to-embedding transformations and
//! their gradients, [`trainer`] runs SGD, [`inference`] embeds new nodes and
//! persists embeddings, and [`evalkit`] scores the result on classification,
//! clustering and link prediction.

pub mod error;
pub mod evalkit;
pub mod graph;
pub mod inference;
pub mod mapping;
pub mod sampler;
pub mod trainer;
pub mod walker;

pub use error::Error;
pub use graph::AttributedGraph;
pub use inference::EmbeddingSet;
pub use mapping::{MappingKind, MappingModel};
pub use trainer::{TrainConfig, Trainer};
pub use walker::{ContextCorpus, WalkConfig};
