//! Relation-preserving self-supervised node representation learning on graphs.
//!
//! An online GCN plus predictor learns to reproduce, through a KL objective,
//! how a slowly moving target GCN relates each node to a set of anchor nodes.
//! Global anchors are drawn with a preference for low-degree nodes; local
//! anchors are the top personalized-PageRank neighbors of each node.

pub mod dataset;
pub mod diffusion;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod graph;
pub mod loss;
pub mod pipeline;
pub mod rng;
pub mod sampler;
pub mod sparse;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
