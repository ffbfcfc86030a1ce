use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node index {index} out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { index: usize, num_nodes: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cosine similarity undefined: node {node} has a zero-norm {side} vector")]
    ZeroNorm { node: usize, side: &'static str },

    #[error("query node {0} has an empty anchor set")]
    EmptyAnchors(usize),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("backward called before a forward pass cached activations")]
    MissingForwardCache,

    #[error("class {class} has no nodes in the training split; reseed the split")]
    MissingClass { class: usize },

    #[error("insufficient negative candidates: found {found}, need {needed}")]
    InsufficientNegatives { found: usize, needed: usize },

    #[error("degenerate evaluation set: {0}")]
    Degenerate(String),

    #[error("{}:{line}: {msg}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
