//! Small synthetic graphs used as fixtures.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{build_graph, SparseGraph};
use crate::rng::{stream_rng, Stream};

/// Parameters of a two-block stochastic block model with noisy block-indicator
/// features.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Features per block; total width is twice this.
    pub block_features: usize,
    /// Probability that a feature of the node's own block is on.
    pub signal: f64,
    /// Probability that any other feature is on.
    pub noise: f64,
}

impl Default for SbmSpec {
    /// 100 nodes in two equal communities.
    fn default() -> Self {
        Self {
            nodes_per_block: 50,
            p_in: 0.1,
            p_out: 0.01,
            block_features: 10,
            signal: 0.3,
            noise: 0.05,
        }
    }
}

/// Sample a labelled two-community graph; node `i` belongs to block
/// `i / nodes_per_block`.
pub fn two_block_sbm(spec: &SbmSpec, seed: u64) -> Result<SparseGraph> {
    for p in [spec.p_in, spec.p_out, spec.signal, spec.noise] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
        }
    }
    let n = 2 * spec.nodes_per_block;
    let block = |i: usize| i / spec.nodes_per_block;
    let mut rng = stream_rng(seed, Stream::Fixture, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if block(i) == block(j) { spec.p_in } else { spec.p_out };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let f = 2 * spec.block_features;
    let mut x = Array2::<f32>::zeros((n, f));
    for i in 0..n {
        for c in 0..f {
            let p = if c / spec.block_features == block(i) { spec.signal } else { spec.noise };
            if rng.random_bool(p) {
                x[[i, c]] = 1.0;
            }
        }
    }
    let labels = (0..n).map(block).collect();
    build_graph(n, &edges, x, Some(labels))
}
