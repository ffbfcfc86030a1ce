//! Immutable undirected graphs, normalization, and stochastic augmentations.

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::sparse::CsrMatrix;

/// Symmetric adjacency in CSR form. Rows are sorted, contain no duplicates and
/// no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl Adjacency {
    /// Symmetrize and deduplicate an undirected edge list. Self-loops are dropped.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(a, b) in edges {
            for index in [a, b] {
                if index >= num_nodes {
                    return Err(Error::NodeOutOfRange { index, num_nodes });
                }
            }
            if a == b {
                continue;
            }
            rows[a].push(b);
            rows[b].push(a);
        }
        Ok(Self::from_rows(rows))
    }

    fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        Self { row_ptr, col_idx }
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self {
            row_ptr: vec![0; num_nodes + 1],
            col_idx: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn degrees(&self) -> DegreeVector {
        DegreeVector((0..self.num_nodes()).map(|i| self.degree(i)).collect())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`, in CSR order.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .copied()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        (0..self.num_nodes()).map(|i| self.neighbors(i).to_vec()).collect()
    }

    /// Structural fingerprint used to invalidate caches derived from the topology.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for v in self.row_ptr.iter().chain(&self.col_idx) {
            hasher.update((*v as u64).to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .take(16)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Number of incident undirected edges per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector(pub Vec<usize>);

impl DegreeVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Node features, kept dense in `f32` with a row-wise index of the nonzero
/// entries. Bag-of-words features are very sparse, and every product with the
/// feature matrix runs over the nonzeros only.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dense: Array2<f32>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(dense: Array2<f32>) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in dense.rows() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    cols.push(c);
                    vals.push(f64::from(v));
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dense,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.dense.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.dense.ncols()
    }

    pub fn dense(&self) -> &Array2<f32> {
        &self.dense
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.dense.mapv(f64::from)
    }
}

/// Immutable attributed graph.
#[derive(Debug, Clone)]
pub struct SparseGraph {
    adjacency: Adjacency,
    features: Arc<FeatureMatrix>,
    labels: Option<Arc<Vec<usize>>>,
}

impl SparseGraph {
    pub fn num_nodes(&self) -> usize {
        self.adjacency.num_nodes()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.num_edges()
    }

    pub fn num_features(&self) -> usize {
        self.features.num_features()
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn shared_features(&self) -> Arc<FeatureMatrix> {
        Arc::clone(&self.features)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref().map(Vec::as_slice)
    }

    pub fn num_classes(&self) -> usize {
        self.labels()
            .and_then(|l| l.iter().max())
            .map_or(0, |&m| m + 1)
    }

    pub fn degrees(&self) -> DegreeVector {
        self.adjacency.degrees()
    }

    /// Same nodes, features and labels over a different edge set.
    pub fn with_adjacency(&self, adjacency: Adjacency) -> Result<Self> {
        if adjacency.num_nodes() != self.num_nodes() {
            return Err(Error::Shape(format!(
                "adjacency has {} nodes, graph has {}",
                adjacency.num_nodes(),
                self.num_nodes()
            )));
        }
        Ok(Self {
            adjacency,
            features: Arc::clone(&self.features),
            labels: self.labels.clone(),
        })
    }

    /// Un-augmented view of the whole graph.
    pub fn full_view(&self) -> GraphView {
        GraphView {
            adjacency: self.adjacency.clone(),
            feature_mask: vec![true; self.num_features()],
        }
    }
}

/// Build a graph from an undirected edge list. Duplicates and reversed pairs
/// collapse to a single undirected edge.
pub fn build_graph(
    num_nodes: usize,
    edges: &[(usize, usize)],
    features: Array2<f32>,
    labels: Option<Vec<usize>>,
) -> Result<SparseGraph> {
    build_graph_shared(num_nodes, edges, Arc::new(FeatureMatrix::new(features)), labels)
}

/// As [`build_graph`], reusing an already indexed feature matrix.
pub fn build_graph_shared(
    num_nodes: usize,
    edges: &[(usize, usize)],
    features: Arc<FeatureMatrix>,
    labels: Option<Vec<usize>>,
) -> Result<SparseGraph> {
    if features.num_rows() != num_nodes {
        return Err(Error::Shape(format!(
            "feature matrix has {} rows, expected {num_nodes}",
            features.num_rows()
        )));
    }
    if let Some(l) = &labels {
        if l.len() != num_nodes {
            return Err(Error::Shape(format!(
                "{} labels for {num_nodes} nodes",
                l.len()
            )));
        }
    }
    Ok(SparseGraph {
        adjacency: Adjacency::from_edges(num_nodes, edges)?,
        features,
        labels: labels.map(Arc::new),
    })
}

/// `D^-1/2 A D^-1/2`, over `A + I` when `add_self_loops` is set. Without
/// self-loops an isolated node gets an all-zero row.
pub fn normalized_transition(adjacency: &Adjacency, add_self_loops: bool) -> CsrMatrix {
    let n = adjacency.num_nodes();
    let loop_weight = usize::from(add_self_loops);
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d = adjacency.degree(i) + loop_weight;
            if d == 0 {
                0.0
            } else {
                1.0 / (d as f64).sqrt()
            }
        })
        .collect();

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(adjacency.col_idx.len() + n * loop_weight);
    let mut values = Vec::with_capacity(col_idx.capacity());
    row_ptr.push(0);
    for i in 0..n {
        let mut pushed_loop = !add_self_loops;
        for &j in adjacency.neighbors(i) {
            if !pushed_loop && j > i {
                col_idx.push(i);
                values.push(inv_sqrt[i] * inv_sqrt[i]);
                pushed_loop = true;
            }
            col_idx.push(j);
            values.push(inv_sqrt[i] * inv_sqrt[j]);
        }
        if !pushed_loop {
            col_idx.push(i);
            values.push(inv_sqrt[i] * inv_sqrt[i]);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::from_raw(n, n, row_ptr, col_idx, values)
}

/// Feature-masking and edge-dropping probabilities of one augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationConfig {
    pub feature_mask_prob: f64,
    pub edge_drop_prob: f64,
}

impl AugmentationConfig {
    pub const IDENTITY: Self = Self {
        feature_mask_prob: 0.0,
        edge_drop_prob: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("feature_mask_prob", self.feature_mask_prob),
            ("edge_drop_prob", self.edge_drop_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name}={p} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One augmented view: the surviving edges plus a feature-column keep mask.
/// Node set and feature values are those of the source graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphView {
    pub adjacency: Adjacency,
    /// `true` keeps the column, `false` zeroes it for every node.
    pub feature_mask: Vec<bool>,
}

impl GraphView {
    pub fn masked_fraction(&self) -> f64 {
        if self.feature_mask.is_empty() {
            return 0.0;
        }
        self.feature_mask.iter().filter(|&&keep| !keep).count() as f64
            / self.feature_mask.len() as f64
    }
}

/// Draw an augmented view. A single column mask is drawn and shared by all
/// nodes; each undirected edge is dropped independently, both directions at
/// once. Pure in `(graph, cfg, seed)`.
pub fn augment(graph: &SparseGraph, cfg: &AugmentationConfig, seed: u64) -> GraphView {
    let mut rng = rng_from_seed(seed);
    let feature_mask = (0..graph.num_features())
        .map(|_| !rng.random_bool(cfg.feature_mask_prob))
        .collect();

    let adjacency = if cfg.edge_drop_prob == 0.0 {
        graph.adjacency.clone()
    } else {
        let n = graph.num_nodes();
        let mut rows = vec![Vec::new(); n];
        for (i, j) in graph.adjacency.undirected_edges() {
            if !rng.random_bool(cfg.edge_drop_prob) {
                rows[i].push(j);
                rows[j].push(i);
            }
        }
        Adjacency::from_rows(rows)
    };
    GraphView {
        adjacency,
        feature_mask,
    }
}
