//! Link prediction: edge splits with matched negatives and a logistic
//! classifier over Hadamard products of endpoint embeddings.

use std::collections::{HashSet, VecDeque};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{auc_rank, average_precision};
use super::probe::{fit_logistic, LogisticConfig, Partition, SplitSpec};
use crate::error::{Error, Result};
use crate::graph::Adjacency;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeMode {
    /// Uniform over non-adjacent pairs.
    Random,
    /// Non-adjacent pairs at shortest-path distance 2 or 3.
    Hard,
}

/// Positive edges split three ways, each part with the same number of
/// negatives. Pairs are stored as `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub positives: Partition<(usize, usize)>,
    pub negatives: Partition<(usize, usize)>,
}

impl EdgeSplit {
    /// The graph seen during training: train positives only.
    pub fn train_adjacency(&self, num_nodes: usize) -> Result<Adjacency> {
        Adjacency::from_edges(num_nodes, &self.positives.train)
    }
}

/// Every unordered pair `(i, j)`, `i < j`, at shortest-path distance 2 or 3.
pub fn hard_negative_candidates(adjacency: &Adjacency) -> Vec<(usize, usize)> {
    let n = adjacency.num_nodes();
    let mut dist = vec![usize::MAX; n];
    let mut pairs = Vec::new();
    for source in 0..n {
        let mut touched = vec![source];
        let mut queue = VecDeque::from([source]);
        dist[source] = 0;
        while let Some(u) = queue.pop_front() {
            if dist[u] == 3 {
                continue;
            }
            for &v in adjacency.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    touched.push(v);
                    queue.push_back(v);
                }
            }
        }
        let mut found: Vec<usize> = touched.iter().copied().filter(|&v| v > source && dist[v] >= 2).collect();
        found.sort_unstable();
        pairs.extend(found.into_iter().map(|v| (source, v)));
        for v in touched {
            dist[v] = usize::MAX;
        }
    }
    pairs
}

fn random_negatives(adjacency: &Adjacency, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let n = adjacency.num_nodes();
    let available = (n * n.saturating_sub(1) / 2).saturating_sub(adjacency.num_edges());
    if available < count {
        return Err(Error::InsufficientNegatives { found: available, needed: count });
    }
    let mut rng = stream_rng(seed, Stream::Negatives, 0);
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let pair = (a.min(b), a.max(b));
        if a != b && !adjacency.has_edge(a, b) && chosen.insert(pair) {
            out.push(pair);
        }
    }
    Ok(out)
}

fn hard_negatives(adjacency: &Adjacency, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let mut candidates = hard_negative_candidates(adjacency);
    if candidates.len() < count {
        return Err(Error::InsufficientNegatives { found: candidates.len(), needed: count });
    }
    candidates.shuffle(&mut stream_rng(seed, Stream::Negatives, 1));
    candidates.truncate(count);
    Ok(candidates)
}

/// Split the edges of `adjacency` and draw one negative per positive, all
/// negatives distinct and defined against the full graph.
pub fn edge_split_and_negatives(adjacency: &Adjacency, split: &SplitSpec, mode: NegativeMode) -> Result<EdgeSplit> {
    let positives = split.partition(adjacency.undirected_edges().collect())?;
    let total = adjacency.num_edges();
    let negs = match mode {
        NegativeMode::Random => random_negatives(adjacency, total, split.seed)?,
        NegativeMode::Hard => hard_negatives(adjacency, total, split.seed)?,
    };
    let (n_train, n_val) = (positives.train.len(), positives.val.len());
    let mut negs = negs.into_iter();
    let negatives = Partition {
        train: negs.by_ref().take(n_train).collect(),
        val: negs.by_ref().take(n_val).collect(),
        test: negs.collect(),
    };
    Ok(EdgeSplit { positives, negatives })
}

/// Elementwise product of the endpoint embeddings of each pair.
pub fn hadamard_features(embeddings: &Array2<f64>, pairs: &[(usize, usize)]) -> Array2<f64> {
    let mut out = Array2::zeros((pairs.len(), embeddings.ncols()));
    for (mut row, &(a, b)) in out.rows_mut().into_iter().zip(pairs) {
        row.assign(&(&embeddings.row(a) * &embeddings.row(b)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub auc: f64,
    pub ap: f64,
    pub val_auc: f64,
}

fn labelled(embeddings: &Array2<f64>, pos: &[(usize, usize)], neg: &[(usize, usize)]) -> (Array2<f64>, Vec<usize>) {
    let pairs: Vec<_> = pos.iter().chain(neg).copied().collect();
    let y = std::iter::repeat_n(1, pos.len()).chain(std::iter::repeat_n(0, neg.len())).collect();
    (hadamard_features(embeddings, &pairs), y)
}

fn split_scores(scores: &[f64], n_pos: usize) -> (&[f64], &[f64]) {
    scores.split_at(n_pos)
}

/// Train a logistic classifier on the train pairs, select by validation AUC,
/// and report test AUC and AP.
pub fn link_predict(embeddings: &Array2<f64>, split: &EdgeSplit, cfg: &LogisticConfig) -> Result<LinkOutcome> {
    let (p, n) = (&split.positives, &split.negatives);
    if p.test.is_empty() || n.test.is_empty() {
        return Err(Error::Degenerate(format!(
            "test partition has {} positives and {} negatives",
            p.test.len(),
            n.test.len()
        )));
    }
    let (x_train, y_train) = labelled(embeddings, &p.train, &n.train);
    if !(y_train.contains(&0) && y_train.contains(&1)) {
        return Err(Error::Degenerate("training partition holds a single class".into()));
    }
    let (x_val, _) = labelled(embeddings, &p.val, &n.val);
    let (x_test, _) = labelled(embeddings, &p.test, &n.test);
    let val_auc = |m: &super::probe::LogisticModel| {
        let s = m.margin(&x_val);
        let (a, b) = split_scores(&s, p.val.len());
        auc_rank(a, b).unwrap_or(0.0)
    };
    let model = fit_logistic(&x_train, &y_train, 2, cfg, val_auc)?;
    let scores = model.margin(&x_test);
    let (pos, neg) = split_scores(&scores, p.test.len());
    Ok(LinkOutcome {
        auc: auc_rank(pos, neg)?,
        ap: average_precision(pos, neg)?,
        val_auc: val_auc(&model),
    })
}

/// Independent check of a hard-negative set: BFS from each pair's first node
/// on the full graph, returning the pairs not at distance 2 or 3.
pub fn verify_hard_negatives(adjacency: &Adjacency, pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    pairs
        .iter()
        .copied()
        .filter(|&(a, b)| {
            let d = shortest_path(adjacency, a, b);
            !matches!(d, Some(2) | Some(3))
        })
        .collect()
}

/// Hop distance between two nodes, if connected.
pub fn shortest_path(adjacency: &Adjacency, from: usize, to: usize) -> Option<usize> {
    let mut dist = vec![usize::MAX; adjacency.num_nodes()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            return Some(dist[u]);
        }
        for &v in adjacency.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    None
}
