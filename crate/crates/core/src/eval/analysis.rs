//! Degree-bucketed error rates and same-label ratios of anchor sets.

use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::diffusion::{adjacency_anchors, anchor_purity, knn_anchors, DiffusionTopK};
use crate::error::{Error, Result};
use crate::graph::{Adjacency, DegreeVector};

/// Inclusive degree range; `hi = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeBucket {
    pub lo: usize,
    pub hi: Option<usize>,
}

impl DegreeBucket {
    pub fn contains(&self, d: usize) -> bool {
        d >= self.lo && self.hi.is_none_or(|h| d <= h)
    }

    pub fn label(&self) -> String {
        match self.hi {
            Some(h) => format!("{}-{}", self.lo, h),
            None => format!("{}+", self.lo),
        }
    }
}

/// `[1,2], [3,4], [5,8], [9,16], [17,∞)`.
pub fn default_buckets() -> Vec<DegreeBucket> {
    [(1, Some(2)), (3, Some(4)), (5, Some(8)), (9, Some(16)), (17, None)]
        .into_iter()
        .map(|(lo, hi)| DegreeBucket { lo, hi })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketRate {
    pub bucket: DegreeBucket,
    pub nodes: usize,
    pub errors: usize,
    pub rate: f64,
}

/// Misclassification rate of the evaluated `nodes` grouped by degree. Buckets
/// with no evaluated node are left out of the table.
pub fn misclassification_by_degree(
    nodes: &[usize],
    predictions: &[usize],
    labels: &[usize],
    degrees: &DegreeVector,
    buckets: &[DegreeBucket],
) -> Result<Vec<BucketRate>> {
    if nodes.len() != predictions.len() {
        return Err(Error::Shape(format!("{} nodes, {} predictions", nodes.len(), predictions.len())));
    }
    let mut rows: Vec<BucketRate> = buckets
        .iter()
        .map(|&bucket| BucketRate { bucket, nodes: 0, errors: 0, rate: 0.0 })
        .collect();
    for (&v, &p) in nodes.iter().zip(predictions) {
        if v >= labels.len() || v >= degrees.len() {
            return Err(Error::NodeOutOfRange { index: v, num_nodes: labels.len().min(degrees.len()) });
        }
        if let Some(row) = rows.iter_mut().find(|r| r.bucket.contains(degrees.0[v])) {
            row.nodes += 1;
            row.errors += usize::from(p != labels[v]);
        }
    }
    rows.retain(|r| r.nodes > 0);
    for r in &mut rows {
        r.rate = r.errors as f64 / r.nodes as f64;
    }
    Ok(rows)
}

pub fn bucket_table_tsv(rows: &[BucketRate]) -> String {
    let mut out = String::from("degree\tnodes\terrors\tmisclassification_rate\n");
    for r in rows {
        writeln!(out, "{}\t{}\t{}\t{}", r.bucket.label(), r.nodes, r.errors, r.rate).expect("write to string");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityRow {
    pub k: usize,
    pub adjacency_ratio: f64,
    pub diffusion_ratio: f64,
    pub knn_ratio: Option<f64>,
}

/// Same-label ratio of the first `k` anchors for raw neighbors, diffusion
/// top-K and (when embeddings are given) cosine k-nearest neighbors.
pub fn anchor_purity_table(
    adjacency: &Adjacency,
    diffusion: &DiffusionTopK,
    embeddings: Option<&Array2<f64>>,
    labels: &[usize],
    ks: &[usize],
) -> Vec<PurityRow> {
    let adj = anchor_purity(&adjacency_anchors(adjacency), labels, ks);
    let diff = anchor_purity(&diffusion.anchor_lists(), labels, ks);
    let knn = embeddings.map(|e| {
        let kmax = ks.iter().copied().max().unwrap_or(0);
        anchor_purity(&knn_anchors(e, kmax), labels, ks)
    });
    ks.iter()
        .enumerate()
        .map(|(i, &k)| PurityRow {
            k,
            adjacency_ratio: adj[i],
            diffusion_ratio: diff[i],
            knn_ratio: knn.as_ref().map(|v| v[i]),
        })
        .collect()
}

pub fn purity_table_tsv(rows: &[PurityRow]) -> String {
    let mut out = String::from("K\tadjacency_ratio\tdiffusion_ratio\tknn_ratio\n");
    for r in rows {
        let knn = r.knn_ratio.map_or_else(|| "NA".to_string(), |v| v.to_string());
        writeln!(out, "{}\t{}\t{}\t{}", r.k, r.adjacency_ratio, r.diffusion_ratio, knn).expect("write to string");
    }
    out
}
