//! Personalized-PageRank diffusion and the per-node local anchor sets it induces.
//!
//! The diffusion matrix is the truncated series `S = Σ_k t(1-t)^k T^k` with
//! `T = D^-1/2 A D^-1/2` built on the raw adjacency. Rows of `S` are computed in
//! blocks by repeated sparse products; since `T` is symmetric, the block of
//! rows for a set of query nodes equals `T^k` applied to their indicator
//! columns.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalized_transition, Adjacency};
use crate::sparse::CsrMatrix;

const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PprConfig {
    /// Teleport probability `t` in (0, 1).
    pub teleport: f64,
    /// Highest power of `T` in the truncated series.
    pub max_order: usize,
    /// Early stop once a whole term's max-norm falls below this.
    pub tol: f64,
}

impl Default for PprConfig {
    fn default() -> Self {
        Self {
            teleport: 0.15,
            max_order: 100,
            tol: 1e-9,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.teleport > 0.0 && self.teleport < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "teleport {} not in (0, 1)",
                self.teleport
            )));
        }
        if self.max_order == 0 {
            return Err(Error::InvalidParameter("max_order must be >= 1".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidParameter(format!("tol {} must be >= 0", self.tol)));
        }
        Ok(())
    }
}

/// Rows of `S` for `queries`, returned column-wise: column `b` is row
/// `queries[b]` of `S`.
fn diffuse_block(transition: &CsrMatrix, queries: &[usize], cfg: &PprConfig) -> Result<Array2<f64>> {
    let n = transition.n_rows();
    let mut walk = Array2::<f64>::zeros((n, queries.len()));
    for (b, &q) in queries.iter().enumerate() {
        walk[[q, b]] = 1.0;
    }
    let mut acc = walk.mapv(|v| v * cfg.teleport);
    let mut coeff = cfg.teleport;
    for _ in 1..=cfg.max_order {
        walk = transition.mul_dense(walk.view());
        coeff *= 1.0 - cfg.teleport;
        acc.scaled_add(coeff, &walk);
        let term_max = coeff * walk.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !term_max.is_finite() {
            return Err(Error::NonFinite("diffusion term diverged".into()));
        }
        if term_max < cfg.tol {
            break;
        }
    }
    Ok(acc)
}

/// Dense truncated PPR matrix. Memory is `O(N²)`; use [`ppr_topk`] beyond a
/// few thousand nodes.
pub fn ppr_diffuse(adjacency: &Adjacency, cfg: &PprConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let transition = normalized_transition(adjacency, false);
    let n = adjacency.num_nodes();
    let queries: Vec<usize> = (0..n).collect();
    let mut scores = Array2::zeros((n, n));
    for chunk in queries.chunks(BLOCK) {
        let block = diffuse_block(&transition, chunk, cfg)?;
        for (b, &q) in chunk.iter().enumerate() {
            scores.row_mut(q).assign(&block.column(b));
        }
    }
    Ok(scores)
}

/// Per-node local anchors: the highest-scoring other nodes of each PPR row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionTopK {
    /// `(anchor, score)` sorted by descending score, ties by ascending id.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub teleport: f64,
    pub truncation_order: usize,
}

impl DiffusionTopK {
    pub fn anchors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[node].iter().map(|&(a, _)| a)
    }

    pub fn anchor_lists(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(a, _)| a).collect())
            .collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.rows.len()
    }
}

fn by_score_then_id(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.cmp(&b.0))
}

fn topk_of_row(query: usize, row: ArrayView1<'_, f64>, k: usize) -> Vec<(usize, f64)> {
    let mut cands: Vec<(usize, f64)> = row
        .iter()
        .copied()
        .enumerate()
        .filter(|&(j, s)| j != query && s > 0.0)
        .collect();
    if cands.len() > k {
        cands.select_nth_unstable_by(k - 1, by_score_then_id);
        cands.truncate(k);
    }
    cands.sort_by(by_score_then_id);
    cands
}

/// Top-`k` off-diagonal entries of each score row. Zero scores never qualify,
/// so an isolated node gets an empty row.
pub fn topk_local_anchors(scores: &Array2<f64>, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be >= 1".into()));
    }
    Ok(scores
        .axis_iter(Axis(0))
        .enumerate()
        .map(|(q, row)| topk_of_row(q, row, k))
        .collect())
}

/// Blockwise PPR followed by top-`k` extraction, never holding more than one
/// block of `S` per worker.
pub fn ppr_topk(adjacency: &Adjacency, cfg: &PprConfig, k: usize) -> Result<DiffusionTopK> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::InvalidParameter("K must be >= 1".into()));
    }
    let transition = normalized_transition(adjacency, false);
    let n = adjacency.num_nodes();
    let queries: Vec<usize> = (0..n).collect();
    let blocks: Vec<Vec<Vec<(usize, f64)>>> = queries
        .par_chunks(BLOCK)
        .map(|chunk| {
            let block = diffuse_block(&transition, chunk, cfg)?;
            Ok(chunk
                .iter()
                .enumerate()
                .map(|(b, &q)| topk_of_row(q, block.column(b), k))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(DiffusionTopK {
        rows: blocks.into_iter().flatten().collect(),
        teleport: cfg.teleport,
        truncation_order: cfg.max_order,
    })
}

/// Mean same-label fraction among the first `k` anchors of every query, for
/// each requested `k`. Queries with no anchors are left out of the mean.
pub fn anchor_purity(anchors: &[Vec<usize>], labels: &[usize], ks: &[usize]) -> Vec<f64> {
    ks.iter()
        .map(|&k| {
            let (sum, count) = anchors
                .iter()
                .enumerate()
                .filter(|(_, row)| !row.is_empty() && k > 0)
                .fold((0.0, 0usize), |(sum, count), (q, row)| {
                    let first = &row[..row.len().min(k)];
                    let same = first.iter().filter(|&&a| labels[a] == labels[q]).count();
                    (sum + same as f64 / first.len() as f64, count + 1)
                });
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect()
}

/// Raw 1-hop neighbor lists, in ascending id order.
pub fn adjacency_anchors(adjacency: &Adjacency) -> Vec<Vec<usize>> {
    adjacency.rows()
}

/// `k` nearest other nodes by cosine similarity of their embeddings. Only an
/// analysis baseline; quadratic in the node count.
pub fn knn_anchors(embeddings: &Array2<f64>, k: usize) -> Vec<Vec<usize>> {
    let unit = crate::loss::row_normalize(embeddings);
    let sims = unit.dot(&unit.t());
    sims.axis_iter(Axis(0))
        .into_par_iter()
        .enumerate()
        .map(|(q, row)| {
            let mut cands: Vec<(usize, f64)> = row
                .iter()
                .copied()
                .enumerate()
                .filter(|&(j, _)| j != q)
                .collect();
            cands.sort_by(by_score_then_id);
            cands.truncate(k);
            cands.into_iter().map(|(j, _)| j).collect()
        })
        .collect()
}

/// Header describing what a cached top-K file was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKCacheKey {
    pub ppr: PprConfig,
    pub k: usize,
    pub graph_fingerprint: String,
}

impl TopKCacheKey {
    fn header(&self) -> String {
        format!(
            "# teleport={} max_order={} tol={} k={} graph={}",
            self.ppr.teleport, self.ppr.max_order, self.ppr.tol, self.k, self.graph_fingerprint
        )
    }
}

/// Write `ppr_topk.tsv`: a key header then `node<TAB>anchor<TAB>score` lines.
pub fn write_topk_cache(path: &Path, key: &TopKCacheKey, topk: &DiffusionTopK) -> Result<()> {
    let mut out = String::new();
    out.push_str(&key.header());
    out.push('\n');
    for (q, row) in topk.rows.iter().enumerate() {
        for &(a, s) in row {
            writeln!(out, "{q}\t{a}\t{s}").expect("write to string");
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Load a cached top-K file. Returns `Ok(None)` when the file is missing or
/// was computed under a different key.
pub fn read_topk_cache(path: &Path, key: &TopKCacheKey, num_nodes: usize) -> Result<Option<DiffusionTopK>> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut lines = BufReader::new(file).lines();
    match lines.next().transpose()? {
        Some(header) if header == key.header() => {}
        _ => return Ok(None),
    }
    let mut rows = vec![Vec::new(); num_nodes];
    for (i, line) in lines.enumerate() {
        let line = line?;
        let bad = |msg: &str| Error::Format {
            path: path.to_path_buf(),
            line: i + 2,
            msg: msg.to_string(),
        };
        let mut parts = line.split('\t');
        let q: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad node id"))?;
        let a: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad anchor id"))?;
        let s: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad score"))?;
        if q >= num_nodes || a >= num_nodes {
            return Err(bad("node id out of range"));
        }
        rows[q].push((a, s));
    }
    Ok(Some(DiffusionTopK {
        rows,
        teleport: key.ppr.teleport,
        truncation_order: key.ppr.max_order,
    }))
}
