//! Query–anchor similarity distributions, the KL objective between the online
//! and target distributions, and its gradient with respect to the predictor
//! output.
//!
//! Everything on the target side (both the target distribution and the anchor
//! embeddings inside the online logits) is a constant.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-length copy of each row; all-zero rows stay zero.
pub fn row_normalize(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

fn unit(v: ArrayView1<'_, f64>, node: usize, side: &'static str) -> Result<Array1<f64>> {
    let norm = v.dot(&v).sqrt();
    if norm > 0.0 && norm.is_finite() {
        Ok(&v / norm)
    } else {
        Err(Error::ZeroNorm { node, side })
    }
}

/// Numerically stable softmax: logits are shifted by their maximum.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// One query's distribution over its anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDistribution {
    pub probs: Vec<f64>,
    pub temperature: f64,
    pub anchor_ids: Vec<usize>,
}

fn check_row_inputs(rows: usize, query: usize, anchors: &[usize], tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("temperature {tau} must be positive")));
    }
    if anchors.is_empty() {
        return Err(Error::EmptyAnchors(query));
    }
    if let Some(&bad) = anchors.iter().chain(std::iter::once(&query)).find(|&&a| a >= rows) {
        return Err(Error::NodeOutOfRange { index: bad, num_nodes: rows });
    }
    Ok(())
}

fn distribution(
    query_vec: Array1<f64>,
    keys: &Array2<f64>,
    anchors: &[usize],
    tau: f64,
) -> Result<SimilarityDistribution> {
    let logits = anchors
        .iter()
        .map(|&a| Ok(query_vec.dot(&unit(keys.row(a), a, "target")?) / tau))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SimilarityDistribution {
        probs: softmax(&logits),
        temperature: tau,
        anchor_ids: anchors.to_vec(),
    })
}

/// Softmax over `cos(h^ξ_query, h^ξ_a) / τ` for each anchor `a`.
pub fn target_distribution(
    h_target: &Array2<f64>,
    query: usize,
    anchors: &[usize],
    tau: f64,
) -> Result<SimilarityDistribution> {
    check_row_inputs(h_target.nrows(), query, anchors, tau)?;
    let q = unit(h_target.row(query), query, "target")?;
    distribution(q, h_target, anchors, tau)
}

/// Softmax over `cos(z^θ_query, h^ξ_a) / τ` for each anchor `a`.
pub fn online_distribution(
    z_online: &Array2<f64>,
    h_target: &Array2<f64>,
    query: usize,
    anchors: &[usize],
    tau: f64,
) -> Result<SimilarityDistribution> {
    check_row_inputs(h_target.nrows().min(z_online.nrows()), query, anchors, tau)?;
    if z_online.ncols() != h_target.ncols() {
        return Err(Error::Shape(format!(
            "online width {} differs from target width {}",
            z_online.ncols(),
            h_target.ncols()
        )));
    }
    let q = unit(z_online.row(query), query, "online")?;
    distribution(q, h_target, anchors, tau)
}

/// `Σ_j p_j (ln p_j − ln q_j)`, with `0 ln 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pj, _)| pj > 0.0)
        .map(|(&pj, &qj)| pj * (pj.ln() - qj.ln()))
        .sum()
}

/// `Σ_i KL(p_i ‖ q_i)`; the online distribution is the first argument.
pub fn kl_loss(p_online: &[Vec<f64>], q_target: &[Vec<f64>]) -> Result<f64> {
    if p_online.len() != q_target.len() {
        return Err(Error::Shape(format!("{} online rows vs {} target rows", p_online.len(), q_target.len())));
    }
    p_online
        .iter()
        .zip(q_target)
        .map(|(p, q)| {
            if p.len() == q.len() {
                Ok(kl_divergence(p, q))
            } else {
                Err(Error::Shape(format!("row lengths {} and {}", p.len(), q.len())))
            }
        })
        .sum()
}

/// `glob + λ · local`.
pub fn combined_loss(glob: f64, local: f64, lambda: f64) -> f64 {
    glob + lambda * local
}

/// The four softmax temperatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Temperatures {
    pub online_global: f64,
    pub target_global: f64,
    pub online_local: f64,
    pub target_local: f64,
}

impl Default for Temperatures {
    fn default() -> Self {
        Self {
            online_global: 0.1,
            target_global: 0.01,
            online_local: 0.1,
            target_local: 1.0,
        }
    }
}

impl Temperatures {
    pub fn validate(&self) -> Result<()> {
        for t in [self.online_global, self.target_global, self.online_local, self.target_local] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("temperature {t} must be positive")));
            }
        }
        Ok(())
    }
}

/// Anchor sets for all queries.
#[derive(Debug, Clone, Copy)]
pub enum Anchors<'a> {
    /// Every node queries the same set.
    Shared(&'a [usize]),
    /// Row `i` lists the anchors of node `i`; may be empty.
    PerQuery(&'a [Vec<usize>]),
}

/// Value and gradient of one mean-reduced loss term.
#[derive(Debug, Clone)]
pub struct LossTerm {
    /// Mean KL over contributing queries (0 if none contribute).
    pub value: f64,
    /// `∂value/∂Z^θ`.
    pub grad_z: Array2<f64>,
    pub contributing: usize,
    /// Largest online logit seen, for diagnostics.
    pub max_logit: f64,
}

/// Gradient of `KL(softmax(l) ‖ q)` with respect to the logits `l`:
/// `p_k (ln p_k − ln q_k − KL)`.
pub fn kl_logit_gradient(p: &[f64], q: &[f64]) -> Vec<f64> {
    let kl = kl_divergence(p, q);
    p.iter()
        .zip(q)
        .map(|(&pk, &qk)| if pk > 0.0 { pk * (pk.ln() - qk.ln() - kl) } else { 0.0 })
        .collect()
}

struct RowResult {
    kl: f64,
    grad: Array1<f64>,
    max_logit: f64,
}

/// KL and `∂KL/∂z` for one query.
///
/// `z_unit` is the normalized query prediction with original norm `z_norm`;
/// `target_q` the normalized target query; `keys` the normalized target
/// anchors (zero rows have cosine 0 with everything).
fn row_term(
    z_unit: ArrayView1<'_, f64>,
    z_norm: f64,
    target_q: ArrayView1<'_, f64>,
    keys: &[ArrayView1<'_, f64>],
    tau_online: f64,
    tau_target: f64,
) -> RowResult {
    let cos_online: Vec<f64> = keys.iter().map(|k| z_unit.dot(k)).collect();
    let logits_online: Vec<f64> = cos_online.iter().map(|c| c / tau_online).collect();
    let logits_target: Vec<f64> = keys.iter().map(|k| target_q.dot(k) / tau_target).collect();
    let p = softmax(&logits_online);
    let q = softmax(&logits_target);
    let g = kl_logit_gradient(&p, &q);
    // ∂/∂z of cos(z, k) = (k̂ − cos · ẑ) / |z|
    let mut grad = Array1::zeros(z_unit.len());
    let mut radial = 0.0;
    for ((gk, key), c) in g.iter().zip(keys).zip(&cos_online) {
        grad.scaled_add(*gk, key);
        radial += gk * c;
    }
    grad.scaled_add(-radial, &z_unit);
    grad /= tau_online * z_norm;
    RowResult {
        kl: kl_divergence(&p, &q),
        grad,
        max_logit: logits_online.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Mean over queries of `KL(p^θ_i ‖ p^ξ_i)`, with its gradient in `Z^θ`.
///
/// Queries with an empty anchor row or an all-zero prediction row do not
/// contribute. A zero target row has cosine 0 with every vector.
pub fn relational_loss(
    z_online: &Array2<f64>,
    h_target: &Array2<f64>,
    anchors: Anchors<'_>,
    tau_online: f64,
    tau_target: f64,
) -> Result<LossTerm> {
    let n = z_online.nrows();
    if h_target.dim() != z_online.dim() {
        return Err(Error::Shape(format!(
            "online {:?} and target {:?} embeddings differ in shape",
            z_online.dim(),
            h_target.dim()
        )));
    }
    for t in [tau_online, tau_target] {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("temperature {t} must be positive")));
        }
    }
    let check = |ids: &[usize]| match ids.iter().find(|&&a| a >= n) {
        Some(&bad) => Err(Error::NodeOutOfRange { index: bad, num_nodes: n }),
        None => Ok(()),
    };
    match anchors {
        Anchors::Shared(ids) => check(ids)?,
        Anchors::PerQuery(rows) => {
            if rows.len() != n {
                return Err(Error::Shape(format!("{} anchor rows for {n} nodes", rows.len())));
            }
            rows.iter().try_for_each(|r| check(r))?;
        }
    }

    let norms: Vec<f64> = z_online.axis_iter(Axis(0)).map(|r| r.dot(&r).sqrt()).collect();
    let z_unit = row_normalize(z_online);
    let h_unit = row_normalize(h_target);

    let results: Vec<Option<RowResult>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ids: &[usize] = match anchors {
                Anchors::Shared(ids) => ids,
                Anchors::PerQuery(rows) => &rows[i],
            };
            if ids.is_empty() || norms[i] == 0.0 {
                return None;
            }
            let keys: Vec<_> = ids.iter().map(|&a| h_unit.row(a)).collect();
            Some(row_term(
                z_unit.row(i),
                norms[i],
                h_unit.row(i),
                &keys,
                tau_online,
                tau_target,
            ))
        })
        .collect();

    let contributing = results.iter().flatten().count();
    let mut grad_z = Array2::zeros(z_online.raw_dim());
    let mut total = 0.0;
    let mut max_logit = f64::NEG_INFINITY;
    if contributing > 0 {
        let scale = 1.0 / contributing as f64;
        for (i, r) in results.iter().enumerate() {
            if let Some(r) = r {
                total += r.kl;
                max_logit = max_logit.max(r.max_logit);
                grad_z.row_mut(i).scaled_add(scale, &r.grad);
            }
        }
        total *= scale;
    }
    Ok(LossTerm {
        value: total,
        grad_z,
        contributing,
        max_logit,
    })
}
