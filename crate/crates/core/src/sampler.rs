//! Inverse-degree weighted sampling of global anchor nodes.
//!
//! Node `j` gets weight `α^ln(deg_j + 1) + β`; the weights are normalized into
//! a categorical distribution and anchor sets are drawn from it without
//! replacement.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::DegreeVector;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorDistribution {
    weights: Vec<f64>,
    probs: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl AnchorDistribution {
    pub fn new(degrees: &DegreeVector, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha {alpha} must lie in (0, 1) so that low-degree nodes are favoured"
            )));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta {beta} must be >= 0")));
        }
        if degrees.is_empty() {
            return Err(Error::InvalidParameter("anchor distribution over zero nodes".into()));
        }
        let weights: Vec<f64> = degrees
            .0
            .iter()
            .map(|&d| alpha.powf((d as f64 + 1.0).ln()) + beta)
            .collect();
        let total: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            weights,
            probs,
            alpha,
            beta,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Draw `k` distinct nodes. Distributed as `k` successive categorical draws
    /// that renormalize over the nodes not yet chosen; implemented with
    /// exponential keys `ln(u) / p_j`, keeping the `k` largest. Returned in
    /// draw order.
    pub fn sample(&self, k: usize, seed: u64) -> Result<Vec<usize>> {
        let n = self.len();
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "cannot draw {k} distinct anchors from {n} nodes"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let mut keys: Vec<(f64, usize)> = self
            .probs
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                // u in (0, 1]
                let u: f64 = 1.0 - rng.random::<f64>();
                if p > 0.0 {
                    (u.ln() / p, j)
                } else {
                    (f64::NEG_INFINITY, j)
                }
            })
            .collect();
        let by_key = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if k < n {
            keys.select_nth_unstable_by(k - 1, by_key);
            keys.truncate(k);
        }
        keys.sort_by(by_key);
        Ok(keys.into_iter().map(|(_, j)| j).collect())
    }
}

/// Convenience wrapper matching the pipeline's naming.
pub fn sample_global_anchors(dist: &AnchorDistribution, k: usize, seed: u64) -> Result<Vec<usize>> {
    dist.sample(k, seed)
}
