//! Downstream evaluation of frozen embeddings.

pub mod analysis;
pub mod linkpred;
pub mod metrics;
pub mod probe;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analysis::{
    anchor_purity_table, bucket_table_tsv, default_buckets, misclassification_by_degree, purity_table_tsv, BucketRate,
    DegreeBucket, PurityRow,
};
pub use linkpred::{
    edge_split_and_negatives, hard_negative_candidates, link_predict, verify_hard_negatives, EdgeSplit, LinkOutcome,
    NegativeMode,
};
pub use probe::{linear_probe, LogisticConfig, ProbeOutcome, SplitSpec};

/// Mean and population standard deviation across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// Results of one evaluation task, serialized as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: String,
    /// Per-metric summary over seeds.
    pub metrics: BTreeMap<String, Summary>,
    /// Per-metric values, one per seed, in seed order.
    pub per_seed: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_degree_buckets: Option<Vec<BucketRate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_purity: Option<Vec<PurityRow>>,
    pub config_hash: String,
    pub seeds: Vec<u64>,
}

impl MetricReport {
    pub fn new(task: &str, config_hash: &str, seeds: &[u64]) -> Self {
        Self {
            task: task.to_string(),
            metrics: BTreeMap::new(),
            per_seed: BTreeMap::new(),
            per_degree_buckets: None,
            anchor_purity: None,
            config_hash: config_hash.to_string(),
            seeds: seeds.to_vec(),
        }
    }

    /// Record one metric's per-seed values. Values must lie in [0, 1].
    pub fn insert(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("metric {name} = {bad} outside [0, 1]")));
        }
        self.metrics.insert(name.to_string(), Summary::of(&values));
        self.per_seed.insert(name.to_string(), values);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips() {
        let mut r = MetricReport::new("classify", "abc", &[0, 1]);
        r.insert("accuracy", vec![0.8, 0.9]).unwrap();
        assert!((r.metrics["accuracy"].mean - 0.85).abs() < 1e-15);
        assert!((r.metrics["accuracy"].std - 0.05).abs() < 1e-15);
        assert!(r.insert("auc", vec![1.2]).is_err());
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<MetricReport>(&json).unwrap(), r);
    }
}
