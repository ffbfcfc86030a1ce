//! End-to-end runs shared by the command-line tool and the integration tests:
//! train on a dataset, embed, and evaluate.

use std::io::Write;

use ndarray::Array2;

use crate::dataset::Dataset;
use crate::diffusion::DiffusionTopK;
use crate::encoder::EncoderState;
use crate::error::{Error, Result};
use crate::eval::{
    anchor_purity_table, default_buckets, edge_split_and_negatives, link_predict, linear_probe, misclassification_by_degree,
    BucketRate, EdgeSplit, LogisticConfig, MetricReport, NegativeMode, PurityRow, SplitSpec,
};
use crate::graph::SparseGraph;
use crate::rng::{derive_seed, Stream};
use crate::trainer::{embed_multiplex, multiplex_union, EpochLog, Prepared, TrainConfig, Trainer};

/// Untrained encoder with the initialization a run with `cfg` starts from.
pub fn initial_state(input_dim: usize, cfg: &TrainConfig) -> Result<EncoderState> {
    EncoderState::init(input_dim, &cfg.architecture, derive_seed(cfg.seed, Stream::Init, 0))
}

/// Train on a single graph. `topk` may supply precomputed local anchors.
pub fn train_graph(
    graph: &SparseGraph,
    cfg: &TrainConfig,
    topk: Option<&DiffusionTopK>,
    log: Option<&mut dyn Write>,
) -> Result<(EncoderState, Vec<EpochLog>)> {
    let prep = match topk {
        Some(t) => Prepared::from_topk(graph.adjacency(), Some(t), cfg)?,
        None => Prepared::new(graph.adjacency(), cfg)?,
    };
    let mut trainer = Trainer::new(graph.num_features(), prep, cfg.clone())?;
    let history = trainer.fit(|t| t.train_epoch(graph), log)?;
    Ok((trainer.state, history))
}

/// Train on every layer pair of a multiplex graph; anchors come from the
/// union of the layers.
pub fn train_multiplex(
    layers: &[SparseGraph],
    cfg: &TrainConfig,
    topk: Option<&DiffusionTopK>,
    log: Option<&mut dyn Write>,
) -> Result<(EncoderState, Vec<EpochLog>)> {
    let union = multiplex_union(layers)?;
    let prep = match topk {
        Some(t) => Prepared::from_topk(union.adjacency(), Some(t), cfg)?,
        None => Prepared::new(union.adjacency(), cfg)?,
    };
    let mut trainer = Trainer::new(union.num_features(), prep, cfg.clone())?;
    let history = trainer.fit(|t| t.train_epoch_multiplex(layers), log)?;
    Ok((trainer.state, history))
}

pub fn train_dataset(
    data: &Dataset,
    cfg: &TrainConfig,
    topk: Option<&DiffusionTopK>,
    log: Option<&mut dyn Write>,
) -> Result<(EncoderState, Vec<EpochLog>)> {
    if data.is_multiplex() {
        train_multiplex(&data.layers, cfg, topk, log)
    } else {
        train_graph(&data.graph, cfg, topk, log)
    }
}

/// Online-encoder embeddings of the un-augmented graph; mean-pooled over the
/// layers of a multiplex dataset.
pub fn embed_dataset(state: &EncoderState, data: &Dataset) -> Result<Array2<f64>> {
    if data.is_multiplex() {
        embed_multiplex(state, &data.layers)
    } else {
        state.embed(data.graph.features(), &data.graph.full_view())
    }
}

/// Split seeds of an evaluation: `root, root + 1, ..`.
pub fn eval_seeds(root: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| root.wrapping_add(i)).collect()
}

/// Linear probe over several node splits. Also returns the degree-bucket
/// table pooled over all test predictions.
pub fn classify(
    embeddings: &Array2<f64>,
    graph: &SparseGraph,
    seeds: &[u64],
    probe: &LogisticConfig,
    config_hash: &str,
) -> Result<(MetricReport, Vec<BucketRate>)> {
    let labels = graph
        .labels()
        .ok_or_else(|| Error::InvalidParameter("classification needs labels".into()))?;
    let mut acc = Vec::new();
    let mut macro_f1 = Vec::new();
    let mut micro_f1 = Vec::new();
    let mut nodes = Vec::new();
    let mut preds = Vec::new();
    for &s in seeds {
        let out = linear_probe(embeddings, labels, &SplitSpec::nodes(s), probe)?;
        acc.push(out.accuracy);
        macro_f1.push(out.macro_f1);
        micro_f1.push(out.micro_f1);
        nodes.extend(out.test_nodes);
        preds.extend(out.test_predictions);
    }
    let mut report = MetricReport::new("classify", config_hash, seeds);
    report.insert("accuracy", acc)?;
    report.insert("macro_f1", macro_f1)?;
    report.insert("micro_f1", micro_f1)?;
    let buckets = misclassification_by_degree(&nodes, &preds, labels, &graph.degrees(), &default_buckets())?;
    Ok((report, buckets))
}

/// Per-seed link-prediction results for trained and untrained encoders.
#[derive(Debug, Clone)]
pub struct LinkRun {
    pub split: EdgeSplit,
    pub auc: f64,
    pub ap: f64,
    pub untrained_auc: f64,
    pub untrained_ap: f64,
}

/// One link-prediction run: split edges, train on the train positives only,
/// and score with a logistic classifier. The untrained control embeds the
/// same training graph with the initial weights.
pub fn link_prediction_run(
    graph: &SparseGraph,
    cfg: &TrainConfig,
    mode: NegativeMode,
    split_seed: u64,
    probe: &LogisticConfig,
) -> Result<LinkRun> {
    let split = edge_split_and_negatives(graph.adjacency(), &SplitSpec::edges(split_seed), mode)?;
    let training_graph = graph.with_adjacency(split.train_adjacency(graph.num_nodes())?)?;
    let (state, _) = train_graph(&training_graph, cfg, None, None)?;
    let view = training_graph.full_view();
    let trained = link_predict(&state.embed(training_graph.features(), &view)?, &split, probe)?;
    let untrained_state = initial_state(graph.num_features(), cfg)?;
    let untrained = link_predict(&untrained_state.embed(training_graph.features(), &view)?, &split, probe)?;
    Ok(LinkRun {
        split,
        auc: trained.auc,
        ap: trained.ap,
        untrained_auc: untrained.auc,
        untrained_ap: untrained.ap,
    })
}

pub fn link_prediction(
    graph: &SparseGraph,
    cfg: &TrainConfig,
    mode: NegativeMode,
    seeds: &[u64],
    probe: &LogisticConfig,
) -> Result<(MetricReport, Vec<LinkRun>)> {
    let runs = seeds
        .iter()
        .map(|&s| link_prediction_run(graph, cfg, mode, s, probe))
        .collect::<Result<Vec<_>>>()?;
    let task = match mode {
        NegativeMode::Random => "linkpred-random",
        NegativeMode::Hard => "linkpred-hard",
    };
    let mut report = MetricReport::new(task, &cfg.hash(), seeds);
    report.insert("auc", runs.iter().map(|r| r.auc).collect())?;
    report.insert("ap", runs.iter().map(|r| r.ap).collect())?;
    report.insert("untrained_auc", runs.iter().map(|r| r.untrained_auc).collect())?;
    report.insert("untrained_ap", runs.iter().map(|r| r.untrained_ap).collect())?;
    Ok((report, runs))
}

/// Same-label ratios for K = 1..=10.
pub fn anchor_purity(
    graph: &SparseGraph,
    cfg: &TrainConfig,
    embeddings: Option<&Array2<f64>>,
) -> Result<Vec<PurityRow>> {
    let labels = graph
        .labels()
        .ok_or_else(|| Error::InvalidParameter("anchor purity needs labels".into()))?;
    let ks: Vec<usize> = (1..=10).collect();
    let topk = crate::diffusion::ppr_topk(graph.adjacency(), &cfg.ppr, 10)?;
    Ok(anchor_purity_table(graph.adjacency(), &topk, embeddings, labels, &ks))
}
