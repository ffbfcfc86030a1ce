use std::collections::BTreeMap;

use rgrl::dataset::{load_dataset, write_dataset};
use rgrl::encoder::Architecture;
use rgrl::eval::LogisticConfig;
use rgrl::graph::Adjacency;
use rgrl::pipeline;
use rgrl::synthetic::{two_block_sbm, SbmSpec};
use rgrl::trainer::TrainConfig;

fn small_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        k_global: 32,
        architecture: Architecture { encoder_dims: vec![16, 8], predictor_hidden: 16, init_slope: 0.25 },
        ..TrainConfig::default()
    }
}

#[test]
fn fixture_round_trips_and_trains() {
    let g = two_block_sbm(&SbmSpec::default(), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "sbm", &g, &BTreeMap::new()).unwrap();
    let data = load_dataset(dir.path()).unwrap();
    assert!(!data.is_multiplex());
    assert_eq!(data.graph.adjacency(), g.adjacency());
    assert_eq!(data.graph.labels(), g.labels());

    let cfg = small_config(30);
    let mut log = Vec::new();
    let (state, history) = pipeline::train_dataset(&data, &cfg, None, Some(&mut log)).unwrap();
    assert_eq!(history.len(), 30);
    assert_eq!(String::from_utf8(log).unwrap().lines().count(), 30);
    let emb = pipeline::embed_dataset(&state, &data).unwrap();
    let seeds = pipeline::eval_seeds(0, 3);
    let (report, buckets) = pipeline::classify(&emb, &data.graph, &seeds, &LogisticConfig::default(), "x").unwrap();
    // two planted blocks with feature signal: far above the 0.5 chance level
    assert!(report.metrics["accuracy"].mean > 0.8, "{:?}", report.metrics);
    // isolated nodes fall outside every bucket
    let pooled: usize = buckets.iter().map(|b| b.nodes).sum();
    let isolated = data.graph.degrees().0.iter().filter(|&&d| d == 0).count();
    assert!(pooled <= 3 * 80 && pooled + 3 * isolated >= 3 * 80, "{pooled} bucketed, {isolated} isolated");
}

#[test]
fn multiplex_dataset_trains_on_union_anchors() {
    let g = two_block_sbm(&SbmSpec::default(), 5).unwrap();
    let edges: Vec<_> = g.adjacency().undirected_edges().collect();
    let mut layers = BTreeMap::new();
    layers.insert("even".to_string(), Adjacency::from_edges(100, &edges.iter().copied().step_by(2).collect::<Vec<_>>()).unwrap());
    layers.insert("odd".to_string(), Adjacency::from_edges(100, &edges.iter().copied().skip(1).step_by(2).collect::<Vec<_>>()).unwrap());
    layers.insert("all".to_string(), g.adjacency().clone());
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "sbm-mx", &g, &layers).unwrap();
    let data = load_dataset(dir.path()).unwrap();
    assert!(data.is_multiplex());
    assert_eq!(data.layers.len(), 3);
    assert_eq!(data.graph.num_edges(), g.num_edges());

    let (state, history) = pipeline::train_dataset(&data, &small_config(5), None, None).unwrap();
    assert!(history.iter().all(|h| h.loss_total.is_finite()));
    let emb = pipeline::embed_dataset(&state, &data).unwrap();
    assert_eq!(emb.dim(), (100, 8));
}

#[test]
fn link_prediction_reports_both_encoders() {
    let g = two_block_sbm(&SbmSpec::default(), 7).unwrap();
    let (report, runs) = pipeline::link_prediction(
        &g,
        &small_config(10),
        rgrl::eval::NegativeMode::Random,
        &[0, 1],
        &LogisticConfig::default(),
    )
    .unwrap();
    assert_eq!(report.task, "linkpred-random");
    assert_eq!(runs.len(), 2);
    for key in ["auc", "ap", "untrained_auc", "untrained_ap"] {
        assert_eq!(report.per_seed[key].len(), 2);
    }
    assert_ne!(runs[0].split, runs[1].split);
}
