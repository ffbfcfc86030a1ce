//! `rgrl`: validate datasets, precompute anchors, train encoders and evaluate
//! embeddings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use rgrl::dataset::{import_cora, load_dataset, validate_dataset, write_dataset, Dataset};
use rgrl::diffusion::{ppr_topk, read_topk_cache, write_topk_cache, DiffusionTopK, TopKCacheKey};
use rgrl::encoder::EncoderState;
use rgrl::eval::{bucket_table_tsv, purity_table_tsv, LogisticConfig, MetricReport, NegativeMode};
use rgrl::pipeline;
use rgrl::sampler::AnchorDistribution;
use rgrl::synthetic::{two_block_sbm, SbmSpec};
use rgrl::trainer::{multiplex_union, TrainConfig};

#[derive(Parser)]
#[command(name = "rgrl", version, about = "Relation-preserving self-supervised node embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset directory and print its counts.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Compute the diffusion top-K cache and anchor sampling summary.
    Precompute {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train an encoder; writes a checkpoint, log and manifest into `--out`.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a trained checkpoint; writes reports into `--out`.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        task: Task,
        /// Number of evaluation splits.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// Root seed of the splits; defaults to the run's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Checkpoint to evaluate; defaults to `<out>/model.ckpt`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Training config for link prediction retraining; defaults to the
        /// one stored in the checkpoint.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the built-in two-community synthetic dataset.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Convert `cora.content` and `cora.cites` into a dataset directory.
    ImportCora {
        #[arg(long)]
        content: PathBuf,
        #[arg(long)]
        cites: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a config file holding every default.
    InitConfig {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Classify,
    LinkpredRandom,
    LinkpredHard,
    DegreeAnalysis,
    AnchorPurity,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Classify => "classify",
            Task::LinkpredRandom => "linkpred-random",
            Task::LinkpredHard => "linkpred-hard",
            Task::DegreeAnalysis => "degree-analysis",
            Task::AnchorPurity => "anchor-purity",
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RunManifest {
    dataset: PathBuf,
    config: Option<PathBuf>,
    out: PathBuf,
    config_hash: String,
    version: String,
    /// Stage name to `[start, end]` unix seconds.
    stages: BTreeMap<String, [u64; 2]>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn version() -> String {
    format!("v{}-{}", env!("CARGO_PKG_VERSION"), option_env!("RGRL_GIT_DESCRIBE").unwrap_or("release"))
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn record_stage(out: &Path, manifest: &mut RunManifest, stage: &str, start: u64) -> Result<()> {
    manifest.stages.insert(stage.to_string(), [start, now()]);
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(manifest)? + "\n")?;
    Ok(())
}

fn read_manifest(out: &Path) -> RunManifest {
    fs::read_to_string(out.join("manifest.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default()
}

/// Graph whose structure drives anchors: the union for multiplex data.
fn anchor_graph(data: &Dataset) -> Result<rgrl::graph::SparseGraph> {
    Ok(if data.is_multiplex() {
        multiplex_union(&data.layers)?
    } else {
        data.graph.clone()
    })
}

/// Load the top-K cache from `out`, recomputing and rewriting it if missing or
/// computed under different settings.
fn topk_cached(data: &Dataset, cfg: &TrainConfig, out: &Path) -> Result<Option<DiffusionTopK>> {
    if cfg.k_local == 0 {
        return Ok(None);
    }
    let graph = anchor_graph(data)?;
    let key = TopKCacheKey {
        ppr: cfg.ppr,
        k: cfg.k_local,
        graph_fingerprint: graph.adjacency().fingerprint(),
    };
    let path = out.join("ppr_topk.tsv");
    if let Some(t) = read_topk_cache(&path, &key, graph.num_nodes())? {
        return Ok(Some(t));
    }
    let topk = ppr_topk(graph.adjacency(), &cfg.ppr, cfg.k_local)?;
    write_topk_cache(&path, &key, &topk)?;
    Ok(Some(topk))
}

fn cmd_validate(dataset: &Path) -> Result<ExitCode> {
    let (meta, problems) = validate_dataset(dataset);
    for p in &problems {
        eprintln!("error: {p}");
    }
    if !problems.is_empty() {
        return Ok(ExitCode::FAILURE);
    }
    let data = load_dataset(dataset)?;
    let meta = meta.expect("meta parsed");
    println!("name\t{}", meta.name);
    println!("nodes\t{}", data.graph.num_nodes());
    println!("edges\t{}", data.graph.num_edges());
    println!("features\t{}", data.graph.num_features());
    println!("classes\t{}", meta.num_classes);
    if data.is_multiplex() {
        for (name, layer) in meta.layers.iter().zip(&data.layers) {
            println!("layer {name}\t{} edges", layer.num_edges());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_precompute(dataset: &Path, config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<ExitCode> {
    let cfg = load_config(config, seed)?;
    let data = load_dataset(dataset)?;
    fs::create_dir_all(out)?;
    topk_cached(&data, &cfg, out)?;
    let graph = anchor_graph(&data)?;
    let degrees = graph.degrees();
    let dist = AnchorDistribution::new(&degrees, cfg.alpha, cfg.beta)?;
    let mut summary = String::from("node\tdegree\tweight\tprobability\n");
    for (j, (w, p)) in dist.weights().iter().zip(dist.probs()).enumerate() {
        summary.push_str(&format!("{j}\t{}\t{w}\t{p}\n", degrees.0[j]));
    }
    fs::write(out.join("anchor_distribution.tsv"), summary)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(dataset: &Path, config: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<ExitCode> {
    let start = now();
    let cfg = load_config(config, seed)?;
    let data = load_dataset(dataset)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.json"), serde_json::to_string_pretty(&cfg)? + "\n")?;
    let mut manifest = RunManifest {
        dataset: dataset.to_path_buf(),
        config: config.map(Path::to_path_buf),
        out: out.to_path_buf(),
        config_hash: cfg.hash(),
        version: version(),
        stages: BTreeMap::new(),
    };
    let topk = topk_cached(&data, &cfg, out)?;
    record_stage(out, &mut manifest, "precompute", start)?;

    let start = now();
    let mut log = std::io::BufWriter::new(fs::File::create(out.join("train_log.jsonl"))?);
    let (state, history) = pipeline::train_dataset(&data, &cfg, topk.as_ref(), Some(&mut log))?;
    drop(log);
    let header = serde_json::json!({
        "config_hash": cfg.hash(),
        "config": cfg,
        "dataset": data.meta.name,
    });
    state.save(&out.join("model.ckpt"), header)?;
    record_stage(out, &mut manifest, "train", start)?;
    if let Some(last) = history.last() {
        eprintln!("trained {} epochs, final loss {:.6}", history.len(), last.loss_total);
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    dataset: &Path,
    out: &Path,
    task: Task,
    seeds: usize,
    seed: Option<u64>,
    checkpoint: Option<&Path>,
    config: Option<&Path>,
) -> Result<ExitCode> {
    let start = now();
    let data = load_dataset(dataset)?;
    let ckpt = checkpoint.map_or_else(|| out.join("model.ckpt"), Path::to_path_buf);
    let (state, header) = EncoderState::load(&ckpt).with_context(|| format!("loading {}", ckpt.display()))?;
    let mut cfg: TrainConfig = match config {
        Some(_) => load_config(config, None)?,
        None => serde_json::from_value(header["config"].clone()).context("checkpoint header holds no config")?,
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let hash = cfg.hash();
    let seed_list = pipeline::eval_seeds(cfg.seed, seeds);
    let probe = LogisticConfig::default();
    fs::create_dir_all(out)?;

    let report: MetricReport = match task {
        Task::Classify | Task::DegreeAnalysis => {
            let emb = pipeline::embed_dataset(&state, &data)?;
            let (mut report, buckets) = pipeline::classify(&emb, &data.graph, &seed_list, &probe, &hash)?;
            if matches!(task, Task::DegreeAnalysis) {
                report.task = task.name().to_string();
                fs::write(out.join("degree_buckets.tsv"), bucket_table_tsv(&buckets))?;
                report.per_degree_buckets = Some(buckets);
            }
            report
        }
        Task::LinkpredRandom | Task::LinkpredHard => {
            if data.is_multiplex() {
                bail!("link prediction is defined for single-layer datasets");
            }
            let mode = if matches!(task, Task::LinkpredRandom) { NegativeMode::Random } else { NegativeMode::Hard };
            pipeline::link_prediction(&data.graph, &cfg, mode, &seed_list, &probe)?.0
        }
        Task::AnchorPurity => {
            let emb = pipeline::embed_dataset(&state, &data)?;
            let graph = anchor_graph(&data)?;
            let rows = pipeline::anchor_purity(&graph, &cfg, Some(&emb))?;
            fs::write(out.join("anchor_purity.tsv"), purity_table_tsv(&rows))?;
            let mut report = MetricReport::new(task.name(), &hash, &[]);
            report.anchor_purity = Some(rows);
            report
        }
    };
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    for (name, s) in &report.metrics {
        println!("{name}\t{:.4} ({:.4})", s.mean, s.std);
    }
    let mut manifest = read_manifest(out);
    if manifest.version.is_empty() {
        manifest.dataset = dataset.to_path_buf();
        manifest.out = out.to_path_buf();
        manifest.config_hash = hash;
        manifest.version = version();
    }
    record_stage(out, &mut manifest, &format!("eval:{}", task.name()), start)?;
    Ok(ExitCode::SUCCESS)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("RGRL_THREADS") {
        let n: usize = v.parse().with_context(|| format!("RGRL_THREADS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Validate { dataset } => cmd_validate(&dataset),
        Command::Precompute { dataset, config, out, seed } => cmd_precompute(&dataset, config.as_deref(), &out, seed),
        Command::Train { dataset, config, out, seed } => cmd_train(&dataset, config.as_deref(), &out, seed),
        Command::Eval { dataset, out, task, seeds, seed, checkpoint, config } => {
            cmd_eval(&dataset, &out, task, seeds, seed, checkpoint.as_deref(), config.as_deref())
        }
        Command::Fixture { out, seed } => {
            let g = two_block_sbm(&SbmSpec::default(), seed)?;
            write_dataset(&out, "sbm-2block", &g, &BTreeMap::new())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ImportCora { content, cites, out } => {
            let g = import_cora(&content, &cites)?;
            write_dataset(&out, "cora", &g, &BTreeMap::new())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::InitConfig { out } => {
            fs::write(&out, serde_json::to_string_pretty(&TrainConfig::default())? + "\n")?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
