//! Training loop: two views, online/target forward passes, global + local
//! relational loss, an Adam step on the online network and an EMA step on the
//! target encoder. Also the multiplex variant, where graph layers replace
//! augmented views.

use std::io::Write;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffusion::{ppr_topk, DiffusionTopK, PprConfig};
use crate::encoder::{Architecture, Encoder, EncoderState, Parameters};
use crate::error::{Error, Result};
use crate::graph::{augment, Adjacency, AugmentationConfig, FeatureMatrix, GraphView, SparseGraph};
use crate::loss::{relational_loss, Anchors, Temperatures};
use crate::rng::{derive_seed, Stream};
use crate::sampler::AnchorDistribution;

/// Every hyperparameter of a run. All fields are required in the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub ema_decay: f64,
    pub lambda: f64,
    pub temperatures: Temperatures,
    /// Global anchors per epoch; capped at the node count.
    pub k_global: usize,
    pub k_local: usize,
    pub alpha: f64,
    pub beta: f64,
    pub ppr: PprConfig,
    pub aug1: AugmentationConfig,
    pub aug2: AugmentationConfig,
    pub architecture: Architecture,
    /// Also train with the views swapped and sum both directions.
    pub symmetric: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 5e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            ema_decay: 0.99,
            lambda: 1.0,
            temperatures: Temperatures::default(),
            k_global: 512,
            k_local: 4,
            alpha: 0.5,
            beta: 0.1,
            ppr: PprConfig::default(),
            aug1: AugmentationConfig {
                feature_mask_prob: 0.3,
                edge_drop_prob: 0.2,
            },
            aug2: AugmentationConfig {
                feature_mask_prob: 0.4,
                edge_drop_prob: 0.4,
            },
            architecture: Architecture::default(),
            symmetric: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.ema_decay) {
            return bad(format!("ema_decay {} must lie in [0, 1]", self.ema_decay));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {} must be >= 0", self.lambda));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} {b} must lie in [0, 1)"));
            }
        }
        if !(self.adam_eps > 0.0) {
            return bad(format!("adam_eps {} must be positive", self.adam_eps));
        }
        if self.k_global == 0 {
            return bad("k_global must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) || !(self.beta >= 0.0) {
            return bad(format!("alpha {} / beta {} out of range", self.alpha, self.beta));
        }
        self.temperatures.validate()?;
        self.ppr.validate()?;
        self.aug1.validate()?;
        self.aug2.validate()?;
        self.architecture.validate()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Adam with bias correction. Moments are kept per tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &impl Parameters, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            beta1,
            beta2,
            eps,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn step(&mut self, params: &mut impl Parameters, grads: &impl Parameters, lr: f64) -> Result<()> {
        let g = grads.tensors();
        if g.len() != self.m.len() || g.iter().zip(&self.m).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::Shape("gradient layout differs from optimizer state".into()));
        }
        if let Some((i, _)) = g.iter().enumerate().find(|(_, t)| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite(format!("gradient tensor {i}")));
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, g), m), v) in params.tensors_mut().into_iter().zip(g).zip(&mut self.m).zip(&mut self.v) {
            for k in 0..p.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// `ξ ← γ ξ + (1 − γ) θ`, elementwise.
pub fn ema_update(online: &Encoder, target: &mut Encoder, gamma: f64) -> Result<()> {
    if !online.same_shape(target) {
        return Err(Error::Shape("EMA needs identical online and target shapes".into()));
    }
    for (xi, theta) in target.tensors_mut().into_iter().zip(online.tensors()) {
        for (x, t) in xi.iter_mut().zip(theta) {
            *x = gamma * *x + (1.0 - gamma) * t;
        }
    }
    Ok(())
}

/// Structures fixed for the whole run: the anchor sampling distribution and
/// each node's local anchors.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub anchor_dist: AnchorDistribution,
    pub local_anchors: Vec<Vec<usize>>,
}

impl Prepared {
    pub fn new(adjacency: &Adjacency, cfg: &TrainConfig) -> Result<Self> {
        let topk = if cfg.k_local == 0 {
            None
        } else {
            Some(ppr_topk(adjacency, &cfg.ppr, cfg.k_local)?)
        };
        Self::from_topk(adjacency, topk.as_ref(), cfg)
    }

    pub fn from_topk(adjacency: &Adjacency, topk: Option<&DiffusionTopK>, cfg: &TrainConfig) -> Result<Self> {
        let anchor_dist = AnchorDistribution::new(&adjacency.degrees(), cfg.alpha, cfg.beta)?;
        let local_anchors = match topk {
            Some(t) => {
                if t.num_nodes() != adjacency.num_nodes() {
                    return Err(Error::Shape("top-K table does not match the graph".into()));
                }
                t.anchor_lists().into_iter().map(|r| r.into_iter().take(cfg.k_local).collect()).collect()
            }
            None => vec![Vec::new(); adjacency.num_nodes()],
        };
        Ok(Self {
            anchor_dist,
            local_anchors,
        })
    }
}

/// Loss terms of one step, summed over view pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLoss {
    pub loss_glob: f64,
    pub loss_local: f64,
    pub loss_total: f64,
}

/// Global anchors of an epoch.
pub fn epoch_anchors(prep: &Prepared, cfg: &TrainConfig, epoch: usize) -> Result<Vec<usize>> {
    let k = cfg.k_global.min(prep.anchor_dist.len());
    prep.anchor_dist.sample(k, derive_seed(cfg.seed, Stream::GlobalAnchors, epoch as u64))
}

/// The two augmented views of an epoch.
pub fn epoch_views(graph: &SparseGraph, cfg: &TrainConfig, epoch: usize) -> (GraphView, GraphView) {
    let e = epoch as u64;
    (
        augment(graph, &cfg.aug1, derive_seed(cfg.seed, Stream::FirstView, e)),
        augment(graph, &cfg.aug2, derive_seed(cfg.seed, Stream::SecondView, e)),
    )
}

/// Zero the gradient buffer, then for each `(online view, target view)` pair
/// evaluate `L_glob + λ L_local` and accumulate its gradient. Returns the
/// summed loss terms; `state.grads` holds the gradient of `loss_total`.
pub fn objective_and_gradient(
    state: &mut EncoderState,
    x: &FeatureMatrix,
    pairs: &[(&GraphView, &GraphView)],
    global_anchors: &[usize],
    local_anchors: &[Vec<usize>],
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<StepLoss> {
    state.zero_grads();
    let t = &cfg.temperatures;
    let mut total = StepLoss {
        loss_glob: 0.0,
        loss_local: 0.0,
        loss_total: 0.0,
    };
    for (online_view, target_view) in pairs {
        let emb = state.forward(x, online_view, target_view)?;
        let glob = relational_loss(
            &emb.z_online,
            &emb.h_target,
            Anchors::Shared(global_anchors),
            t.online_global,
            t.target_global,
        )?;
        let local = relational_loss(
            &emb.z_online,
            &emb.h_target,
            Anchors::PerQuery(local_anchors),
            t.online_local,
            t.target_local,
        )?;
        for (name, term) in [("global", &glob), ("local", &local)] {
            if !term.value.is_finite() {
                return Err(Error::NonFinite(format!(
                    "epoch {epoch}: {name} loss is {} (max online logit {})",
                    term.value, term.max_logit
                )));
            }
        }
        let mut d_z = glob.grad_z;
        d_z.scaled_add(cfg.lambda, &local.grad_z);
        state.backward(x, &d_z, None)?;
        total.loss_glob += glob.value;
        total.loss_local += local.value;
    }
    total.loss_total = total.loss_glob + cfg.lambda * total.loss_local;
    Ok(total)
}

/// One line of `train_log.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss_glob: f64,
    pub loss_local: f64,
    pub loss_total: f64,
    pub wall_ms: u64,
}

/// A training run over one graph, or over the layers of a multiplex graph.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub state: EncoderState,
    pub cfg: TrainConfig,
    pub prep: Prepared,
    adam: Adam,
    epoch: usize,
}

impl Trainer {
    pub fn new(input_dim: usize, prep: Prepared, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let state = EncoderState::init(input_dim, &cfg.architecture, derive_seed(cfg.seed, Stream::Init, 0))?;
        Self::with_state(state, prep, cfg)
    }

    pub fn with_state(state: EncoderState, prep: Prepared, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let adam = Adam::new(&state.online, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
        Ok(Self {
            state,
            cfg,
            prep,
            adam,
            epoch: 0,
        })
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn apply(&mut self, x: &FeatureMatrix, pairs: &[(&GraphView, &GraphView)]) -> Result<StepLoss> {
        let anchors = epoch_anchors(&self.prep, &self.cfg, self.epoch)?;
        let loss = objective_and_gradient(
            &mut self.state,
            x,
            pairs,
            &anchors,
            &self.prep.local_anchors,
            &self.cfg,
            self.epoch,
        )?;
        self.adam.step(&mut self.state.online, &self.state.grads, self.cfg.learning_rate)?;
        ema_update(&self.state.online.encoder, &mut self.state.target, self.cfg.ema_decay)?;
        self.epoch += 1;
        Ok(loss)
    }

    /// One full-graph step on two fresh augmented views.
    pub fn train_epoch(&mut self, graph: &SparseGraph) -> Result<StepLoss> {
        let (v1, v2) = epoch_views(graph, &self.cfg, self.epoch);
        let mut pairs = vec![(&v1, &v2)];
        if self.cfg.symmetric {
            pairs.push((&v2, &v1));
        }
        self.apply(graph.features(), &pairs)
    }

    /// One step over every layer pair of a multiplex graph, no augmentation.
    pub fn train_epoch_multiplex(&mut self, layers: &[SparseGraph]) -> Result<StepLoss> {
        let pairs = multiplex_pairs(layers)?;
        let views: Vec<GraphView> = layers.iter().map(SparseGraph::full_view).collect();
        let mut view_pairs: Vec<(&GraphView, &GraphView)> = pairs.iter().map(|&(a, b)| (&views[a], &views[b])).collect();
        if self.cfg.symmetric {
            view_pairs.extend(pairs.iter().map(|&(a, b)| (&views[b], &views[a])));
        }
        self.apply(layers[0].features(), &view_pairs)
    }

    /// Run the remaining epochs, writing one JSON line per epoch to `log`.
    pub fn fit(
        &mut self,
        mut step: impl FnMut(&mut Self) -> Result<StepLoss>,
        mut log: Option<&mut dyn Write>,
    ) -> Result<Vec<EpochLog>> {
        let mut history = Vec::new();
        while self.epoch < self.cfg.epochs {
            let started = Instant::now();
            let epoch = self.epoch;
            let loss = step(self)?;
            let entry = EpochLog {
                epoch,
                loss_glob: loss.loss_glob,
                loss_local: loss.loss_local,
                loss_total: loss.loss_total,
                wall_ms: started.elapsed().as_millis() as u64,
            };
            if let Some(out) = log.as_deref_mut() {
                serde_json::to_writer(&mut *out, &entry)?;
                out.write_all(b"\n")?;
            }
            history.push(entry);
        }
        Ok(history)
    }
}

/// All unordered pairs of layer indices, in lexicographic order.
pub fn multiplex_pairs(layers: &[SparseGraph]) -> Result<Vec<(usize, usize)>> {
    if layers.len() < 2 {
        return Err(Error::InvalidParameter(format!("multiplex training needs at least 2 layers, got {}", layers.len())));
    }
    let n = layers[0].num_nodes();
    if let Some((i, l)) = layers.iter().enumerate().find(|(_, l)| l.num_nodes() != n) {
        return Err(Error::Shape(format!("layer {i} has {} nodes, layer 0 has {n}", l.num_nodes())));
    }
    Ok((0..layers.len())
        .flat_map(|a| (a + 1..layers.len()).map(move |b| (a, b)))
        .collect())
}

/// Elementwise mean of per-layer embeddings, accumulated as a running mean so
/// identical layers give back exactly that layer.
pub fn multiplex_inference(per_layer: &[Array2<f64>]) -> Result<Array2<f64>> {
    let first = per_layer
        .first()
        .ok_or_else(|| Error::InvalidParameter("no layer embeddings".into()))?;
    let mut mean = first.clone();
    for (i, e) in per_layer.iter().enumerate().skip(1) {
        if e.dim() != first.dim() {
            return Err(Error::Shape(format!("layer {i} embeddings {:?} vs {:?}", e.dim(), first.dim())));
        }
        let k = (i + 1) as f64;
        mean.zip_mut_with(e, |m, &x| *m += (x - *m) / k);
    }
    Ok(mean)
}

/// Union of the layers' edge sets, carrying layer 0's features and labels.
pub fn multiplex_union(layers: &[SparseGraph]) -> Result<SparseGraph> {
    multiplex_pairs(layers)?;
    let n = layers[0].num_nodes();
    let edges: Vec<(usize, usize)> = layers.iter().flat_map(|l| l.adjacency().undirected_edges()).collect();
    layers[0].with_adjacency(Adjacency::from_edges(n, &edges)?)
}

/// Mean-pooled online-encoder embeddings over the layers.
pub fn embed_multiplex(state: &EncoderState, layers: &[SparseGraph]) -> Result<Array2<f64>> {
    let per_layer = layers
        .iter()
        .map(|l| state.embed(l.features(), &l.full_view()))
        .collect::<Result<Vec<_>>>()?;
    multiplex_inference(&per_layer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{OnlineNetwork, Predictor};
    use crate::graph::build_graph;
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_graph(n: usize, f: usize, seed: u64) -> SparseGraph {
        let mut rng = rng_from_seed(seed);
        let edges: Vec<_> = (0..3 * n).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
        let x = Array2::from_shape_simple_fn((n, f), || if rng.random_bool(0.3) { 1.0f32 } else { 0.0 });
        build_graph(n, &edges, x, None).unwrap()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            epochs: 50,
            k_global: 16,
            k_local: 3,
            architecture: Architecture {
                encoder_dims: vec![16, 8],
                predictor_hidden: 16,
                init_slope: 0.25,
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn ema_examples() {
        let online = Encoder { layers: vec![crate::encoder::GcnLayer { weight: array![[0.0, 2.0]], slope: 0.0 }] };
        let start = Encoder { layers: vec![crate::encoder::GcnLayer { weight: array![[1.0, -4.0]], slope: 1.0 }] };
        let mut t = start.clone();
        ema_update(&online, &mut t, 1.0).unwrap();
        assert_eq!(t, start);
        ema_update(&online, &mut t, 0.0).unwrap();
        assert_eq!(t, online);
        let mut t = start.clone();
        ema_update(&online, &mut t, 0.99).unwrap();
        assert_eq!(t.layers[0].weight[[0, 0]], 0.99);
        assert_eq!(t.layers[0].slope, 0.99);
        let wide = Encoder { layers: vec![crate::encoder::GcnLayer { weight: array![[0.0, 2.0, 1.0]], slope: 0.0 }] };
        assert!(ema_update(&wide, &mut t, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn ema_contracts_toward_online(seed in any::<u64>(), gamma in 0.0f64..1.0) {
            let online = Encoder::init(4, &[3, 2], 0.25, seed);
            let mut target = Encoder::init(4, &[3, 2], 0.25, seed ^ 1);
            let before = target.clone();
            ema_update(&online, &mut target, gamma).unwrap();
            for ((a, b), t) in target.tensors().iter().zip(before.tensors()).zip(online.tensors()) {
                for k in 0..a.len() {
                    prop_assert!(((a[k] - t[k]).abs() - gamma * (b[k] - t[k]).abs()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_parameters() {
        let mut p = Predictor::identity(2, 1.0);
        let mut adam = Adam::new(&p, 0.9, 0.999, 1e-8);
        let g = p.zeros_like();
        let g0 = Predictor { slope: 1.0, ..p.zeros_like() };
        adam.step(&mut p, &g0, 0.1).unwrap();
        let after_one = p.clone();
        adam.step(&mut p, &g, 0.1).unwrap();
        // moments decay but the parameters with zero gradient history stay put
        assert_eq!(p.hidden, after_one.hidden);
        assert_abs_diff_eq!(adam.first_moments()[1][0], 0.9 * 0.1, epsilon = 1e-16);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        for g in [3.0, -0.02] {
            let mut p = Predictor::identity(1, 0.5);
            let mut adam = Adam::new(&p, 0.9, 0.999, 1e-8);
            let grads = Predictor { slope: g, ..p.zeros_like() };
            adam.step(&mut p, &grads, 0.01).unwrap();
            assert_abs_diff_eq!(p.slope, 0.5 - 0.01 * f64::signum(g), epsilon = 1e-8);
        }
        let mut p = Predictor::identity(1, 0.5);
        let mut adam = Adam::new(&p, 0.9, 0.999, 1e-8);
        let grads = Predictor { slope: f64::NAN, ..p.zeros_like() };
        assert!(matches!(adam.step(&mut p, &grads, 0.01), Err(Error::NonFinite(_))));
    }

    #[test]
    fn identical_networks_and_views_give_zero_loss() {
        let g = random_graph(12, 5, 1);
        let cfg = TrainConfig {
            lambda: 0.0,
            k_global: 12,
            temperatures: Temperatures { online_global: 0.3, target_global: 0.3, online_local: 0.3, target_local: 0.3 },
            aug1: AugmentationConfig::IDENTITY,
            aug2: AugmentationConfig::IDENTITY,
            ..small_config()
        };
        let encoder = Encoder::init(5, &[6, 4], 1.0, 3);
        let mut state = EncoderState::from_online(OnlineNetwork { encoder, predictor: Predictor::identity(4, 1.0) });
        let view = g.full_view();
        let anchors: Vec<usize> = (0..12).collect();
        let loss = objective_and_gradient(&mut state, g.features(), &[(&view, &view)], &anchors, &vec![vec![]; 12], &cfg, 0)
            .unwrap();
        assert!(loss.loss_total.abs() < 1e-12, "{loss:?}");
    }

    #[test]
    fn loss_stays_finite_over_fifty_epochs() {
        let g = random_graph(100, 20, 2);
        let cfg = small_config();
        let prep = Prepared::new(g.adjacency(), &cfg).unwrap();
        let mut trainer = Trainer::new(20, prep, cfg).unwrap();
        let mut log = Vec::new();
        let history = trainer.fit(|t| t.train_epoch(&g), Some(&mut log)).unwrap();
        assert_eq!(history.len(), 50);
        assert!(history.iter().all(|h| h.loss_total.is_finite()));
        let text = String::from_utf8(log).unwrap();
        assert_eq!(text.lines().count(), 50);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in ["epoch", "loss_glob", "loss_local", "loss_total", "wall_ms"] {
            assert!(first.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let g = random_graph(40, 10, 5);
        let cfg = TrainConfig { epochs: 5, symmetric: true, ..small_config() };
        let run = || {
            let prep = Prepared::new(g.adjacency(), &cfg).unwrap();
            let mut t = Trainer::new(10, prep, cfg.clone()).unwrap();
            t.fit(|t| t.train_epoch(&g), None).unwrap();
            t.state
        };
        let (a, b) = (run(), run());
        let bits = |s: &EncoderState| -> Vec<u64> {
            s.online.tensors().iter().chain(s.target.tensors().iter()).flat_map(|t| t.iter().map(|v| v.to_bits())).collect()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let cfg = TrainConfig::default();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: TrainConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["learning_rat"] = serde_json::json!(0.1);
        assert!(serde_json::from_value::<TrainConfig>(v).is_err());
        assert!(TrainConfig { ema_decay: 1.5, ..cfg.clone() }.validate().is_err());
        assert!(TrainConfig { lambda: -1.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn multiplex_pair_counts() {
        let layer = random_graph(6, 3, 0);
        for (n, expected) in [(2, 1), (3, 3), (4, 6)] {
            assert_eq!(multiplex_pairs(&vec![layer.clone(); n]).unwrap().len(), expected);
        }
        assert!(multiplex_pairs(std::slice::from_ref(&layer)).is_err());
        assert!(multiplex_pairs(&[layer, random_graph(7, 3, 0)]).is_err());
    }

    #[test]
    fn multiplex_inference_examples() {
        let e = array![[1.0, 2.0], [3.0, -4.0]];
        assert_eq!(multiplex_inference(&[e.clone(), e.clone(), e.clone()]).unwrap(), e);
        assert_eq!(multiplex_inference(std::slice::from_ref(&e)).unwrap(), e);
        let zeros = Array2::zeros((2, 2));
        let twos = Array2::from_elem((2, 2), 2.0);
        assert_eq!(multiplex_inference(&[zeros, twos]).unwrap(), Array2::from_elem((2, 2), 1.0));
        assert!(multiplex_inference(&[e, Array2::zeros((3, 2))]).is_err());
        assert!(multiplex_inference(&[]).is_err());
    }

    #[test]
    fn multiplex_training_runs() {
        let base = random_graph(30, 6, 1);
        let layers: Vec<SparseGraph> = (0..3)
            .map(|s| base.with_adjacency(random_graph(30, 6, 10 + s).adjacency().clone()).unwrap())
            .collect();
        let union = multiplex_union(&layers).unwrap();
        let cfg = TrainConfig { epochs: 3, ..small_config() };
        let prep = Prepared::new(union.adjacency(), &cfg).unwrap();
        let mut t = Trainer::new(6, prep, cfg).unwrap();
        let history = t.fit(|t| t.train_epoch_multiplex(&layers), None).unwrap();
        assert!(history.iter().all(|h| h.loss_total.is_finite()));
        assert_eq!(embed_multiplex(&t.state, &layers).unwrap().dim(), (30, 8));
    }
}
