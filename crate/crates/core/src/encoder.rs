//! GCN encoders, the node-level predictor, and reverse-mode gradients for the
//! online path.
//!
//! Each GCN layer computes `prelu(Â · H · W)` where `Â` is the self-loop
//! normalized adjacency of the view and the PReLU slope is a learnable scalar.
//! There are no bias terms. The predictor is `prelu(H · P₁) · P₂`.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, Zip};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalized_transition, FeatureMatrix, GraphView};
use crate::rng::rng_from_seed;
use crate::sparse::CsrMatrix;

/// Flat access to every learnable tensor, in declaration order.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;
    /// `(name, shape)` of each tensor, matching [`Parameters::tensors`].
    fn layout(&self) -> Vec<(String, Vec<usize>)>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

fn flat(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("parameters are stored in standard layout")
}

fn flat_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameters are stored in standard layout")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnLayer {
    pub weight: Array2<f64>,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub layers: Vec<GcnLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub hidden: Array2<f64>,
    pub slope: f64,
    pub output: Array2<f64>,
}

/// Encoder plus predictor: everything that receives gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineNetwork {
    pub encoder: Encoder,
    pub predictor: Predictor,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

impl Encoder {
    /// Glorot-uniform weights; `dims` lists the output width of each layer.
    pub fn init(input_dim: usize, dims: &[usize], slope: f64, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut fan_in = input_dim;
        let layers = dims
            .iter()
            .map(|&out| {
                let layer = GcnLayer {
                    weight: glorot(fan_in, out, &mut rng),
                    slope,
                };
                fan_in = out;
                layer
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weight.nrows())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.ncols())
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| GcnLayer {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    slope: 0.0,
                })
                .collect(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weight.dim() == b.weight.dim())
    }
}

impl Parameters for Encoder {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [flat(&l.weight), std::slice::from_ref(&l.slope)])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [flat_mut(&mut l.weight), std::slice::from_mut(&mut l.slope)])
            .collect()
    }

    fn layout(&self) -> Vec<(String, Vec<usize>)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                [
                    (format!("layer{i}.weight"), l.weight.shape().to_vec()),
                    (format!("layer{i}.slope"), vec![1]),
                ]
            })
            .collect()
    }
}

impl Predictor {
    pub fn init(dim: usize, hidden: usize, slope: f64, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        Self {
            hidden: glorot(dim, hidden, &mut rng),
            slope,
            output: glorot(hidden, dim, &mut rng),
        }
    }

    /// Square identity weights; with slope 1 the predictor is the identity map.
    pub fn identity(dim: usize, slope: f64) -> Self {
        Self {
            hidden: Array2::eye(dim),
            slope,
            output: Array2::eye(dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            hidden: Array2::zeros(self.hidden.raw_dim()),
            slope: 0.0,
            output: Array2::zeros(self.output.raw_dim()),
        }
    }
}

impl Parameters for Predictor {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![flat(&self.hidden), std::slice::from_ref(&self.slope), flat(&self.output)]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            flat_mut(&mut self.hidden),
            std::slice::from_mut(&mut self.slope),
            flat_mut(&mut self.output),
        ]
    }

    fn layout(&self) -> Vec<(String, Vec<usize>)> {
        vec![
            ("hidden".into(), self.hidden.shape().to_vec()),
            ("slope".into(), vec![1]),
            ("output".into(), self.output.shape().to_vec()),
        ]
    }
}

impl OnlineNetwork {
    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: self.encoder.zeros_like(),
            predictor: self.predictor.zeros_like(),
        }
    }
}

impl Parameters for OnlineNetwork {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.encoder.tensors();
        t.extend(self.predictor.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.encoder.tensors_mut();
        t.extend(self.predictor.tensors_mut());
        t
    }

    fn layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut l: Vec<_> = self
            .encoder
            .layout()
            .into_iter()
            .map(|(n, s)| (format!("encoder.{n}"), s))
            .collect();
        l.extend(
            self.predictor
                .layout()
                .into_iter()
                .map(|(n, s)| (format!("predictor.{n}"), s)),
        );
        l
    }
}

/// Layer widths and activation initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    /// Output width of each GCN layer; the last entry is the embedding width.
    pub encoder_dims: Vec<usize>,
    pub predictor_hidden: usize,
    pub init_slope: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            encoder_dims: vec![256, 128],
            predictor_hidden: 512,
            init_slope: 0.25,
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.encoder_dims.is_empty() || self.encoder_dims.contains(&0) || self.predictor_hidden == 0 {
            return Err(Error::InvalidParameter(format!("degenerate architecture {self:?}")));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// forward / backward

fn prelu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

fn prelu_mat(pre: &Array2<f64>, slope: f64) -> Array2<f64> {
    pre.mapv(|v| prelu(v, slope))
}

/// `(X ⊙ mask) · W`, touching only the nonzero features.
fn features_times(x: &FeatureMatrix, mask: &[bool], w: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((x.num_rows(), w.ncols()));
    out.outer_iter_mut()
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for (c, v) in x.row(i) {
                if mask[c] {
                    row.scaled_add(v, &w.row(c));
                }
            }
        });
    out
}

/// `(X ⊙ mask)ᵀ · G`.
fn features_t_times(x: &FeatureMatrix, mask: &[bool], g: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((x.num_features(), g.ncols()));
    for i in 0..x.num_rows() {
        let gi = g.row(i);
        for (c, v) in x.row(i) {
            if mask[c] {
                out.row_mut(c).scaled_add(v, &gi);
            }
        }
    }
    out
}

fn check_input(encoder: &Encoder, x: &FeatureMatrix, view: &GraphView) -> Result<()> {
    if encoder.layers.is_empty() {
        return Err(Error::Shape("encoder has no layers".into()));
    }
    if x.num_features() != encoder.input_dim() || view.feature_mask.len() != x.num_features() {
        return Err(Error::Shape(format!(
            "feature width {} (mask {}) does not match encoder input width {}",
            x.num_features(),
            view.feature_mask.len(),
            encoder.input_dim()
        )));
    }
    if view.adjacency.num_nodes() != x.num_rows() {
        return Err(Error::Shape(format!(
            "view has {} nodes, feature matrix {} rows",
            view.adjacency.num_nodes(),
            x.num_rows()
        )));
    }
    for (i, pair) in encoder.layers.windows(2).enumerate() {
        if pair[0].weight.ncols() != pair[1].weight.nrows() {
            return Err(Error::Shape(format!("layer {i} output width does not feed layer {}", i + 1)));
        }
    }
    Ok(())
}

/// Activations kept from an encoder forward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    propagation: CsrMatrix,
    feature_mask: Vec<bool>,
    /// Input of layers 1.. (layer 0 reads the features).
    hidden_inputs: Vec<Array2<f64>>,
    /// Pre-activation `Â H W` of every layer.
    pre_activations: Vec<Array2<f64>>,
}

fn encoder_forward_impl(
    encoder: &Encoder,
    x: &FeatureMatrix,
    view: &GraphView,
    keep: bool,
) -> Result<(Array2<f64>, Option<EncoderCache>)> {
    check_input(encoder, x, view)?;
    let propagation = normalized_transition(&view.adjacency, true);
    let mut hidden_inputs = Vec::new();
    let mut pre_activations = Vec::new();
    let mut h: Option<Array2<f64>> = None;
    for layer in &encoder.layers {
        let projected = match &h {
            None => features_times(x, &view.feature_mask, &layer.weight),
            Some(prev) => prev.dot(&layer.weight),
        };
        let pre = propagation.mul_dense(projected.view());
        let out = prelu_mat(&pre, layer.slope);
        if keep {
            if let Some(prev) = h.take() {
                hidden_inputs.push(prev);
            }
            pre_activations.push(pre);
        }
        h = Some(out);
    }
    let cache = keep.then(|| EncoderCache {
        propagation,
        feature_mask: view.feature_mask.clone(),
        hidden_inputs,
        pre_activations,
    });
    Ok((h.expect("at least one layer"), cache))
}

/// Node representations of `view` under `encoder`.
pub fn gcn_forward(encoder: &Encoder, x: &FeatureMatrix, view: &GraphView) -> Result<Array2<f64>> {
    encoder_forward_impl(encoder, x, view, false).map(|(h, _)| h)
}

pub fn gcn_forward_cached(
    encoder: &Encoder,
    x: &FeatureMatrix,
    view: &GraphView,
) -> Result<(Array2<f64>, EncoderCache)> {
    encoder_forward_impl(encoder, x, view, true).map(|(h, c)| (h, c.expect("cache requested")))
}

#[derive(Debug, Clone)]
pub struct PredictorCache {
    input: Array2<f64>,
    pre: Array2<f64>,
    activated: Array2<f64>,
}

pub fn predictor_forward(predictor: &Predictor, h: &Array2<f64>) -> Result<Array2<f64>> {
    predictor_forward_cached(predictor, h).map(|(z, _)| z)
}

pub fn predictor_forward_cached(predictor: &Predictor, h: &Array2<f64>) -> Result<(Array2<f64>, PredictorCache)> {
    if h.ncols() != predictor.hidden.nrows() || predictor.hidden.ncols() != predictor.output.nrows() {
        return Err(Error::Shape(format!(
            "predictor {:?}/{:?} cannot take input width {}",
            predictor.hidden.dim(),
            predictor.output.dim(),
            h.ncols()
        )));
    }
    let pre = h.dot(&predictor.hidden);
    let activated = prelu_mat(&pre, predictor.slope);
    let z = activated.dot(&predictor.output);
    Ok((
        z,
        PredictorCache {
            input: h.clone(),
            pre,
            activated,
        },
    ))
}

/// Returns `(upstream ⊙ prelu'(pre), ∂/∂slope)`.
fn prelu_backward(pre: &Array2<f64>, upstream: &Array2<f64>, slope: f64) -> (Array2<f64>, f64) {
    let mut d_slope = 0.0;
    let mut d_pre = Array2::zeros(pre.raw_dim());
    Zip::from(&mut d_pre)
        .and(pre)
        .and(upstream)
        .for_each(|d, &p, &g| {
            if p > 0.0 {
                *d = g;
            } else {
                *d = slope * g;
                d_slope += p * g;
            }
        });
    (d_pre, d_slope)
}

/// Gradients of the encoder parameters given `∂L/∂H` at its output.
pub fn encoder_backward(
    encoder: &Encoder,
    x: &FeatureMatrix,
    cache: &EncoderCache,
    d_out: &Array2<f64>,
) -> Result<Encoder> {
    let mut grads = encoder.zeros_like();
    let mut upstream = d_out.clone();
    for l in (0..encoder.layers.len()).rev() {
        let layer = &encoder.layers[l];
        let (d_pre, d_slope) = prelu_backward(&cache.pre_activations[l], &upstream, layer.slope);
        // Â is symmetric, so Âᵀ · dP = Â · dP.
        let d_projected = cache.propagation.mul_dense(d_pre.view());
        grads.layers[l].slope = d_slope;
        if l == 0 {
            grads.layers[0].weight = features_t_times(x, &cache.feature_mask, &d_projected);
        } else {
            let input = &cache.hidden_inputs[l - 1];
            grads.layers[l].weight = input.t().dot(&d_projected);
            upstream = d_projected.dot(&layer.weight.t());
        }
    }
    Ok(grads)
}

/// Gradients of the predictor and `∂L/∂H` at its input.
pub fn predictor_backward(predictor: &Predictor, cache: &PredictorCache, d_z: &Array2<f64>) -> (Predictor, Array2<f64>) {
    let d_output = cache.activated.t().dot(d_z);
    let d_activated = d_z.dot(&predictor.output.t());
    let (d_pre, d_slope) = prelu_backward(&cache.pre, &d_activated, predictor.slope);
    let d_hidden = cache.input.t().dot(&d_pre);
    let d_input = d_pre.dot(&predictor.hidden.t());
    (
        Predictor {
            hidden: d_hidden,
            slope: d_slope,
            output: d_output,
        },
        d_input,
    )
}

/// Activations of one online pass over a view.
#[derive(Debug, Clone)]
pub struct OnlineCache {
    encoder: EncoderCache,
    predictor: PredictorCache,
}

/// Online representations `H` and predictions `Z` for a view.
pub fn online_forward(
    net: &OnlineNetwork,
    x: &FeatureMatrix,
    view: &GraphView,
) -> Result<(Array2<f64>, Array2<f64>, OnlineCache)> {
    let (h, encoder) = gcn_forward_cached(&net.encoder, x, view)?;
    let (z, predictor) = predictor_forward_cached(&net.predictor, &h)?;
    Ok((h, z, OnlineCache { encoder, predictor }))
}

/// Gradients of every online parameter given `∂L/∂Z` and, optionally, a
/// direct `∂L/∂H`.
pub fn online_backward(
    net: &OnlineNetwork,
    x: &FeatureMatrix,
    cache: &OnlineCache,
    d_z: &Array2<f64>,
    d_h: Option<&Array2<f64>>,
) -> Result<OnlineNetwork> {
    if d_z.dim() != (cache.predictor.pre.nrows(), net.predictor.output.ncols()) {
        return Err(Error::Shape(format!("upstream gradient has shape {:?}", d_z.dim())));
    }
    let (predictor, mut d_input) = predictor_backward(&net.predictor, &cache.predictor, d_z);
    if let Some(extra) = d_h {
        if extra.dim() != d_input.dim() {
            return Err(Error::Shape(format!("dH has shape {:?}, expected {:?}", extra.dim(), d_input.dim())));
        }
        d_input += extra;
    }
    let encoder = encoder_backward(&net.encoder, x, &cache.encoder, &d_input)?;
    Ok(OnlineNetwork { encoder, predictor })
}

/// Parameters of a training run: online network, EMA target encoder, and the
/// gradient buffer of the last backward pass.
#[derive(Debug, Clone)]
pub struct EncoderState {
    pub online: OnlineNetwork,
    pub target: Encoder,
    pub grads: OnlineNetwork,
    cache: Option<OnlineCache>,
}

/// Output of [`EncoderState::forward`].
#[derive(Debug, Clone)]
pub struct Embeddings {
    pub h_online: Array2<f64>,
    pub z_online: Array2<f64>,
    pub h_target: Array2<f64>,
}

impl EncoderState {
    /// Fresh online network; the target starts as an exact copy of the online
    /// encoder.
    pub fn init(input_dim: usize, arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = rng_from_seed(seed);
        let encoder = Encoder::init(input_dim, &arch.encoder_dims, arch.init_slope, rng.random());
        let dim = encoder.output_dim();
        let predictor = Predictor::init(dim, arch.predictor_hidden, arch.init_slope, rng.random());
        Ok(Self::from_online(OnlineNetwork { encoder, predictor }))
    }

    pub fn from_online(online: OnlineNetwork) -> Self {
        let target = online.encoder.clone();
        let grads = online.zeros_like();
        Self {
            online,
            target,
            grads,
            cache: None,
        }
    }

    pub fn from_parts(online: OnlineNetwork, target: Encoder) -> Result<Self> {
        if !online.encoder.same_shape(&target) {
            return Err(Error::Shape("target encoder shapes differ from online encoder".into()));
        }
        let grads = online.zeros_like();
        Ok(Self {
            online,
            target,
            grads,
            cache: None,
        })
    }

    /// Online pass on `view_online`, target pass on `view_target`. Caches the
    /// online activations for [`EncoderState::backward`].
    pub fn forward(
        &mut self,
        x: &FeatureMatrix,
        view_online: &GraphView,
        view_target: &GraphView,
    ) -> Result<Embeddings> {
        let (online, target) = rayon::join(
            || online_forward(&self.online, x, view_online),
            || gcn_forward(&self.target, x, view_target),
        );
        let (h_online, z_online, cache) = online?;
        self.cache = Some(cache);
        Ok(Embeddings {
            h_online,
            z_online,
            h_target: target?,
        })
    }

    /// Accumulate gradients of the last forward pass into `grads`. The cache is
    /// consumed; the target encoder is never touched.
    pub fn backward(&mut self, x: &FeatureMatrix, d_z: &Array2<f64>, d_h: Option<&Array2<f64>>) -> Result<()> {
        let cache = self.cache.take().ok_or(Error::MissingForwardCache)?;
        let grads = online_backward(&self.online, x, &cache, d_z, d_h)?;
        for (acc, g) in self.grads.tensors_mut().into_iter().zip(grads.tensors()) {
            for (a, b) in acc.iter_mut().zip(g) {
                *a += b;
            }
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for t in self.grads.tensors_mut() {
            t.fill(0.0);
        }
    }

    /// Embeddings used downstream: the online encoder on the given view.
    pub fn embed(&self, x: &FeatureMatrix, view: &GraphView) -> Result<Array2<f64>> {
        gcn_forward(&self.online.encoder, x, view)
    }

    fn all_tensors(&self) -> Vec<&[f64]> {
        let mut t = self.online.tensors();
        t.extend(self.target.tensors());
        t
    }

    fn all_layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut l: Vec<_> = self
            .online
            .layout()
            .into_iter()
            .map(|(n, s)| (format!("online.{n}"), s))
            .collect();
        l.extend(self.target.layout().into_iter().map(|(n, s)| (format!("target.{n}"), s)));
        l
    }

    /// Order-sensitive checksum over the target parameters' bit patterns.
    pub fn target_checksum(&self) -> u64 {
        checksum(&self.target.tensors())
    }

    /// Write a checkpoint: one line of JSON header, then every parameter as
    /// little-endian `f64` in header order.
    pub fn save(&self, path: &Path, header_extra: serde_json::Value) -> Result<()> {
        let tensors: Vec<_> = self
            .all_layout()
            .into_iter()
            .map(|(name, shape)| serde_json::json!({ "name": name, "shape": shape }))
            .collect();
        let header = serde_json::json!({
            "format": "rgrl-checkpoint",
            "version": 1,
            "tensors": tensors,
            "meta": header_extra,
        });
        let mut bytes = serde_json::to_vec(&header)?;
        bytes.push(b'\n');
        for t in self.all_tensors() {
            for v in t {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::File::create(path)?.write_all(&bytes)?;
        Ok(())
    }

    /// Read a checkpoint written by [`EncoderState::save`]; returns the state
    /// and the `meta` object of its header.
    pub fn load(path: &Path) -> Result<(Self, serde_json::Value)> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Checkpoint("missing header line".into()))?;
        let header: serde_json::Value = serde_json::from_slice(&bytes[..split])?;
        if header["format"] != "rgrl-checkpoint" {
            return Err(Error::Checkpoint("not an rgrl checkpoint".into()));
        }
        let shapes: Vec<(String, Vec<usize>)> = header["tensors"]
            .as_array()
            .ok_or_else(|| Error::Checkpoint("missing tensor table".into()))?
            .iter()
            .map(|t| {
                let name = t["name"].as_str().unwrap_or_default().to_string();
                let shape = t["shape"]
                    .as_array()
                    .map(|s| s.iter().filter_map(|d| d.as_u64()).map(|d| d as usize).collect())
                    .unwrap_or_default();
                (name, shape)
            })
            .collect();
        let payload = &bytes[split + 1..];
        if payload.len() % 8 != 0 {
            return Err(Error::Checkpoint("payload is not a whole number of f64".into()));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut take = |shape: &[usize]| -> Result<Vec<f64>> {
            let n: usize = shape.iter().product();
            let v: Vec<f64> = values.by_ref().take(n).collect();
            if v.len() != n {
                return Err(Error::Checkpoint("payload shorter than header declares".into()));
            }
            Ok(v)
        };

        let mut online_layers = Vec::new();
        let mut target_layers = Vec::new();
        let mut predictor_parts: Vec<Vec<f64>> = Vec::new();
        let mut predictor_shapes: Vec<Vec<usize>> = Vec::new();
        let mut pending_weight: Option<Array2<f64>> = None;
        for (name, shape) in &shapes {
            let data = take(shape)?;
            let is_target = name.starts_with("target.");
            if name.starts_with("online.predictor.") {
                predictor_shapes.push(shape.clone());
                predictor_parts.push(data);
            } else if name.ends_with(".weight") {
                if shape.len() != 2 {
                    return Err(Error::Checkpoint(format!("{name} is not a matrix")));
                }
                let w = Array2::from_shape_vec((shape[0], shape[1]), data)
                    .map_err(|e| Error::Checkpoint(e.to_string()))?;
                pending_weight = Some(w);
            } else if name.ends_with(".slope") {
                let weight = pending_weight
                    .take()
                    .ok_or_else(|| Error::Checkpoint(format!("{name} without weight")))?;
                let layer = GcnLayer { weight, slope: data[0] };
                if is_target {
                    target_layers.push(layer);
                } else {
                    online_layers.push(layer);
                }
            } else {
                return Err(Error::Checkpoint(format!("unknown tensor {name}")));
            }
        }
        if predictor_parts.len() != 3 {
            return Err(Error::Checkpoint("predictor needs three tensors".into()));
        }
        let mat = |i: usize| {
            Array2::from_shape_vec((predictor_shapes[i][0], predictor_shapes[i][1]), predictor_parts[i].clone())
                .map_err(|e| Error::Checkpoint(e.to_string()))
        };
        let predictor = Predictor {
            hidden: mat(0)?,
            slope: predictor_parts[1][0],
            output: mat(2)?,
        };
        let online = OnlineNetwork {
            encoder: Encoder { layers: online_layers },
            predictor,
        };
        let state = Self::from_parts(online, Encoder { layers: target_layers })?;
        Ok((state, header["meta"].clone()))
    }
}

/// FNV-1a over the bit patterns of a tensor list.
pub fn checksum(tensors: &[&[f64]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for t in tensors {
        for v in t.iter() {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }
    h
}
