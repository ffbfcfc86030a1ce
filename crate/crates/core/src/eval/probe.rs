//! Random splits, an L2-regularized multinomial logistic regression, and the
//! linear-probe node classification protocol built on them.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, argmax, macro_f1, micro_f1};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    NodeSplit,
    EdgeSplit,
}

/// Train/validation/test fractions and the seed of the shuffle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    /// 10/10/80 over nodes.
    pub fn nodes(seed: u64) -> Self {
        Self {
            kind: SplitKind::NodeSplit,
            train: 0.1,
            val: 0.1,
            test: 0.8,
            seed,
        }
    }

    /// 50/20/30 over edges.
    pub fn edges(seed: u64) -> Self {
        Self {
            kind: SplitKind::EdgeSplit,
            train: 0.5,
            val: 0.2,
            test: 0.3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("split fractions {parts:?} must be in [0, 1] and sum to 1")));
        }
        Ok(())
    }

    fn stream(&self) -> Stream {
        match self.kind {
            SplitKind::NodeSplit => Stream::NodeSplit,
            SplitKind::EdgeSplit => Stream::EdgeSplit,
        }
    }

    /// Shuffle `items` and cut them into disjoint, exhaustive parts.
    pub fn partition<T>(&self, mut items: Vec<T>) -> Result<Partition<T>> {
        self.validate()?;
        items.shuffle(&mut stream_rng(self.seed, self.stream(), 0));
        let n = items.len();
        let n_train = (n as f64 * self.train).round() as usize;
        let n_val = ((n as f64 * self.val).round() as usize).min(n - n_train);
        let test = items.split_off(n_train + n_val);
        let val = items.split_off(n_train);
        Ok(Partition { train: items, val, test })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_iter: 1000,
            tol: 1e-5,
        }
    }
}

/// Softmax regression on standardized inputs. The bias is not penalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    mean: Array1<f64>,
    scale: Array1<f64>,
}

impl LogisticModel {
    fn standardize(&self, x: &Array2<f64>) -> Array2<f64> {
        (x - &self.mean) / &self.scale
    }

    pub fn logits(&self, x: &Array2<f64>) -> Array2<f64> {
        self.standardize(x).dot(&self.weights) + &self.bias
    }

    pub fn predict(&self, x: &Array2<f64>) -> Vec<usize> {
        self.logits(x).rows().into_iter().map(|r| argmax(r.iter().copied())).collect()
    }

    /// Probability of class 1 minus class 0 in logit space; for two classes
    /// this orders samples like the class-1 probability.
    pub fn margin(&self, x: &Array2<f64>) -> Vec<f64> {
        self.logits(x).rows().into_iter().map(|r| r[1] - r[0]).collect()
    }
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row /= s;
    }
}

/// Objective value and gradients `(dW, db)`.
fn objective(xs: &Array2<f64>, y: &[usize], w: &Array2<f64>, b: &Array1<f64>, l2: f64) -> (f64, Array2<f64>, Array1<f64>) {
    let n = xs.nrows() as f64;
    let mut p = xs.dot(w) + b;
    let mut loss = 0.0;
    for (mut row, &c) in p.rows_mut().into_iter().zip(y) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - row[c];
        row.mapv_inplace(|v| (v - lse).exp());
        row[c] -= 1.0;
    }
    let dw = xs.t().dot(&p) / n + &(w * l2);
    let db = p.sum_axis(Axis(0)) / n;
    (loss / n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>(), dw, db)
}

/// Full-batch gradient descent with backtracking line search. After every
/// iteration `select` scores the current model; the best-scoring model (the
/// earliest on ties) is returned.
pub fn fit_logistic(
    x: &Array2<f64>,
    y: &[usize],
    num_classes: usize,
    cfg: &LogisticConfig,
    mut select: impl FnMut(&LogisticModel) -> f64,
) -> Result<LogisticModel> {
    if x.nrows() != y.len() || x.nrows() == 0 {
        return Err(Error::Shape(format!("{} samples, {} targets", x.nrows(), y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= num_classes) {
        return Err(Error::InvalidParameter(format!("class {bad} >= {num_classes}")));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
    let xs = (x - &mean) / &scale;
    let mut model = LogisticModel {
        weights: Array2::zeros((x.ncols(), num_classes)),
        bias: Array1::zeros(num_classes),
        mean,
        scale,
    };
    let mut best = (select(&model), model.clone());
    let (mut f, mut dw, mut db) = objective(&xs, y, &model.weights, &model.bias, cfg.l2);
    let mut step = 1.0;
    for _ in 0..cfg.max_iter {
        let g2 = dw.iter().chain(db.iter()).map(|v| v * v).sum::<f64>();
        if g2.sqrt() < cfg.tol {
            break;
        }
        step *= 2.0;
        let mut accepted = None;
        for _ in 0..60 {
            let w = &model.weights - &(&dw * step);
            let b = &model.bias - &(&db * step);
            let next = objective(&xs, y, &w, &b, cfg.l2);
            if next.0 <= f - 0.5 * step * g2 {
                accepted = Some((w, b, next));
                break;
            }
            step *= 0.5;
        }
        let Some((w, b, next)) = accepted else { break };
        model.weights = w;
        model.bias = b;
        (f, dw, db) = next;
        let score = select(&model);
        if score > best.0 {
            best = (score, model.clone());
        }
    }
    Ok(best.1)
}

/// Test-set results of one probe run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub val_accuracy: f64,
    pub test_nodes: Vec<usize>,
    /// Predicted class of each test node, aligned with `test_nodes`.
    pub test_predictions: Vec<usize>,
}

fn rows(m: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    m.select(Axis(0), idx)
}

/// Logistic regression on frozen embeddings with a random node split; the
/// model with the best validation accuracy is evaluated on the test nodes.
pub fn linear_probe(embeddings: &Array2<f64>, labels: &[usize], split: &SplitSpec, cfg: &LogisticConfig) -> Result<ProbeOutcome> {
    if embeddings.nrows() != labels.len() {
        return Err(Error::Shape(format!("{} embeddings, {} labels", embeddings.nrows(), labels.len())));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let part = split.partition((0..labels.len()).collect())?;
    let pick = |ids: &[usize]| -> Vec<usize> { ids.iter().map(|&i| labels[i]).collect() };
    let (y_train, y_val, y_test) = (pick(&part.train), pick(&part.val), pick(&part.test));
    let mut seen = vec![false; num_classes];
    y_train.iter().for_each(|&c| seen[c] = true);
    if let Some(class) = seen.iter().position(|s| !s) {
        return Err(Error::MissingClass { class });
    }
    let (x_train, x_val, x_test) = (rows(embeddings, &part.train), rows(embeddings, &part.val), rows(embeddings, &part.test));
    let model = fit_logistic(&x_train, &y_train, num_classes, cfg, |m| accuracy(&m.predict(&x_val), &y_val))?;
    let pred = model.predict(&x_test);
    Ok(ProbeOutcome {
        accuracy: accuracy(&pred, &y_test),
        macro_f1: macro_f1(&pred, &y_test, num_classes),
        micro_f1: micro_f1(&pred, &y_test, num_classes),
        val_accuracy: accuracy(&model.predict(&x_val), &y_val),
        test_nodes: part.test,
        test_predictions: pred,
    })
}

/// Class probabilities of a fitted model; rows sum to one.
pub fn predict_proba(model: &LogisticModel, x: &Array2<f64>) -> Array2<f64> {
    let mut l = model.logits(x);
    softmax_rows(&mut l);
    l
}
