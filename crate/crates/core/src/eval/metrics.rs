//! Classification and ranking metrics.

use crate::error::{Error, Result};

/// Index of the largest entry; ties go to the smaller index.
pub fn argmax(row: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in row.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / pred.len() as f64
}

fn confusion_counts(pred: &[usize], truth: &[usize], num_classes: usize) -> Vec<(usize, usize, usize)> {
    // (true positives, false positives, false negatives) per class
    let mut counts = vec![(0, 0, 0); num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            counts[t].0 += 1;
        } else {
            counts[p].1 += 1;
            counts[t].2 += 1;
        }
    }
    counts
}

fn f1(tp: usize, fp: usize, fneg: usize) -> f64 {
    let denom = 2 * tp + fp + fneg;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Unweighted mean of per-class F1 over classes present in `pred` or `truth`.
pub fn macro_f1(pred: &[usize], truth: &[usize], num_classes: usize) -> f64 {
    let counts = confusion_counts(pred, truth, num_classes);
    let present: Vec<f64> = counts
        .iter()
        .filter(|(tp, fp, fneg)| tp + fp + fneg > 0)
        .map(|&(tp, fp, fneg)| f1(tp, fp, fneg))
        .collect();
    if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    }
}

/// F1 of the pooled counts; equals accuracy for single-label prediction.
pub fn micro_f1(pred: &[usize], truth: &[usize], num_classes: usize) -> f64 {
    let (tp, fp, fneg) = confusion_counts(pred, truth, num_classes)
        .into_iter()
        .fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    f1(tp, fp, fneg)
}

fn check_both_classes(pos: &[f64], neg: &[f64]) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Degenerate(format!(
            "ranking metrics need both classes ({} positive, {} negative scores)",
            pos.len(),
            neg.len()
        )));
    }
    Ok(())
}

/// Area under the ROC curve as the Mann–Whitney statistic with mid-ranks for
/// ties.
pub fn auc_rank(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check_both_classes(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// `(false positive rate, true positive rate)` points, one per distinct
/// threshold, from `(0, 0)` to `(1, 1)`.
pub fn roc_curve(pos: &[f64], neg: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_both_classes(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let s = all[i].0;
        while i < all.len() && all[i].0 == s {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / nn, tp as f64 / np));
    }
    Ok(points)
}

/// Trapezoidal area under [`roc_curve`].
pub fn auc_trapezoid(pos: &[f64], neg: &[f64]) -> Result<f64> {
    let pts = roc_curve(pos, neg)?;
    Ok(pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum())
}

/// Average precision: `Σ (R_n − R_{n−1}) P_n` over distinct thresholds in
/// decreasing order.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check_both_classes(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let np = pos.len() as f64;
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut last_recall = 0.0;
    let mut i = 0;
    while i < all.len() {
        let s = all[i].0;
        while i < all.len() && all[i].0 == s {
            tp += usize::from(all[i].1);
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / np;
        ap += (recall - last_recall) * tp as f64 / seen as f64;
        last_recall = recall;
    }
    Ok(ap)
}
