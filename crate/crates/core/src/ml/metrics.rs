use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Binary classification scores; the positive class is label 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Mean of the per-class recalls.
    pub accuracy: f64,
    pub accuracy_plain: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when the true labels hold a single class.
    pub auc: Option<f64>,
}

impl MetricsReport {
    pub fn auc(&self) -> Result<f64> {
        self.auc.ok_or(Error::UndefinedAuc)
    }
}

/// Mann-Whitney AUC with half credit for tied scores.
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "score count",
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("scores contain NaN".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // average of the 1-based ranks start+1 ..= end
        let rank = (start + end + 1) as f64 / 2.0;
        rank_sum += rank * order[start..end].iter().filter(|&&i| labels[i] == 1).count() as f64;
        start = end;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

pub fn compute_metrics(truth: &[u8], predicted: &[u8], scores: &[f64]) -> Result<MetricsReport> {
    if truth.len() != predicted.len() || truth.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "metric inputs",
            expected: truth.len(),
            got: if truth.len() != predicted.len() { predicted.len() } else { scores.len() },
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("no samples to score".into()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t == 1, p == 1) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (false, false) => tn += 1.0,
            (true, false) => fn_ += 1.0,
        }
    }
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    let class_recalls: Vec<f64> = [(tp + fn_ > 0.0, recall), (tn + fp > 0.0, specificity)]
        .iter()
        .filter(|(present, _)| *present)
        .map(|&(_, r)| r)
        .collect();
    let accuracy = class_recalls.iter().sum::<f64>() / class_recalls.len() as f64;
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    let auc = match auc(truth, scores) {
        Ok(v) => Some(v),
        Err(Error::UndefinedAuc) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        accuracy,
        accuracy_plain: (tp + tn) / truth.len() as f64,
        precision,
        recall,
        f1,
        auc,
    })
}
