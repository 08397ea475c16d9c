//! Binary classification metrics. The preictal class is the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Class;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn from_predictions(truth: &[Class], predicted: &[Class]) -> Result<ConfusionCounts> {
        if truth.len() != predicted.len() {
            return Err(Error::Dimension(format!(
                "{} labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut c = ConfusionCounts::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t.is_positive(), p.is_positive()) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> Result<f64> {
    if c.total() == 0 {
        return Err(Error::Parameter("MCC of an empty confusion table".into()));
    }
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((tp * tn - fp * fn_) / denom.sqrt())
}

/// `(precision, recall)`, each 0 when its denominator is 0.
pub fn precision_recall(c: &ConfusionCounts) -> (f64, f64) {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    (ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn_))
}

/// Area under the precision-recall curve as step-wise average precision:
/// `Σ (R_n − R_{n−1}) · P_n` over distinct score thresholds, descending.
pub fn average_precision(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::Dimension("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("non-finite score".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    if n_pos == 0 {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut ap = 0.0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}
