use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts with "up" (class 1) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn add(&mut self, predicted: u8, actual: u8) {
        match (predicted > 0, actual > 0) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `TP / (TP + FP)`, absent when nothing was predicted up.
    pub fn ppv(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `TN / (TN + FN)`, absent when nothing was predicted down.
    pub fn npv(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fn_)
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpvNpv {
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub counts: Confusion,
}

pub fn ppv_npv(predictions: &[u8], labels: &[u8]) -> Result<PpvNpv> {
    if predictions.len() != labels.len() {
        return Err(Error::Domain(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Domain("no predictions to score".into()));
    }
    let mut counts = Confusion::default();
    for (&p, &y) in predictions.iter().zip(labels) {
        counts.add(p, y);
    }
    Ok(PpvNpv {
        ppv: counts.ppv(),
        npv: counts.npv(),
        counts,
    })
}

/// Largest peak-to-trough decline as a fraction of the running peak.
pub fn max_drawdown(equity: &[f64]) -> Result<f64> {
    if equity.is_empty() {
        return Err(Error::Domain("max drawdown of an empty series".into()));
    }
    let mut peak = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for &v in equity {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("equity values must be positive, got {v}")));
        }
        peak = peak.max(v);
        worst = worst.max((peak - v) / peak);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexMetrics {
    /// Index change, `(last - first) / first`.
    pub idc: f64,
    /// Index max drawdown.
    pub imd: f64,
}

pub fn index_metrics(closes: &[f64]) -> Result<IndexMetrics> {
    let imd = max_drawdown(closes)?;
    let first = closes[0];
    let last = closes[closes.len() - 1];
    Ok(IndexMetrics {
        idc: (last - first) / first,
        imd,
    })
}
