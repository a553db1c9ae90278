//! Counting metrics: ground-truth matching, precision/recall/F1, signed and
//! absolute percentage error, and per-scan aggregation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fruit_map::FruitletMap;
use crate::sphere_fit::Sphere;

pub const DEFAULT_CENTER_TOLERANCE_MM: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Maximum centre distance for a prediction to match a ground-truth fruitlet.
    pub center_tolerance_mm: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            center_tolerance_mm: DEFAULT_CENTER_TOLERANCE_MM,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("percentage error is undefined for a ground truth of 0")]
    ZeroGroundTruth,
    #[error("nothing to aggregate")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Greedy one-to-one matching by ascending centre distance.
pub fn match_ground_truth(map: &FruitletMap, truth: &[Sphere], center_tolerance: f64) -> MatchCounts {
    let predicted: Vec<Sphere> = map.tracks().iter().map(|t| t.sphere).collect();
    match_spheres(&predicted, truth, center_tolerance)
}

pub fn match_spheres(predicted: &[Sphere], truth: &[Sphere], center_tolerance: f64) -> MatchCounts {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            let d = (p.center - t.center).norm();
            if d <= center_tolerance {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; predicted.len()];
    let mut used_t = vec![false; truth.len()];
    let mut tp = 0;
    for (_, i, j) in pairs {
        if !used_p[i] && !used_t[j] {
            used_p[i] = true;
            used_t[j] = true;
            tp += 1;
        }
    }
    MatchCounts {
        tp,
        fp: predicted.len() - tp,
        fn_: truth.len() - tp,
    }
}

/// Precision, recall and F1; `None` marks a 0/0 case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn compute_metrics(tp: usize, fp: usize, fn_: usize) -> Metrics {
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Metrics { precision, recall, f1 }
}

/// `100 * (predicted - ground_truth) / ground_truth`; positive for over-counting.
pub fn percentage_error(ground_truth: usize, predicted: usize) -> Result<f64, EvalError> {
    if ground_truth == 0 {
        return Err(EvalError::ZeroGroundTruth);
    }
    Ok(100.0 * (predicted as f64 - ground_truth as f64) / ground_truth as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub ground_truth: usize,
    pub predicted: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl CountReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let m = compute_metrics(tp, fp, fn_);
        Self {
            ground_truth: tp + fn_,
            predicted: tp + fp,
            tp,
            fp,
            fn_,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        }
    }

    pub fn from_map(map: &FruitletMap, truth: &[Sphere], center_tolerance: f64) -> Self {
        let c = match_ground_truth(map, truth, center_tolerance);
        Self::from_counts(c.tp, c.fp, c.fn_)
    }

    pub fn percentage_error(&self) -> Result<f64, EvalError> {
        percentage_error(self.ground_truth, self.predicted)
    }

    pub fn error_summary(&self) -> Option<ErrorSummary> {
        let pe = self.percentage_error().ok()?;
        Some(ErrorSummary {
            percentage_error: pe,
            absolute_percentage_error: pe.abs(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub percentage_error: f64,
    pub absolute_percentage_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub scans: usize,
    /// Unweighted means of the per-scan values that are defined.
    pub mean_precision: Option<f64>,
    pub mean_recall: Option<f64>,
    pub mean_f1: Option<f64>,
    pub mean_percentage_error: Option<f64>,
    pub mean_absolute_percentage_error: Option<f64>,
    /// Metrics of the summed TP/FP/FN.
    pub pooled: Metrics,
    /// Scans with at least one undefined metric.
    pub undefined_scans: usize,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(reports: &[CountReport]) -> Result<AggregateSummary, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::Empty);
    }
    let pes: Vec<Option<f64>> = reports.iter().map(|r| r.percentage_error().ok()).collect();
    let (tp, fp, fn_) = reports
        .iter()
        .fold((0, 0, 0), |(a, b, c), r| (a + r.tp, b + r.fp, c + r.fn_));
    Ok(AggregateSummary {
        scans: reports.len(),
        mean_precision: mean(reports.iter().map(|r| r.precision)),
        mean_recall: mean(reports.iter().map(|r| r.recall)),
        mean_f1: mean(reports.iter().map(|r| r.f1)),
        mean_percentage_error: mean(pes.iter().copied()),
        mean_absolute_percentage_error: mean(pes.iter().map(|p| p.map(f64::abs))),
        pooled: compute_metrics(tp, fp, fn_),
        undefined_scans: reports
            .iter()
            .filter(|r| r.precision.is_none() || r.recall.is_none() || r.f1.is_none())
            .count(),
    })
}
