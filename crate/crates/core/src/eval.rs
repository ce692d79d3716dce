//! ROC curves, full and partial AUC, and FPR-targeted operating points.
//!
//! A curve point at threshold `t` counts every pixel with `score >= t` as
//! detected. Points are emitted once per distinct score, so tied pixels flip
//! together, plus a leading `(0, 0)` point at `t = +inf`. Binary maps use the
//! strict rule `score > threshold`; [`OperatingPoint::map_threshold`] gives
//! the strict cut that reproduces a curve point.

use serde::Serialize;
use thiserror::Error;

use crate::types::{GroundTruthMask, ScoreMap, TypeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("ground truth contains no anomalous pixels")]
    NoAnomalies,
    #[error("ground truth contains no background pixels")]
    NoBackground,
    #[error("score map is {score_rows}x{score_cols} but mask is {mask_rows}x{mask_cols}")]
    ShapeMismatch {
        score_rows: usize,
        score_cols: usize,
        mask_rows: usize,
        mask_cols: usize,
    },
    #[error("{len} scores for {labels} labels")]
    LengthMismatch { len: usize, labels: usize },
    #[error("non-finite score at index {0}")]
    NonFiniteScore(usize),
    #[error("target FPR {0} outside (0, 1]")]
    BadTarget(f64),
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    thresholds: Vec<f64>,
    fpr: Vec<f64>,
    tpr: Vec<f64>,
    n_anomaly: usize,
    n_background: usize,
}

impl RocCurve {
    /// Descending thresholds; the first is `+inf`.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn fpr(&self) -> &[f64] {
        &self.fpr
    }

    pub fn tpr(&self) -> &[f64] {
        &self.tpr
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.n_anomaly, self.n_background)
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// `threshold,fpr,tpr` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for i in 0..self.len() {
            out.push_str(&format!("{},{},{}\n", self.thresholds[i], self.fpr[i], self.tpr[i]));
        }
        out
    }
}

/// ROC curve of a score map against its ground truth.
pub fn roc(scores: &ScoreMap, truth: &GroundTruthMask) -> Result<RocCurve, EvalError> {
    if scores.rows() != truth.rows() || scores.cols() != truth.cols() {
        return Err(EvalError::ShapeMismatch {
            score_rows: scores.rows(),
            score_cols: scores.cols(),
            mask_rows: truth.rows(),
            mask_cols: truth.cols(),
        });
    }
    roc_from_labels(scores.scores(), truth.labels())
}

/// ROC curve over arbitrary finite scores (negative values allowed).
pub fn roc_from_labels(scores: &[f64], labels: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            len: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    let n_anomaly = labels.iter().filter(|&&l| l).count();
    let n_background = labels.len() - n_anomaly;
    if n_anomaly == 0 {
        return Err(EvalError::NoAnomalies);
    }
    if n_background == 0 {
        return Err(EvalError::NoBackground);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = vec![f64::INFINITY];
    let mut fpr = vec![0.0];
    let mut tpr = vec![0.0];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        thresholds.push(t);
        fpr.push(fp as f64 / n_background as f64);
        tpr.push(tp as f64 / n_anomaly as f64);
    }
    Ok(RocCurve {
        thresholds,
        fpr,
        tpr,
        n_anomaly,
        n_background,
    })
}

/// Trapezoidal area under the curve for `fpr <= max_fpr`, interpolating
/// linearly at the cut.
pub fn partial_auc(curve: &RocCurve, max_fpr: f64) -> f64 {
    let mut area = 0.0;
    for i in 1..curve.len() {
        let (f0, f1) = (curve.fpr[i - 1], curve.fpr[i]);
        let (t0, t1) = (curve.tpr[i - 1], curve.tpr[i]);
        if f1 <= max_fpr {
            area += (f1 - f0) * (t0 + t1) / 2.0;
        } else {
            if f0 < max_fpr {
                let tx = t0 + (t1 - t0) * (max_fpr - f0) / (f1 - f0);
                area += (max_fpr - f0) * (t0 + tx) / 2.0;
            }
            break;
        }
    }
    area
}

/// McClish standardization: maps a chance curve to 0.5 and a perfect one to 1.
pub fn mcclish(raw: f64, max_fpr: f64) -> f64 {
    let chance = max_fpr * max_fpr / 2.0;
    0.5 * (1.0 + (raw - chance) / (max_fpr - chance))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AucReport {
    pub auc_full: f64,
    pub pauc_raw_1e2: f64,
    pub pauc_raw_1e3: f64,
    pub pauc_std_1e2: f64,
    pub pauc_std_1e3: f64,
}

pub fn auc_report(curve: &RocCurve) -> AucReport {
    let raw2 = partial_auc(curve, 1e-2);
    let raw3 = partial_auc(curve, 1e-3);
    AucReport {
        auc_full: partial_auc(curve, 1.0),
        pauc_raw_1e2: raw2,
        pauc_raw_1e3: raw3,
        pauc_std_1e2: mcclish(raw2, 1e-2),
        pauc_std_1e3: mcclish(raw3, 1e-3),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    /// Curve threshold; pixels with `score >= threshold` are detected.
    pub threshold: f64,
    pub achieved_fpr: f64,
    pub tpr: f64,
    /// Strict cut for [`binary_map`] that detects exactly the same pixels.
    pub map_threshold: f64,
    /// Every finite-threshold point exceeds the target, so the empty
    /// detection at `+inf` was returned.
    pub unachievable: bool,
}

/// Smallest curve threshold whose FPR does not exceed `target_fpr`.
pub fn threshold_at_fpr(curve: &RocCurve, target_fpr: f64) -> Result<OperatingPoint, EvalError> {
    if !(target_fpr > 0.0 && target_fpr <= 1.0) {
        return Err(EvalError::BadTarget(target_fpr));
    }
    let i = curve.fpr.partition_point(|&f| f <= target_fpr) - 1;
    let map_threshold = curve
        .thresholds
        .get(i + 1)
        .copied()
        .unwrap_or(f64::NEG_INFINITY);
    Ok(OperatingPoint {
        threshold: curve.thresholds[i],
        achieved_fpr: curve.fpr[i],
        tpr: curve.tpr[i],
        map_threshold,
        unachievable: i == 0,
    })
}

/// Detection map: `true` where `score > threshold`.
pub fn binary_map(scores: &ScoreMap, threshold: f64) -> GroundTruthMask {
    let labels = scores.scores().iter().map(|&s| s > threshold).collect();
    GroundTruthMask::new(scores.rows(), scores.cols(), labels).expect("same shape as the score map")
}
