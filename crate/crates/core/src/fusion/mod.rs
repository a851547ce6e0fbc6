//! Score fusion and biometric evaluation.
//!
//! Distances from the COST classifier and the supervised backend are
//! combined as `α·dist_cost + (1−α)·dist_supervised`, then evaluated as
//! verification (ROC, GAR at fixed FAR) or identification (CMC).

mod metrics;
mod records;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use metrics::{
    cmc, gar_at_far, grid_search_alpha, roc_from_scores, verification_metrics, AlphaSearch, Channel, CmcCurve,
    RocCurve, RocPoint, Verification, FAR_POINTS,
};
pub use records::{fuse_records, Pair, PairLabel, PairList, ScoreRecord, ScoreSet};

/// Default α grid `{0.0, 0.1, …, 1.0}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    Minmax,
    None,
}

/// Euclidean distance between two activation vectors.
pub fn softmax_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    activation_distance(p, q, DistanceMetric::Euclidean)
}

/// Distance between activation vectors under `metric`.
///
/// Cosine distance is `1 − cos(p, q)`, taken as 1 when either vector is zero.
pub fn activation_distance(p: &[f64], q: &[f64], metric: DistanceMetric) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), got: q.len() });
    }
    if p.iter().chain(q).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("activation vector".into()));
    }
    Ok(match metric {
        DistanceMetric::Euclidean => p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        DistanceMetric::Cosine => {
            let dot: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
            let np = p.iter().map(|a| a * a).sum::<f64>().sqrt();
            let nq = q.iter().map(|a| a * a).sum::<f64>().sqrt();
            if np == 0.0 || nq == 0.0 {
                1.0
            } else {
                (1.0 - dot / (np * nq)).max(0.0)
            }
        }
    })
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")))
    }
}

/// `α·dist_cost + (1−α)·dist_supervised`.
pub fn fuse(dist_cost: f64, dist_supervised: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha * dist_cost + (1.0 - alpha) * dist_supervised)
}

/// Map a score set onto `[0, 1]` (`Minmax`) or leave it as is (`None`).
/// A constant set maps to zeros.
pub fn normalize_scores(values: &[f64], method: Normalization) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot normalise an empty score set".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("score set".into()));
    }
    Ok(match method {
        Normalization::None => values.to_vec(),
        Normalization::Minmax => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi == lo {
                vec![0.0; values.len()]
            } else {
                values.iter().map(|v| (v - lo) / (hi - lo)).collect()
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(softmax_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(softmax_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2f64.sqrt());
        let d = softmax_distance(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(softmax_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn cosine_distance() {
        let d = activation_distance(&[1.0, 0.0], &[0.0, 1.0], DistanceMetric::Cosine).unwrap();
        assert_eq!(d, 1.0);
        let d = activation_distance(&[0.3, 0.7], &[0.6, 1.4], DistanceMetric::Cosine).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn fuse_examples() {
        assert_eq!(fuse(0.5, 0.1, 0.0).unwrap(), 0.1);
        assert_eq!(fuse(0.5, 0.1, 1.0).unwrap(), 0.5);
        assert!((fuse(0.5, 0.1, 0.3).unwrap() - 0.22).abs() < 1e-15);
        assert!(fuse(0.5, 0.1, 1.5).is_err());
        assert!(fuse(0.5, 0.1, -0.1).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_scores(&[2.0, 4.0, 6.0], Normalization::Minmax).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_scores(&[3.0, 3.0], Normalization::Minmax).unwrap(), vec![0.0, 0.0]);
        assert_eq!(normalize_scores(&[3.0, -1.0], Normalization::None).unwrap(), vec![3.0, -1.0]);
        assert!(normalize_scores(&[], Normalization::None).is_err());
    }

    #[test]
    fn default_grid() {
        let g = default_alpha_grid();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
    }
}
