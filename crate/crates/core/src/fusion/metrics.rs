use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_alpha, ScoreSet};
use crate::error::{Error, Result};
use crate::pipeline::csv_writer;

/// FAR operating points reported for verification.
pub const FAR_POINTS: [f64; 2] = [0.01, 0.001];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Cost,
    Supervised,
    Fused,
}

/// Acceptance rates at `distance ≤ threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub gar: f64,
}

/// Points ordered by increasing threshold, starting at `(−∞, 0, 0)` and
/// ending at the largest distance with `far = gar = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(["threshold", "far", "gar"])?;
        for p in &self.points {
            w.write_record([p.threshold.to_string(), p.far.to_string(), p.gar.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub roc: RocCurve,
    /// GAR at 1% FAR.
    pub gar_at_1: f64,
    /// GAR at 0.1% FAR.
    pub gar_at_01: f64,
}

fn check_distances(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what} distances")));
    }
    Ok(())
}

/// Sweep thresholds over the sorted distinct distances.
pub fn roc_from_scores(genuine: &[f64], imposter: &[f64]) -> Result<RocCurve> {
    if genuine.is_empty() || imposter.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "verification needs genuine and imposter pairs, got {} and {}",
            genuine.len(),
            imposter.len()
        )));
    }
    check_distances(genuine, "genuine")?;
    check_distances(imposter, "imposter")?;
    let mut g = genuine.to_vec();
    let mut im = imposter.to_vec();
    g.sort_by(f64::total_cmp);
    im.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = g.iter().chain(&im).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let (ng, ni) = (g.len() as f64, im.len() as f64);
    let mut points = vec![RocPoint { threshold: f64::NEG_INFINITY, far: 0.0, gar: 0.0 }];
    let (mut gi, mut ii) = (0, 0);
    for t in thresholds {
        while gi < g.len() && g[gi] <= t {
            gi += 1;
        }
        while ii < im.len() && im[ii] <= t {
            ii += 1;
        }
        points.push(RocPoint { threshold: t, far: ii as f64 / ni, gar: gi as f64 / ng });
    }
    Ok(RocCurve { points })
}

/// GAR at the largest threshold whose FAR does not exceed `far`.
pub fn gar_at_far(roc: &RocCurve, far: f64) -> f64 {
    roc.points.iter().take_while(|p| p.far <= far).last().map_or(0.0, |p| p.gar)
}

pub fn verification_metrics(set: &ScoreSet, channel: Channel) -> Result<Verification> {
    let (genuine, imposter) = set.split(channel);
    let roc = roc_from_scores(&genuine, &imposter)?;
    Ok(Verification {
        gar_at_1: gar_at_far(&roc, FAR_POINTS[0]),
        gar_at_01: gar_at_far(&roc, FAR_POINTS[1]),
        roc,
    })
}

/// Identification rate at ranks `1..=G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmcCurve {
    pub rates: Vec<f64>,
}

impl CmcCurve {
    /// Rate at a 1-based rank.
    pub fn at(&self, rank: usize) -> f64 {
        self.rates[rank - 1]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(["rank", "rate"])?;
        for (i, r) in self.rates.iter().enumerate() {
            w.write_record([(i + 1).to_string(), r.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// CMC from a probe × gallery distance matrix.
///
/// Each probe's gallery is sorted by ascending distance with ties kept in
/// gallery order; its rank is the position of the first entry of its identity.
pub fn cmc<S: AsRef<str>>(dist: &[Vec<f64>], probe_ids: &[S], gallery_ids: &[S]) -> Result<CmcCurve> {
    if dist.len() != probe_ids.len() {
        return Err(Error::DimensionMismatch { expected: probe_ids.len(), got: dist.len() });
    }
    let g = gallery_ids.len();
    if g == 0 || dist.is_empty() {
        return Err(Error::InvalidArgument("identification needs a non-empty gallery and probe set".into()));
    }
    let mut counts = vec![0usize; g];
    for (row, probe) in dist.iter().zip(probe_ids) {
        if row.len() != g {
            return Err(Error::DimensionMismatch { expected: g, got: row.len() });
        }
        check_distances(row, "probe-gallery")?;
        let mut order: Vec<usize> = (0..g).collect();
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        let rank = order
            .iter()
            .position(|&i| gallery_ids[i].as_ref() == probe.as_ref())
            .ok_or_else(|| {
                Error::InvalidArgument(format!("probe identity `{}` is not in the gallery", probe.as_ref()))
            })?;
        counts[rank] += 1;
    }
    let n = dist.len() as f64;
    let mut cumulative = 0;
    let rates = counts
        .into_iter()
        .map(|c| {
            cumulative += c;
            cumulative as f64 / n
        })
        .collect();
    Ok(CmcCurve { rates })
}

/// Result of the α grid search: the chosen α and GAR@1%FAR for every grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearch {
    pub alpha: f64,
    pub gar_at_1: f64,
    pub grid: Vec<(f64, f64)>,
}

/// Pick the grid α maximising GAR@1%FAR on `set`; ties go to the smallest α.
pub fn grid_search_alpha(set: &ScoreSet, grid: &[f64]) -> Result<AlphaSearch> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty α grid".into()));
    }
    let mut scored = Vec::with_capacity(grid.len());
    for &alpha in grid {
        check_alpha(alpha)?;
        let v = verification_metrics(&set.refuse(alpha)?, Channel::Fused)?;
        scored.push((alpha, v.gar_at_1));
    }
    let (alpha, gar_at_1) = scored
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.total_cmp(&a.0)))
        .unwrap();
    Ok(AlphaSearch { alpha, gar_at_1, grid: scored })
}
