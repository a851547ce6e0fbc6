use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_alpha, fuse, normalize_scores, Channel, Normalization};
use crate::error::{Error, Result};
use crate::pipeline::{csv_writer, parse_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLabel {
    Genuine,
    Imposter,
}

impl PairLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PairLabel::Genuine => "genuine",
            PairLabel::Imposter => "imposter",
        }
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "genuine" => Ok(PairLabel::Genuine),
            "imposter" => Ok(PairLabel::Imposter),
            other => Err(Error::InvalidArgument(format!("unknown pair label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub path1: String,
    pub path2: String,
    pub label: PairLabel,
}

/// Verification protocol: `path1,path2,label` rows.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairList {
    pairs: Vec<Pair>,
}

impl PairList {
    /// Rejects the same unordered pair listed with conflicting labels.
    pub fn new(pairs: Vec<Pair>) -> Result<Self> {
        let mut seen: HashMap<(&str, &str), PairLabel> = HashMap::new();
        for p in &pairs {
            let key = if p.path1 <= p.path2 {
                (p.path1.as_str(), p.path2.as_str())
            } else {
                (p.path2.as_str(), p.path1.as_str())
            };
            if let Some(prev) = seen.insert(key, p.label) {
                if prev != p.label {
                    return Err(Error::DuplicateKey(format!(
                        "pair ({}, {}) is both {prev} and {}",
                        p.path1, p.path2, p.label
                    )));
                }
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(["path1", "path2", "label"])?;
        for p in &self.pairs {
            w.write_record([p.path1.as_str(), p.path2.as_str(), p.label.as_str()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["path1", "path2", "label"] {
            return Err(Error::parse(path, 1, "expected header `path1,path2,label`"));
        }
        let mut pairs = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != 3 {
                return Err(Error::parse(path, line, "expected 3 fields"));
            }
            let label = rec[2].parse().map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
            pairs.push(Pair { path1: rec[0].to_string(), path2: rec[1].to_string(), label });
        }
        Self::new(pairs)
    }
}

/// One scored pair. `dist_fused = α·dist_cost + (1−α)·dist_supervised`
/// for the α of the enclosing [`ScoreSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub path1: String,
    pub path2: String,
    pub dist_cost: f64,
    pub dist_supervised: f64,
    pub dist_fused: f64,
    pub label: PairLabel,
}

impl ScoreRecord {
    pub fn distance(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Cost => self.dist_cost,
            Channel::Supervised => self.dist_supervised,
            Channel::Fused => self.dist_fused,
        }
    }
}

const SCORE_HEADER: [&str; 6] = ["path1", "path2", "dist_cost", "dist_supervised", "dist_fused", "label"];

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub alpha: f64,
    pub records: Vec<ScoreRecord>,
}

impl ScoreSet {
    /// Recompute every fused value at a new α from the stored operands.
    pub fn refuse(&self, alpha: f64) -> Result<ScoreSet> {
        check_alpha(alpha)?;
        let records = self
            .records
            .iter()
            .map(|r| {
                Ok(ScoreRecord { dist_fused: fuse(r.dist_cost, r.dist_supervised, alpha)?, ..r.clone() })
            })
            .collect::<Result<_>>()?;
        Ok(ScoreSet { alpha, records })
    }

    /// Genuine and imposter distances on one channel.
    pub fn split(&self, channel: Channel) -> (Vec<f64>, Vec<f64>) {
        let mut genuine = Vec::new();
        let mut imposter = Vec::new();
        for r in &self.records {
            match r.label {
                PairLabel::Genuine => genuine.push(r.distance(channel)),
                PairLabel::Imposter => imposter.push(r.distance(channel)),
            }
        }
        (genuine, imposter)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        w.write_record(SCORE_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.path1.clone(),
                r.path2.clone(),
                r.dist_cost.to_string(),
                r.dist_supervised.to_string(),
                r.dist_fused.to_string(),
                r.label.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a score file; `alpha` is the weight the fused column was built with.
    pub fn read_csv(path: &Path, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
        let header = r.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != SCORE_HEADER {
            return Err(Error::parse(path, 1, format!("expected header `{}`", SCORE_HEADER.join(","))));
        }
        let mut records = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != SCORE_HEADER.len() {
                return Err(Error::parse(path, line, format!("expected {} fields", SCORE_HEADER.len())));
            }
            let dist_cost = parse_f64(path, line, &rec[2])?;
            let dist_supervised = parse_f64(path, line, &rec[3])?;
            let dist_fused = parse_f64(path, line, &rec[4])?;
            if !(dist_cost >= 0.0 && dist_supervised >= 0.0) || !dist_fused.is_finite() {
                return Err(Error::parse(path, line, "distances must be finite and non-negative"));
            }
            let label = rec[5].parse().map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
            records.push(ScoreRecord {
                path1: rec[0].to_string(),
                path2: rec[1].to_string(),
                dist_cost,
                dist_supervised,
                dist_fused,
                label,
            });
        }
        Ok(ScoreSet { alpha, records })
    }
}

/// Build score records from per-pair channel distances, normalising each
/// channel over the whole set before fusing.
pub fn fuse_records(
    pairs: &PairList,
    dist_cost: &[f64],
    dist_supervised: &[f64],
    alpha: f64,
    normalization: Normalization,
) -> Result<ScoreSet> {
    check_alpha(alpha)?;
    for d in [dist_cost, dist_supervised] {
        if d.len() != pairs.len() {
            return Err(Error::DimensionMismatch { expected: pairs.len(), got: d.len() });
        }
    }
    if pairs.is_empty() {
        return Ok(ScoreSet { alpha, records: Vec::new() });
    }
    let c = normalize_scores(dist_cost, normalization)?;
    let s = normalize_scores(dist_supervised, normalization)?;
    let records = pairs
        .pairs()
        .iter()
        .zip(c.into_iter().zip(s))
        .map(|(p, (c, s))| {
            Ok(ScoreRecord {
                path1: p.path1.clone(),
                path2: p.path2.clone(),
                dist_cost: c,
                dist_supervised: s,
                dist_fused: fuse(c, s, alpha)?,
                label: p.label,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScoreSet { alpha, records })
}
