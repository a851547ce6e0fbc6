use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CostEncoder, CostVector};
use crate::error::{Error, Result};
use crate::pipeline::{csv_writer, parse_f64};
use crate::synthgen::RasterImage;

/// One encoded image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub path: String,
    pub label: String,
    pub vector: Vec<f64>,
}

/// Rows of a feature file: `path,label,d0,...,d{n-1}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn dim(&self) -> Option<usize> {
        self.rows.first().map(|r| r.vector.len())
    }

    pub fn get(&self, path: &str) -> Option<&FeatureRow> {
        self.rows.iter().find(|r| r.path == path)
    }

    pub fn write_csv(&self, path: &Path, dim: usize) -> Result<()> {
        let mut w = csv_writer(path)?;
        let mut header = vec!["path".to_string(), "label".to_string()];
        header.extend((0..dim).map(|i| format!("d{i}")));
        w.write_record(&header)?;
        for row in &self.rows {
            if row.vector.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.vector.len() });
            }
            let mut rec = vec![row.path.clone(), row.label.clone()];
            rec.extend(row.vector.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[0] != "path" || &header[1] != "label" {
            return Err(Error::parse(path, 1, "expected header `path,label,d0,...`"));
        }
        let dim = header.len() - 2;
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != dim + 2 {
                return Err(Error::parse(path, line, format!("expected {} fields", dim + 2)));
            }
            let vector = (0..dim)
                .map(|j| parse_f64(path, line, &rec[j + 2]))
                .collect::<Result<Vec<_>>>()?;
            rows.push(FeatureRow {
                path: rec[0].to_string(),
                label: rec[1].to_string(),
                vector,
            });
        }
        Ok(Self { rows })
    }
}

/// Encoded rows plus the images that could not be read or encoded.
#[derive(Debug, Clone, Default)]
pub struct BatchOutput {
    pub table: FeatureTable,
    pub failures: Vec<(String, String)>,
}

/// Encode `(key, file, label)` items in parallel; output follows input order.
pub fn encode_batch(items: &[(String, PathBuf, String)], encoder: &CostEncoder<'_>) -> BatchOutput {
    let results: Vec<Result<CostVector>> = items
        .par_iter()
        .map(|(_, file, _)| RasterImage::load(file).and_then(|img| encoder.encode(&img)))
        .collect();
    let mut out = BatchOutput::default();
    for ((key, _, label), res) in items.iter().zip(results) {
        match res {
            Ok(v) => out.table.rows.push(FeatureRow {
                path: key.clone(),
                label: label.clone(),
                vector: v.into_inner(),
            }),
            Err(e) => {
                log::warn!("failed to encode {key}: {e}");
                out.failures.push((key.clone(), e.to_string()));
            }
        }
    }
    out
}

/// Per-entry z-score normalisation fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map(|r| r.len()).ok_or_else(|| {
            Error::InvalidArgument("cannot fit a scaler on zero rows".into())
        })?;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v / n as f64;
            }
        }
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m) / n as f64;
            }
        }
        let std = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = FeatureTable {
            rows: vec![
                FeatureRow { path: "a.png".into(), label: "x".into(), vector: vec![0.1, 1.0 / 3.0] },
                FeatureRow { path: "b,c.png".into(), label: "y".into(), vector: vec![2.0, 1e-17] },
            ],
        };
        let path = dir.path().join("f.csv");
        t.write_csv(&path, 2).unwrap();
        assert_eq!(FeatureTable::read_csv(&path).unwrap(), t);
    }

    #[test]
    fn scaler_standardises() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let s = FeatureScaler::fit(&refs).unwrap();
        assert_eq!(s.apply(&[1.0, 5.0]), vec![-1.0, 0.0]);
    }
}
