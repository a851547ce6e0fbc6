//! Class centroids in each subtype's code space and the centroid-distance
//! feature vector.
//!
//! With the full class sets the vector has 64 entries: color classes 0..10,
//! shape classes 10..17 and texture classes 17..64, each block in its
//! subtype's class ordering.

mod features;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse_dict::{image_signal, stlars_encode, CodingParams, Dictionary, SparseCode};
use crate::synthgen::{RasterImage, Subtype};

pub use features::{encode_batch, BatchOutput, FeatureRow, FeatureScaler, FeatureTable};

/// Length of the feature vector with all 10 + 7 + 47 classes.
pub const FULL_COST_DIM: usize = 64;

/// Centroids of one subtype, in that subtype's class ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeCentroids {
    pub subtype: Subtype,
    pub labels: Vec<String>,
    pub centroids: Vec<Vec<f64>>,
}

impl SubtypeCentroids {
    pub fn dim(&self) -> usize {
        self.centroids.first().map(Vec::len).unwrap_or(0)
    }
}

/// All centroids, ordered color, shape, texture.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    blocks: Vec<SubtypeCentroids>,
}

#[derive(Serialize, Deserialize)]
struct CentroidFile {
    /// `subtype/label` for every vector entry, in order.
    order: Vec<String>,
    subtypes: Vec<SubtypeCentroids>,
}

impl CentroidSet {
    /// Canonicalise block and class order; storage order of the input is irrelevant.
    pub fn new(mut blocks: Vec<SubtypeCentroids>) -> Result<Self> {
        blocks.sort_by_key(|b| b.subtype);
        for w in blocks.windows(2) {
            if w[0].subtype == w[1].subtype {
                return Err(Error::InvalidArgument(format!("duplicate {} centroid block", w[0].subtype)));
            }
        }
        for block in &mut blocks {
            if block.labels.len() != block.centroids.len() || block.labels.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "{} block needs one centroid per label",
                    block.subtype
                )));
            }
            let dim = block.dim();
            if block.centroids.iter().any(|c| c.len() != dim) {
                return Err(Error::InvalidArgument(format!("{} centroids differ in dimension", block.subtype)));
            }
            let mut pairs: Vec<(usize, String, Vec<f64>)> = block
                .labels
                .drain(..)
                .zip(block.centroids.drain(..))
                .map(|(l, c)| (class_rank(block.subtype, &l), l, c))
                .collect();
            pairs.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            for (_, l, c) in pairs {
                block.labels.push(l);
                block.centroids.push(c);
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[SubtypeCentroids] {
        &self.blocks
    }

    pub fn block(&self, subtype: Subtype) -> Option<&SubtypeCentroids> {
        self.blocks.iter().find(|b| b.subtype == subtype)
    }

    /// Total number of centroids, i.e. the feature-vector length.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.labels.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(subtype, label)` of every feature entry in order.
    pub fn order(&self) -> Vec<(Subtype, String)> {
        self.blocks
            .iter()
            .flat_map(|b| b.labels.iter().map(move |l| (b.subtype, l.clone())))
            .collect()
    }

    /// Global feature index of a class.
    pub fn index_of(&self, subtype: Subtype, label: &str) -> Option<usize> {
        self.order().iter().position(|(s, l)| *s == subtype && l == label)
    }

    /// Label of the centroid nearest to `code` within `subtype`.
    pub fn nearest(&self, subtype: Subtype, code: &[f64]) -> Option<&str> {
        let block = self.block(subtype)?;
        block
            .centroids
            .iter()
            .map(|c| euclidean(c, code))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| block.labels[i].as_str())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CentroidFile {
            order: self.order().into_iter().map(|(s, l)| format!("{s}/{l}")).collect(),
            subtypes: self.blocks.clone(),
        };
        crate::pipeline::write_json(path, &file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: CentroidFile = crate::pipeline::read_json(path)?;
        let set = Self::new(file.subtypes)?;
        let order: Vec<String> = set.order().into_iter().map(|(s, l)| format!("{s}/{l}")).collect();
        if order != file.order {
            return Err(Error::parse(path, 1, "`order` does not match the centroid blocks"));
        }
        Ok(set)
    }
}

/// Position of `label` in the subtype's canonical ordering. Texture labels
/// (and unknown labels) rank equal and fall back to lexicographic order.
fn class_rank(subtype: Subtype, label: &str) -> usize {
    subtype
        .fixed_labels()
        .and_then(|labels| labels.iter().position(|l| *l == label))
        .unwrap_or(usize::MAX)
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Codes of one subtype grouped by class, with the expected class list.
#[derive(Debug, Clone, Default)]
pub struct SubtypeCodes {
    pub subtype: Option<Subtype>,
    pub classes: Vec<String>,
    pub codes: BTreeMap<String, Vec<SparseCode>>,
}

impl SubtypeCodes {
    pub fn new(subtype: Subtype, classes: Vec<String>) -> Self {
        Self {
            subtype: Some(subtype),
            classes,
            codes: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, label: &str, code: SparseCode) {
        self.codes.entry(label.to_string()).or_default().push(code);
    }
}

/// Arithmetic mean of each class's codes.
pub fn compute_centroids(inputs: &[SubtypeCodes]) -> Result<CentroidSet> {
    let mut blocks = Vec::with_capacity(inputs.len());
    for input in inputs {
        let subtype = input
            .subtype
            .ok_or_else(|| Error::InvalidArgument("codes without a subtype".into()))?;
        let mut labels = Vec::new();
        let mut centroids = Vec::new();
        let mut dim = None;
        for class in &input.classes {
            let codes = input
                .codes
                .get(class)
                .filter(|c| !c.is_empty())
                .ok_or_else(|| Error::IncompleteCentroids {
                    subtype: subtype.to_string(),
                    label: class.clone(),
                })?;
            let k = *dim.get_or_insert(codes[0].len());
            let mut mean = vec![0.0; k];
            for code in codes {
                if code.len() != k {
                    return Err(Error::DimensionMismatch { expected: k, got: code.len() });
                }
                for (m, v) in mean.iter_mut().zip(code.iter()) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= codes.len() as f64);
            labels.push(class.clone());
            centroids.push(mean);
        }
        blocks.push(SubtypeCentroids {
            subtype,
            labels,
            centroids,
        });
    }
    CentroidSet::new(blocks)
}

/// Distances from an image's codes to every centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Dictionaries, centroids and coding settings needed to encode images.
#[derive(Debug, Clone, Copy)]
pub struct CostEncoder<'a> {
    pub dictionaries: &'a [Dictionary],
    pub centroids: &'a CentroidSet,
    pub params: &'a CodingParams,
    /// Coding resolution (width, height).
    pub signal_size: (u32, u32),
}

impl<'a> CostEncoder<'a> {
    pub fn new(
        dictionaries: &'a [Dictionary],
        centroids: &'a CentroidSet,
        params: &'a CodingParams,
        signal_size: (u32, u32),
    ) -> Result<Self> {
        let (w, h) = signal_size;
        for block in centroids.blocks() {
            let dict = dictionaries
                .iter()
                .find(|d| d.subtype() == block.subtype)
                .ok_or_else(|| Error::InvalidArgument(format!("no {} dictionary", block.subtype)))?;
            if dict.k() != block.dim() {
                return Err(Error::DimensionMismatch {
                    expected: dict.k(),
                    got: block.dim(),
                });
            }
            if dict.dim() != (w * h * 3) as usize {
                return Err(Error::DimensionMismatch {
                    expected: (w * h * 3) as usize,
                    got: dict.dim(),
                });
            }
        }
        Ok(Self {
            dictionaries,
            centroids,
            params,
            signal_size,
        })
    }

    /// Code of `img` in one subtype's dictionary.
    pub fn code(&self, img: &RasterImage, subtype: Subtype) -> Result<SparseCode> {
        let dict = self
            .dictionaries
            .iter()
            .find(|d| d.subtype() == subtype)
            .ok_or_else(|| Error::InvalidArgument(format!("no {subtype} dictionary")))?;
        let signal = image_signal(img, self.signal_size.0, self.signal_size.1)?;
        stlars_encode(dict, &signal, self.params)
    }

    pub fn encode(&self, img: &RasterImage) -> Result<CostVector> {
        let signal = image_signal(img, self.signal_size.0, self.signal_size.1)?;
        let mut out = Vec::with_capacity(self.centroids.len());
        for block in self.centroids.blocks() {
            let dict = self
                .dictionaries
                .iter()
                .find(|d| d.subtype() == block.subtype)
                .expect("checked in CostEncoder::new");
            let code = stlars_encode(dict, &signal, self.params)?;
            out.extend(block.centroids.iter().map(|c| euclidean(&code, c)));
        }
        Ok(CostVector(out))
    }
}

/// Encode `img` as its distances to every centroid of `cents`.
pub fn encode_cost(
    img: &RasterImage,
    dicts: &[Dictionary],
    cents: &CentroidSet,
    params: &CodingParams,
    signal_size: (u32, u32),
) -> Result<CostVector> {
    CostEncoder::new(dicts, cents, params, signal_size)?.encode(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::COLOR_CLASSES;

    fn codes(subtype: Subtype, classes: &[&str], per: &[Vec<Vec<f64>>]) -> SubtypeCodes {
        let mut s = SubtypeCodes::new(subtype, classes.iter().map(|c| c.to_string()).collect());
        for (c, list) in classes.iter().zip(per) {
            for v in list {
                s.push(c, SparseCode::from(v.clone()));
            }
        }
        s
    }

    #[test]
    fn mean_of_one_and_two() {
        let set = compute_centroids(&[codes(
            Subtype::Shape,
            &["lines", "circle"],
            &[vec![vec![3.0, 1.0]], vec![vec![0.0, 0.0], vec![2.0, 4.0]]],
        )])
        .unwrap();
        let b = set.block(Subtype::Shape).unwrap();
        assert_eq!(b.labels, vec!["lines", "circle"]);
        assert_eq!(b.centroids, vec![vec![3.0, 1.0], vec![1.0, 2.0]]);
    }

    #[test]
    fn missing_class_is_named() {
        let err = compute_centroids(&[codes(Subtype::Color, &["red", "blue"], &[vec![vec![1.0]], vec![]])])
            .unwrap_err();
        match err {
            Error::IncompleteCentroids { label, .. } => assert_eq!(label, "blue"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn permuted_storage_keeps_label_mapping() {
        let color = SubtypeCentroids {
            subtype: Subtype::Color,
            labels: COLOR_CLASSES.iter().map(|s| s.to_string()).collect(),
            centroids: (0..10).map(|i| vec![i as f64]).collect(),
        };
        let texture = SubtypeCentroids {
            subtype: Subtype::Texture,
            labels: vec!["b".into(), "a".into()],
            centroids: vec![vec![20.0], vec![10.0]],
        };
        let mut shuffled = color.clone();
        shuffled.labels.reverse();
        shuffled.centroids.reverse();
        let a = CentroidSet::new(vec![color, texture.clone()]).unwrap();
        let b = CentroidSet::new(vec![texture, shuffled]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.index_of(Subtype::Color, "orange"), Some(9));
        assert_eq!(a.index_of(Subtype::Texture, "a"), Some(10));
        assert_eq!(a.block(Subtype::Texture).unwrap().centroids[0], vec![10.0]);
    }

    #[test]
    fn centroid_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let set = compute_centroids(&[codes(
            Subtype::Texture,
            &["x", "y"],
            &[vec![vec![0.1, 0.2]], vec![vec![1.0 / 3.0, 2.0]]],
        )])
        .unwrap();
        let path = dir.path().join("c.json");
        set.save(&path).unwrap();
        assert_eq!(CentroidSet::load(&path).unwrap(), set);
    }

    #[test]
    fn nearest_picks_closest() {
        let set = compute_centroids(&[codes(
            Subtype::Color,
            &["red", "green"],
            &[vec![vec![0.0, 0.0]], vec![vec![1.0, 1.0]]],
        )])
        .unwrap();
        assert_eq!(set.nearest(Subtype::Color, &[0.9, 0.8]), Some("green"));
        assert_eq!(set.nearest(Subtype::Shape, &[0.9, 0.8]), None);
    }
}
