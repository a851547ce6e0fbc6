use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{arity_error, Backend, BackendMode, BackendOutput, Score, ScoreInput, ScoreKind};
use crate::error::{Error, Result};
use crate::mlp::{init_mlp, train, MlpModel, TrainConfig};
use crate::seed;
use crate::sparse_dict::image_signal;
use crate::synthgen::RasterImage;

/// Side length images are downsampled to before classification.
pub const REFERENCE_SIZE: u32 = 16;

/// Output order of pair-mode models.
pub const PAIR_CLASSES: [&str; 2] = ["same", "different"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub hidden: [usize; 2],
    pub epochs: usize,
    pub learning_rate: f64,
    /// Cap on training pairs in pair mode, split evenly between same and different.
    pub max_pairs: usize,
    pub seed: u64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { hidden: [64, 32], epochs: 500, learning_rate: 0.05, max_pairs: 1000, seed: 0 }
    }
}

/// A two-hidden-layer network on downsampled pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceClassifier {
    mode: BackendMode,
    size: u32,
    model: MlpModel,
}

/// Symmetric pair representation: element-wise `|a − b|`.
pub fn pair_feature(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect()
}

impl ReferenceClassifier {
    pub fn mode(&self) -> BackendMode {
        self.mode
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    pub fn classes(&self) -> &[String] {
        self.model.classes()
    }

    pub fn featurize(&self, img: &RasterImage) -> Result<Vec<f64>> {
        image_signal(img, self.size, self.size)
    }

    /// Untrained pair model; used to check symmetry before any training.
    pub fn untrained_pair(seed: u64, hidden: [usize; 2]) -> Result<Self> {
        let d = (REFERENCE_SIZE * REFERENCE_SIZE * 3) as usize;
        let classes = PAIR_CLASSES.iter().map(|s| s.to_string()).collect();
        Ok(Self {
            mode: BackendMode::Pair,
            size: REFERENCE_SIZE,
            model: init_mlp(&[d, hidden[0], hidden[1], 2], classes, seed)?,
        })
    }

    pub fn score_image(&self, img: &RasterImage) -> Result<BackendOutput> {
        if self.mode != BackendMode::Identity {
            return Err(arity_error(self.mode.into(), ScoreInput::Single("")));
        }
        BackendOutput::new(self.mode, self.model.forward(&self.featurize(img)?)?)
    }

    pub fn score_pair(&self, a: &RasterImage, b: &RasterImage) -> Result<BackendOutput> {
        if self.mode != BackendMode::Pair {
            return Err(arity_error(self.mode.into(), ScoreInput::Pair("", "")));
        }
        let x = pair_feature(&self.featurize(a)?, &self.featurize(b)?);
        BackendOutput::new(self.mode, self.model.forward(&x)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::pipeline::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        crate::pipeline::read_json(path)
    }
}

/// Train the reference classifier on `(key, file, label)` items.
pub fn reference_classifier_train(
    items: &[(String, PathBuf, String)],
    mode: BackendMode,
    cfg: &ReferenceConfig,
) -> Result<ReferenceClassifier> {
    let labels: Vec<String> = items
        .iter()
        .map(|(_, _, l)| l.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if labels.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{mode:?} training needs at least two classes, got {}",
            labels.len()
        )));
    }
    let size = REFERENCE_SIZE;
    let features: Vec<Vec<f64>> = items
        .par_iter()
        .map(|(_, file, _)| RasterImage::load(file).and_then(|img| image_signal(&img, size, size)))
        .collect::<Result<_>>()?;
    let class_of: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let item_class: Vec<usize> = items.iter().map(|(_, _, l)| class_of[l.as_str()]).collect();

    let (data, classes): (Vec<(Vec<f64>, usize)>, Vec<String>) = match mode {
        BackendMode::Identity => {
            let data = features.into_iter().zip(item_class).collect();
            (data, labels)
        }
        BackendMode::Pair => {
            let pairs = sample_pairs(&item_class, cfg.max_pairs, seed::derive(cfg.seed, &[&"pairs"]))?;
            let data = pairs
                .into_iter()
                .map(|(i, j, class)| (pair_feature(&features[i], &features[j]), class))
                .collect();
            (data, PAIR_CLASSES.iter().map(|s| s.to_string()).collect())
        }
    };
    let d = (size * size * 3) as usize;
    let model = init_mlp(&[d, cfg.hidden[0], cfg.hidden[1], classes.len()], classes, cfg.seed)?;
    let tc = TrainConfig { epochs: cfg.epochs, learning_rate: cfg.learning_rate, seed: cfg.seed };
    let (model, history) = train(&model, &data, &tc)?;
    log::info!(
        "reference {mode:?} classifier: loss {:.4} -> {:.4}",
        history.first().copied().unwrap_or(f64::NAN),
        history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(ReferenceClassifier { mode, size, model })
}

/// Balanced same/different index pairs `(i, j, class)` with `i < j`.
fn sample_pairs(item_class: &[usize], max_pairs: usize, seed: u64) -> Result<Vec<(usize, usize, usize)>> {
    let mut rng = seed::rng(seed);
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in item_class.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut same: Vec<(usize, usize)> = by_class
        .values()
        .flat_map(|members| {
            members.iter().enumerate().flat_map(move |(a, &i)| members[a + 1..].iter().map(move |&j| (i, j)))
        })
        .collect();
    if same.is_empty() {
        return Err(Error::InvalidArgument("pair training needs a class with two or more images".into()));
    }
    same.shuffle(&mut rng);
    let half = (max_pairs / 2).max(1);
    same.truncate(half);

    let n = item_class.len();
    let mut seen = HashSet::new();
    let mut different = Vec::new();
    let mut tries = 0;
    while different.len() < same.len() && tries < 100 * half {
        tries += 1;
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if item_class[i] == item_class[j] {
            continue;
        }
        let key = (i.min(j), i.max(j));
        if seen.insert(key) {
            different.push(key);
        }
    }
    let n_pairs = same.len().min(different.len());
    Ok(same[..n_pairs]
        .iter()
        .map(|&(i, j)| (i, j, 0))
        .chain(different[..n_pairs].iter().map(|&(i, j)| (i, j, 1)))
        .collect())
}

/// A trained classifier reading images from `root`.
#[derive(Debug, Clone)]
pub struct LiveBackend {
    pub classifier: ReferenceClassifier,
    pub root: PathBuf,
}

impl LiveBackend {
    fn image(&self, key: &str) -> Result<RasterImage> {
        RasterImage::load(&self.root.join(key))
    }
}

impl Backend for LiveBackend {
    fn kind(&self) -> ScoreKind {
        self.classifier.mode.into()
    }

    fn score(&self, input: ScoreInput<'_>) -> Result<Score> {
        let out = match (self.classifier.mode, input) {
            (BackendMode::Identity, ScoreInput::Single(k)) => self.classifier.score_image(&self.image(k)?)?,
            (BackendMode::Pair, ScoreInput::Pair(a, b)) => {
                self.classifier.score_pair(&self.image(a)?, &self.image(b)?)?
            }
            _ => return Err(arity_error(self.kind(), input)),
        };
        Ok(Score::Activation(out))
    }
}
