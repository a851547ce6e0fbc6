use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::BackendMode;
use crate::error::{Error, Result};
use crate::fusion::{default_alpha_grid, DistanceMetric, Normalization};
use crate::seed::sha256_hex;
use crate::sparse_dict::CodingParams;
use crate::synthgen::{ColorTable, MIN_SHAPE_SIZE, STANDIN_CLASS_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Gen,
    LearnDict,
    Centroids,
    Encode,
    TrainCost,
    TrainBackend,
    Score,
    Fuse,
    EvalVerify,
    EvalIdentify,
}

impl Stage {
    /// Every stage in execution order.
    pub const ALL: [Stage; 10] = [
        Stage::Gen,
        Stage::LearnDict,
        Stage::Centroids,
        Stage::Encode,
        Stage::TrainCost,
        Stage::TrainBackend,
        Stage::Score,
        Stage::Fuse,
        Stage::EvalVerify,
        Stage::EvalIdentify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Gen => "gen",
            Stage::LearnDict => "learn-dict",
            Stage::Centroids => "centroids",
            Stage::Encode => "encode",
            Stage::TrainCost => "train-cost",
            Stage::TrainBackend => "train-backend",
            Stage::Score => "score",
            Stage::Fuse => "fuse",
            Stage::EvalVerify => "eval-verify",
            Stage::EvalIdentify => "eval-identify",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Side length of generated images.
    pub image_size: u32,
    pub color_per_class: usize,
    pub shape_per_class: usize,
    /// Stand-in texture classes, used when `texture_dir` is unset.
    pub texture_classes: usize,
    pub texture_per_class: usize,
    /// Optional corpus laid out as `<dir>/<class>/<image>`.
    pub texture_dir: Option<PathBuf>,
    /// Red sampled as R ∈ [200,255] with unconstrained G and B.
    pub wide_red: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            image_size: 64,
            color_per_class: 1000,
            shape_per_class: 1000,
            texture_classes: 47,
            texture_per_class: 120,
            texture_dir: None,
            wide_red: false,
        }
    }
}

impl DataConfig {
    pub fn color_table(&self) -> ColorTable {
        if self.wide_red {
            ColorTable::WideRed
        } else {
            ColorTable::Separable
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DictionaryConfig {
    /// Images are resized to `signal_size`² × 3 before coding.
    pub signal_size: u32,
    pub atoms: usize,
    pub lambda: f64,
    pub step: f64,
    /// Defaults to the value derived from `atoms` and the signal dimension.
    pub max_iters: Option<usize>,
    pub epochs: usize,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self { signal_size: 64, atoms: 128, lambda: 0.1, step: 0.01, max_iters: None, epochs: 100 }
    }
}

impl DictionaryConfig {
    pub fn coding_params(&self) -> CodingParams {
        let d = (self.signal_size * self.signal_size * 3) as usize;
        let reach = (2.0 * (d as f64).sqrt() / self.step).ceil() as usize;
        CodingParams {
            lambda: self.lambda,
            step: self.step,
            max_iters: self.max_iters.unwrap_or((10 * self.atoms).max(reach)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentityConfig {
    pub subjects: usize,
    pub train_per_subject: usize,
    pub val_per_subject: usize,
    /// The first test image of each subject is its gallery entry; the rest are probes.
    pub test_per_subject: usize,
    /// Cap on imposter pairs per verification list; all genuine pairs are kept.
    pub max_imposter_pairs: usize,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self { subjects: 20, train_per_subject: 4, val_per_subject: 3, test_per_subject: 3, max_imposter_pairs: 5000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostClassifierConfig {
    pub hidden: [usize; 2],
    pub epochs: usize,
    pub learning_rate: f64,
    /// Z-score features with statistics from the training split.
    pub standardize: bool,
}

impl Default for CostClassifierConfig {
    fn default() -> Self {
        Self { hidden: [64, 32], epochs: 20_000, learning_rate: 0.05, standardize: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Reference,
    Precomputed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub mode: BackendMode,
    /// Score CSV for `kind = "precomputed"`.
    pub table: Option<PathBuf>,
    pub hidden: [usize; 2],
    pub epochs: usize,
    pub learning_rate: f64,
    pub max_pairs: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Reference,
            mode: BackendMode::Identity,
            table: None,
            hidden: [64, 32],
            epochs: 500,
            learning_rate: 0.05,
            max_pairs: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// Weight of the COST distance when `fuse` does not run.
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub normalization: Normalization,
    pub distance: DistanceMetric,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            grid: default_alpha_grid(),
            normalization: Normalization::Minmax,
            distance: DistanceMetric::Euclidean,
        }
    }
}

fn all_stages() -> Vec<Stage> {
    Stage::ALL.to_vec()
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("run")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "all_stages")]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub dictionary: DictionaryConfig,
    #[serde(default)]
    pub identity: IdentityConfig,
    #[serde(default)]
    pub cost_classifier: CostClassifierConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: default_out_dir(),
            stages: all_stages(),
            data: DataConfig::default(),
            dictionary: DictionaryConfig::default(),
            identity: IdentityConfig::default(),
            cost_classifier: CostClassifierConfig::default(),
            backend: BackendConfig::default(),
            fusion: FusionConfig::default(),
        }
    }
}

fn config_error(field: &str, msg: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), msg: msg.into() }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "<document>".into());
            config_error(&field, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical serialisation.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if d.image_size < MIN_SHAPE_SIZE {
            return Err(config_error("data.image_size", format!("must be ≥ {MIN_SHAPE_SIZE}")));
        }
        for (field, v) in [
            ("data.color_per_class", d.color_per_class),
            ("data.shape_per_class", d.shape_per_class),
            ("data.texture_per_class", d.texture_per_class),
        ] {
            if v == 0 {
                return Err(config_error(field, "must be ≥ 1"));
            }
        }
        if d.texture_dir.is_none() && !(1..=STANDIN_CLASS_LIMIT).contains(&d.texture_classes) {
            return Err(config_error("data.texture_classes", format!("must be in 1..={STANDIN_CLASS_LIMIT}")));
        }

        let dc = &self.dictionary;
        if dc.signal_size == 0 {
            return Err(config_error("dictionary.signal_size", "must be ≥ 1"));
        }
        if dc.atoms == 0 {
            return Err(config_error("dictionary.atoms", "must be ≥ 1"));
        }
        if !(dc.lambda >= 0.0 && dc.lambda.is_finite()) {
            return Err(config_error("dictionary.lambda", "must be finite and ≥ 0"));
        }
        if !(dc.step > 0.0 && dc.step.is_finite()) {
            return Err(config_error("dictionary.step", "must be finite and > 0"));
        }
        if dc.max_iters == Some(0) {
            return Err(config_error("dictionary.max_iters", "must be ≥ 1"));
        }
        if dc.epochs == 0 {
            return Err(config_error("dictionary.epochs", "must be ≥ 1"));
        }

        let id = &self.identity;
        if id.subjects < 2 {
            return Err(config_error("identity.subjects", "must be ≥ 2"));
        }
        if id.train_per_subject == 0 {
            return Err(config_error("identity.train_per_subject", "must be ≥ 1"));
        }
        if id.val_per_subject < 2 {
            return Err(config_error("identity.val_per_subject", "must be ≥ 2 so genuine pairs exist"));
        }
        if id.test_per_subject < 2 {
            return Err(config_error("identity.test_per_subject", "must be ≥ 2 (one gallery image plus probes)"));
        }

        for (prefix, hidden, epochs, lr) in [
            ("cost_classifier", self.cost_classifier.hidden, self.cost_classifier.epochs, self.cost_classifier.learning_rate),
            ("backend", self.backend.hidden, self.backend.epochs, self.backend.learning_rate),
        ] {
            if hidden.contains(&0) {
                return Err(config_error(&format!("{prefix}.hidden"), "layer widths must be ≥ 1"));
            }
            if epochs == 0 {
                return Err(config_error(&format!("{prefix}.epochs"), "must be ≥ 1"));
            }
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(config_error(&format!("{prefix}.learning_rate"), "must be finite and > 0"));
            }
        }
        if self.backend.kind == BackendKind::Precomputed && self.backend.table.is_none() {
            return Err(config_error("backend.table", "required when kind = \"precomputed\""));
        }
        if self.backend.mode == BackendMode::Pair && self.backend.max_pairs < 2 {
            return Err(config_error("backend.max_pairs", "must be ≥ 2"));
        }

        let f = &self.fusion;
        if !(0.0..=1.0).contains(&f.alpha) {
            return Err(config_error("fusion.alpha", "must lie in [0, 1]"));
        }
        if f.grid.is_empty() {
            return Err(config_error("fusion.grid", "must not be empty"));
        }
        if let Some(i) = f.grid.iter().position(|a| !(0.0..=1.0).contains(a)) {
            return Err(config_error(&format!("fusion.grid[{i}]"), "must lie in [0, 1]"));
        }

        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.stages.iter().find(|s| !seen.insert(**s)) {
            return Err(config_error("stages", format!("`{dup}` listed twice")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_toml("seed = 1\n[dictionary]\natom = 5\n").unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
        assert_eq!(err.exit_code(), 1);
        assert!(RunConfig::from_toml("sed = 1\n").is_err());
    }

    #[test]
    fn validation_names_field() {
        let err = RunConfig::from_toml("[fusion]\nalpha = 1.5\n").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "fusion.alpha"),
            other => panic!("unexpected {other}"),
        }
        let err = RunConfig::from_toml("[fusion]\ngrid = [0.0, 2.0]\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "fusion.grid[1]"));
        let err = RunConfig::from_toml("[backend]\nkind = \"precomputed\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "backend.table"));
    }

    #[test]
    fn stage_names() {
        for s in Stage::ALL {
            assert_eq!(s.as_str().parse::<Stage>().unwrap(), s);
        }
        let cfg = RunConfig::from_toml("stages = [\"gen\", \"eval-verify\"]\n").unwrap();
        assert_eq!(cfg.stages, vec![Stage::Gen, Stage::EvalVerify]);
        assert!(RunConfig::from_toml("stages = []\n").unwrap().stages.is_empty());
    }

    #[test]
    fn coding_params_reach() {
        let mut d = DictionaryConfig { signal_size: 16, ..DictionaryConfig::default() };
        let p = d.coding_params();
        assert!(p.max_iters as f64 * p.step >= 2.0 * (768f64).sqrt());
        d.max_iters = Some(7);
        assert_eq!(d.coding_params().max_iters, 7);
    }
}
