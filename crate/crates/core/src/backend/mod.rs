//! Supervised backend: anything that turns an image or an image pair into a
//! softmax activation, or directly into a pair distance.
//!
//! Two implementations share the [`Backend`] trait: a small pixel-space
//! reference classifier and tables of precomputed scores exported by an
//! external model.

mod reference;
mod table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{activation_distance, DistanceMetric};

pub use reference::{
    pair_feature, reference_classifier_train, LiveBackend, ReferenceClassifier, ReferenceConfig, PAIR_CLASSES,
    REFERENCE_SIZE,
};
pub use table::PrecomputedScoreTable;

/// Identity: n-way softmax over training identities. Pair: `[same, different]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    Identity,
    Pair,
}

/// What a backend emits per query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Identity,
    Pair,
    /// A scalar pair distance.
    Distance,
}

impl From<BackendMode> for ScoreKind {
    fn from(m: BackendMode) -> Self {
        match m {
            BackendMode::Identity => ScoreKind::Identity,
            BackendMode::Pair => ScoreKind::Pair,
        }
    }
}

/// Tolerance on the activation sum for externally produced vectors.
const SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendOutput {
    mode: BackendMode,
    activation: Vec<f64>,
}

impl BackendOutput {
    pub fn new(mode: BackendMode, activation: Vec<f64>) -> Result<Self> {
        if activation.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "activation needs at least two entries, got {}",
                activation.len()
            )));
        }
        if mode == BackendMode::Pair && activation.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: activation.len() });
        }
        if activation.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidArgument("activation entries must lie in [0, 1]".into()));
        }
        let sum: f64 = activation.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("activation sums to {sum}, not 1")));
        }
        Ok(Self { mode, activation })
    }

    pub fn mode(&self) -> BackendMode {
        self.mode
    }

    pub fn activation(&self) -> &[f64] {
        &self.activation
    }

    /// Probability that a pair shows different subjects.
    pub fn p_different(&self) -> Option<f64> {
        (self.mode == BackendMode::Pair).then(|| self.activation[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreInput<'a> {
    Single(&'a str),
    Pair(&'a str, &'a str),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Score {
    Activation(BackendOutput),
    Distance(f64),
}

/// Keys are image paths relative to the dataset root.
pub trait Backend: Sync {
    fn kind(&self) -> ScoreKind;

    fn score(&self, input: ScoreInput<'_>) -> Result<Score>;
}

pub(crate) fn arity_error(kind: ScoreKind, input: ScoreInput<'_>) -> Error {
    let got = match input {
        ScoreInput::Single(_) => "a single image",
        ScoreInput::Pair(..) => "an image pair",
    };
    Error::InvalidArgument(format!("{kind:?} backend cannot score {got}"))
}

/// Supervised distance between two images.
///
/// Identity backends compare the two activations under `metric`; pair
/// backends use the probability of "different"; distance tables return
/// the stored value.
pub fn supervised_distance(backend: &dyn Backend, a: &str, b: &str, metric: DistanceMetric) -> Result<f64> {
    match backend.kind() {
        ScoreKind::Identity => {
            let pa = expect_activation(backend.score(ScoreInput::Single(a))?)?;
            let pb = expect_activation(backend.score(ScoreInput::Single(b))?)?;
            activation_distance(pa.activation(), pb.activation(), metric)
        }
        ScoreKind::Pair => {
            let p = expect_activation(backend.score(ScoreInput::Pair(a, b))?)?;
            Ok(p.activation[1])
        }
        ScoreKind::Distance => match backend.score(ScoreInput::Pair(a, b))? {
            Score::Distance(d) => Ok(d),
            Score::Activation(_) => Err(Error::InvalidArgument("distance backend returned an activation".into())),
        },
    }
}

fn expect_activation(s: Score) -> Result<BackendOutput> {
    match s {
        Score::Activation(a) => Ok(a),
        Score::Distance(_) => Err(Error::InvalidArgument("expected an activation, got a distance".into())),
    }
}
