//! Feed-forward classifier: rectified hidden layers and a softmax output,
//! trained by full-batch gradient descent on mean cross-entropy.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const ACTIVATION: &str = "relu-softmax";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    activation: String,
    classes: Vec<String>,
    /// Per layer, `fan_in × fan_out` row-major.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20_000,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

/// Gradients with the same layout as the model parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Initialise weights uniformly in `±√(6/(fan_in+fan_out))`, biases zero.
///
/// `layer_sizes` is `[input, hidden.., n_classes]` with at least two hidden
/// layers; `classes` names the outputs in order.
pub fn init_mlp(layer_sizes: &[usize], classes: Vec<String>, seed: u64) -> Result<MlpModel> {
    if layer_sizes.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need input, two or more hidden layers and an output, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::InvalidArgument(format!("zero-width layer in {layer_sizes:?}")));
    }
    let n_out = *layer_sizes.last().unwrap();
    if classes.len() != n_out {
        return Err(Error::DimensionMismatch { expected: n_out, got: classes.len() });
    }
    let mut rng = seed::rng(seed);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push((0..fan_in * fan_out).map(|_| rng.random_range(-limit..=limit)).collect());
        biases.push(vec![0.0; fan_out]);
    }
    Ok(MlpModel {
        layer_sizes: layer_sizes.to_vec(),
        activation: ACTIVATION.to_string(),
        classes,
        weights,
        biases,
    })
}

impl MlpModel {
    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn parameters(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), got: params.len() });
        }
        let mut it = params.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            w.iter_mut().chain(b.iter_mut()).for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    /// Set every weight and bias to zero.
    pub fn zeroed(mut self) -> Self {
        self.weights.iter_mut().chain(self.biases.iter_mut()).for_each(|v| v.fill(0.0));
        self
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("classifier input".into()));
        }
        Ok(())
    }

    /// Pre-activations and activations of every layer; the last activation is the logits.
    fn layers_forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let last = self.weights.len() - 1;
        let mut acts = vec![x.to_vec()];
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let input = acts.last().unwrap();
            let out = b.len();
            let mut z = b.clone();
            for (i, &a) in input.iter().enumerate() {
                if a != 0.0 {
                    let row = &w[i * out..(i + 1) * out];
                    for (zo, wo) in z.iter_mut().zip(row) {
                        *zo += a * wo;
                    }
                }
            }
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.layers_forward(x).pop().unwrap())
    }

    /// Softmax class posteriors for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Mean cross-entropy and its gradient over `data`.
    pub fn gradients(&self, data: &[(Vec<f64>, usize)]) -> Result<(f64, Gradients)> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("no training samples".into()));
        }
        let n = data.len() as f64;
        let mut gw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut loss = 0.0;
        for (x, class) in data {
            self.check_input(x)?;
            if *class >= self.n_classes() {
                return Err(Error::InvalidArgument(format!(
                    "class index {class} ≥ {} outputs",
                    self.n_classes()
                )));
            }
            let acts = self.layers_forward(x);
            let p = softmax(acts.last().unwrap());
            loss -= p[*class].max(f64::MIN_POSITIVE).ln();
            let mut delta = p;
            delta[*class] -= 1.0;
            for l in (0..self.weights.len()).rev() {
                let input = &acts[l];
                let out = delta.len();
                for (i, &a) in input.iter().enumerate() {
                    if a != 0.0 {
                        let row = &mut gw[l][i * out..(i + 1) * out];
                        for (g, d) in row.iter_mut().zip(&delta) {
                            *g += a * d;
                        }
                    }
                }
                for (g, d) in gb[l].iter_mut().zip(&delta) {
                    *g += d;
                }
                if l > 0 {
                    let w = &self.weights[l];
                    delta = input
                        .iter()
                        .enumerate()
                        .map(|(i, &a)| {
                            if a > 0.0 {
                                w[i * out..(i + 1) * out].iter().zip(&delta).map(|(wv, d)| wv * d).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        gw.iter_mut().chain(gb.iter_mut()).flatten().for_each(|g| *g /= n);
        Ok((loss / n, Gradients { weights: gw, biases: gb }))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::pipeline::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: MlpModel = crate::pipeline::read_json(path)?;
        let shapes_ok = m.layer_sizes.len() >= 2
            && m.weights.len() == m.layer_sizes.len() - 1
            && m.biases.len() == m.weights.len()
            && m.layer_sizes.windows(2).zip(m.weights.iter().zip(&m.biases)).all(|(s, (w, b))| {
                w.len() == s[0] * s[1] && b.len() == s[1]
            })
            && m.classes.len() == m.n_classes();
        if !shapes_ok {
            return Err(Error::parse(path, 1, "parameter shapes do not match layer sizes"));
        }
        if m.parameters().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(path.display().to_string()));
        }
        Ok(m)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Full-batch gradient descent for `cfg.epochs` epochs.
///
/// Returns the trained model and the loss of each epoch (measured before
/// that epoch's update).
pub fn train(model: &MlpModel, data: &[(Vec<f64>, usize)], cfg: &TrainConfig) -> Result<(MlpModel, Vec<f64>)> {
    if cfg.epochs == 0 || cfg.learning_rate.is_nan() || cfg.learning_rate <= 0.0 {
        return Err(Error::InvalidArgument("epochs ≥ 1 and learning_rate > 0 required".into()));
    }
    let mut m = model.clone();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (loss, g) = m.gradients(data)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("loss became {loss} at epoch {}", epoch + 1)));
        }
        history.push(loss);
        for (w, gw) in m.weights.iter_mut().zip(&g.weights) {
            w.iter_mut().zip(gw).for_each(|(p, d)| *p -= cfg.learning_rate * d);
        }
        for (b, gb) in m.biases.iter_mut().zip(&g.biases) {
            b.iter_mut().zip(gb).for_each(|(p, d)| *p -= cfg.learning_rate * d);
        }
    }
    Ok((m, history))
}

/// Row-wise [`MlpModel::forward`].
pub fn predict_proba(m: &MlpModel, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    xs.iter().map(|x| m.forward(x)).collect()
}

pub fn accuracy(m: &MlpModel, data: &[(Vec<f64>, usize)]) -> Result<f64> {
    let mut correct = 0;
    for (x, c) in data {
        let p = m.forward(x)?;
        let argmax = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap();
        correct += (argmax == *c) as usize;
    }
    Ok(correct as f64 / data.len().max(1) as f64)
}
