use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dict_update, objective, stlars_encode, CodingParams, Dictionary, Signal, SparseCode};
use crate::error::{Error, Result};
use crate::seed;
use crate::synthgen::Subtype;

/// Per-epoch trace of a dictionary-learning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnReport {
    /// Mean penalised objective of each epoch's codes against the dictionary
    /// they were computed with.
    pub objectives: Vec<f64>,
    /// Objective of fresh codes against the final dictionary.
    pub final_objective: f64,
    /// Epochs run; equals `objectives.len()`.
    pub epochs: usize,
    /// Epoch whose update was rejected for raising the objective; learning
    /// stopped there with the previous dictionary.
    #[serde(default)]
    pub stopped_at: Option<usize>,
    pub checksum: String,
    pub reseeded: usize,
    pub fallbacks: usize,
}

/// Encode every signal against `d`; codes come back in signal order.
pub(crate) fn encode_all(d: &Dictionary, xs: &[Signal], p: &CodingParams) -> Result<Vec<SparseCode>> {
    xs.par_iter().map(|x| stlars_encode(d, x, p)).collect()
}

/// Alternate stagewise coding and MOD updates for up to `epochs` rounds.
///
/// An update that raises the objective is discarded and learning stops, so
/// the recorded objectives never increase.
///
/// The initial dictionary holds `k` distinct training signals picked with
/// `seed`; if there are fewer than `k` usable signals the remainder are
/// random unit vectors.
pub fn learn_dictionary(
    subtype: Subtype,
    xs: &[Signal],
    k: usize,
    p: &CodingParams,
    epochs: usize,
    seed: u64,
) -> Result<(Dictionary, LearnReport)> {
    p.validate()?;
    if xs.is_empty() {
        return Err(Error::InvalidArgument("no training signals".into()));
    }
    if k == 0 || epochs == 0 {
        return Err(Error::InvalidArgument("k and epochs must be ≥ 1".into()));
    }
    let dim = xs[0].len();
    if let Some(bad) = xs.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }

    let mut rng = seed::rng(seed);
    let usable: Vec<usize> = (0..xs.len())
        .filter(|&i| xs[i].iter().any(|v| *v != 0.0))
        .collect();
    let take = k.min(usable.len());
    let mut atoms: Vec<Vec<f64>> = index::sample(&mut rng, usable.len(), take)
        .into_iter()
        .map(|i| xs[usable[i]].clone())
        .collect();
    if take < k {
        log::warn!("{subtype}: only {take} usable signals for {k} atoms; padding with random unit vectors");
        while atoms.len() < k {
            atoms.push((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
        }
    }
    let mut d = Dictionary::from_atoms(subtype, atoms)?.with_metadata(p.clone(), seed);

    let mut objectives: Vec<f64> = Vec::with_capacity(epochs);
    let (mut reseeded, mut fallbacks) = (0, 0);
    let mut previous: Option<Dictionary> = None;
    let mut stopped_at = None;
    let mut final_objective = f64::NAN;
    for epoch in 0..=epochs {
        let hs = encode_all(&d, xs, p)?;
        let obj = objective(&d, xs, &hs, p.lambda)?;
        if !obj.is_finite() {
            return Err(Error::Numeric(format!("{subtype}: objective is {obj} at epoch {}", epoch + 1)));
        }
        if let (Some(prev), Some(&last)) = (previous.take(), objectives.last()) {
            if obj > last {
                log::info!("{subtype}: update at epoch {epoch} raised the objective ({last:.6} -> {obj:.6}); stopping");
                d = prev;
                stopped_at = Some(epoch);
                final_objective = last;
                break;
            }
        }
        if epoch == epochs {
            final_objective = obj;
            break;
        }
        objectives.push(obj);
        log::debug!("{subtype} epoch {}: objective {obj:.6}", epoch + 1);
        let out = dict_update(&d, xs, &hs)?;
        reseeded += out.reseeded.len();
        fallbacks += out.fallback as usize;
        previous = Some(std::mem::replace(&mut d, out.dictionary));
    }
    let report = LearnReport {
        epochs: objectives.len(),
        objectives,
        final_objective,
        stopped_at,
        checksum: d.checksum(),
        reseeded,
        fallbacks,
    };
    Ok((d, report))
}
