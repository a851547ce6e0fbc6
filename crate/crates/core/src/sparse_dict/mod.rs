//! Sparse coding with stagewise least-angle steps and batch dictionary learning.
//!
//! Codes minimise `‖x − D·h‖² + λ‖h‖₁` per signal; dictionaries minimise the
//! mean of that quantity over a training set under unit-norm atoms.

mod dictionary;
mod export;
mod learn;
mod stlars;
mod update;

pub use dictionary::{image_signal, Dictionary, Signal};
pub use export::export_atoms;
pub use learn::{learn_dictionary, LearnReport};
pub(crate) use learn::encode_all;
pub use stlars::{lasso_objective, stlars_encode, stlars_trace, CodingParams, SparseCode};
pub use update::{dict_update, UpdateOutcome, MOD_RIDGE};

use crate::error::{Error, Result};

/// Mean penalised reconstruction error over a training set.
pub fn objective(d: &Dictionary, xs: &[Signal], hs: &[SparseCode], lambda: f64) -> Result<f64> {
    if xs.len() != hs.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: hs.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::InvalidArgument("objective needs at least one signal".into()));
    }
    let mut total = 0.0;
    for (x, h) in xs.iter().zip(hs) {
        total += lasso_objective(d, x, h, lambda)?;
    }
    Ok(total / xs.len() as f64)
}

/// `D·h`.
pub fn reconstruct(d: &Dictionary, h: &SparseCode) -> Result<Signal> {
    if h.len() != d.k() {
        return Err(Error::DimensionMismatch {
            expected: d.k(),
            got: h.len(),
        });
    }
    let mut out = vec![0.0; d.dim()];
    for (j, &c) in h.iter().enumerate() {
        if c != 0.0 {
            for (o, a) in out.iter_mut().zip(d.atom(j)) {
                *o += c * a;
            }
        }
    }
    Ok(out)
}
