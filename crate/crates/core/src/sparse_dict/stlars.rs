use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::dictionary::dot;
use super::Dictionary;
use crate::error::{Error, Result};

/// Coefficients of a signal over a dictionary's atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCode(Vec<f64>);

impl SparseCode {
    pub fn zeros(k: usize) -> Self {
        SparseCode(vec![0.0; k])
    }

    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    pub fn l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for SparseCode {
    fn from(v: Vec<f64>) -> Self {
        SparseCode(v)
    }
}

impl Deref for SparseCode {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Stagewise coding parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodingParams {
    /// L1 weight λ.
    pub lambda: f64,
    /// Stagewise increment ε.
    pub step: f64,
    pub max_iters: usize,
}

impl Default for CodingParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            step: 0.01,
            max_iters: 1280,
        }
    }
}

impl CodingParams {
    /// Defaults for `k` atoms of dimension `d`: ε = 0.01 and enough steps
    /// that `ε·max_iters` covers twice the largest [0,1]-signal norm `√d`.
    pub fn for_dictionary(k: usize, d: usize) -> Self {
        let step = 0.01;
        let reach = (2.0 * (d as f64).sqrt() / step).ceil() as usize;
        Self {
            lambda: 0.1,
            step,
            max_iters: (10 * k).max(reach),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument("lambda must be finite and ≥ 0".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument("step must be finite and > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// `‖x − D·h‖² + λ‖h‖₁`.
pub fn lasso_objective(d: &Dictionary, x: &[f64], h: &[f64], lambda: f64) -> Result<f64> {
    if x.len() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            got: x.len(),
        });
    }
    let code = SparseCode(h.to_vec());
    let rec = super::reconstruct(d, &code)?;
    let rss: f64 = x.iter().zip(&rec).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(rss + lambda * code.l1())
}

/// Forward-stagewise solve of the L1-penalised least-squares code for `x`.
///
/// Each iteration first tries a backward move, shrinking an active
/// coefficient by up to `step` when that lowers the penalised objective.
/// Otherwise the coefficient of the atom most correlated with the residual
/// moves by `±step` toward that correlation. Iteration stops when the largest
/// correlation is at most `λ/2`, when the forward move would not lower the
/// objective, or after `max_iters` moves.
pub fn stlars_encode(d: &Dictionary, x: &[f64], p: &CodingParams) -> Result<SparseCode> {
    run(d, x, p, None)
}

/// As [`stlars_encode`], also returning the penalised objective after every
/// accepted move (entry 0 is the objective of the zero code).
pub fn stlars_trace(d: &Dictionary, x: &[f64], p: &CodingParams) -> Result<(SparseCode, Vec<f64>)> {
    let mut trace = Vec::new();
    let h = run(d, x, p, Some(&mut trace))?;
    Ok((h, trace))
}

fn run(d: &Dictionary, x: &[f64], p: &CodingParams, mut trace: Option<&mut Vec<f64>>) -> Result<SparseCode> {
    p.validate()?;
    if x.len() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("signal".into()));
    }
    let k = d.k();
    let mut h: Vec<f64> = vec![0.0; k];
    let mut corr = d.correlate(x);
    let mut objective = dot(x, x);
    if let Some(t) = trace.as_deref_mut() {
        t.push(objective);
    }
    let threshold = p.lambda / 2.0;

    for _ in 0..p.max_iters {
        // backward move: shrink an active coefficient if that lowers the objective
        let mut backward: Option<(usize, f64, f64)> = None;
        for (j, &hj) in h.iter().enumerate() {
            if hj == 0.0 {
                continue;
            }
            let delta = -hj.signum() * p.step.min(hj.abs());
            let change = move_change(delta, corr[j], hj, p.lambda);
            if change < 0.0 && backward.is_none_or(|b| change < b.2) {
                backward = Some((j, delta, change));
            }
        }
        let (j, delta, change) = match backward {
            Some(b) => b,
            None => {
                let (j, cj) = corr
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((0, 0.0f64), |best, (i, c)| if c.abs() > best.1.abs() { (i, c) } else { best });
                if cj.abs() <= threshold {
                    break;
                }
                let delta = p.step.copysign(cj);
                let change = move_change(delta, cj, h[j], p.lambda);
                if change >= 0.0 {
                    break;
                }
                (j, delta, change)
            }
        };
        h[j] += delta;
        if h[j].abs() < 1e-15 {
            h[j] = 0.0;
        }
        for (i, c) in corr.iter_mut().enumerate() {
            *c -= delta * d.gram(i, j);
        }
        objective += change;
        if let Some(t) = trace.as_deref_mut() {
            t.push(objective);
        }
    }
    Ok(SparseCode(h))
}

/// Objective change from moving coefficient `h` by `delta` when the unit
/// atom's residual correlation is `c`: `‖r − δa‖² − ‖r‖² = δ² − 2δc`.
fn move_change(delta: f64, c: f64, h: f64, lambda: f64) -> f64 {
    delta * delta - 2.0 * delta * c + lambda * ((h + delta).abs() - h.abs())
}
