use nalgebra::DMatrix;

use super::{Dictionary, Signal, SparseCode};
use crate::error::{Error, Result};

/// Ridge added to the code Gram matrix before solving for the atoms.
pub const MOD_RIDGE: f64 = 1e-6;

/// Result of one dictionary update.
#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub dictionary: Dictionary,
    /// Norm of each least-squares atom before renormalisation; multiply a
    /// code entry by its scale to keep `D·h` unchanged. Zero for atoms that
    /// were re-seeded or left untouched.
    pub scales: Vec<f64>,
    pub reseeded: Vec<usize>,
    /// The Gram system was not positive definite and per-atom gradient
    /// steps were used instead.
    pub fallback: bool,
}

/// Method-of-optimal-directions step: `D' = X·Hᵀ·(H·Hᵀ + ρI)⁻¹`, atoms
/// renormalised, unused atoms replaced by the worst-reconstructed signals.
pub fn dict_update(d: &Dictionary, xs: &[Signal], hs: &[SparseCode]) -> Result<UpdateOutcome> {
    let (dim, k) = (d.dim(), d.k());
    if xs.len() != hs.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: hs.len(),
        });
    }
    for (x, h) in xs.iter().zip(hs) {
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
        }
        if h.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: h.len() });
        }
    }

    let usage: Vec<usize> = (0..k)
        .map(|j| hs.iter().filter(|h| h[j] != 0.0).count())
        .collect();
    if usage.iter().all(|&u| u == 0) {
        return Ok(UpdateOutcome {
            dictionary: d.clone(),
            scales: vec![0.0; k],
            reseeded: Vec::new(),
            fallback: false,
        });
    }

    // A = H·Hᵀ + ρI (k×k), B = X·Hᵀ (d×k), accumulated in signal order
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut b = DMatrix::<f64>::zeros(dim, k);
    for (x, h) in xs.iter().zip(hs) {
        let active: Vec<(usize, f64)> = h
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| *v != 0.0)
            .collect();
        for &(i, hi) in &active {
            for &(j, hj) in &active {
                a[(i, j)] += hi * hj;
            }
            let mut col = b.column_mut(i);
            for (c, xv) in col.iter_mut().zip(x) {
                *c += hi * xv;
            }
        }
    }
    for j in 0..k {
        a[(j, j)] += MOD_RIDGE;
    }

    let current = DMatrix::<f64>::from_fn(dim, k, |r, c| d.atom(c)[r]);
    let (raw, fallback) = match a.clone().cholesky() {
        Some(chol) => {
            let solved = chol.solve(&b.transpose()); // k×d = D'ᵀ
            if solved.iter().all(|v| v.is_finite()) {
                (solved.transpose(), false)
            } else {
                (gradient_step(&current, &a, &b), true)
            }
        }
        None => (gradient_step(&current, &a, &b), true),
    };
    if fallback {
        log::warn!("dictionary update fell back to per-atom gradient steps");
    }

    let mut atoms: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut scales = vec![0.0; k];
    let mut dead = Vec::new();
    for j in 0..k {
        let col: Vec<f64> = raw.column(j).iter().copied().collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if usage[j] == 0 || norm.is_nan() || norm <= 1e-12 {
            dead.push(j);
            atoms.push(d.atom(j).to_vec());
        } else {
            scales[j] = norm;
            atoms.push(col.iter().map(|v| v / norm).collect());
        }
    }

    let mut reseeded = Vec::new();
    if !dead.is_empty() {
        // residual of the unnormalised least-squares fit
        let mut errors: Vec<(usize, f64)> = xs
            .iter()
            .zip(hs)
            .enumerate()
            .map(|(i, (x, h))| {
                let mut r = x.clone();
                for (j, &hj) in h.iter().enumerate() {
                    if hj != 0.0 {
                        for (rv, dv) in r.iter_mut().zip(raw.column(j).iter()) {
                            *rv -= hj * dv;
                        }
                    }
                }
                (i, r.iter().map(|v| v * v).sum::<f64>())
            })
            .collect();
        errors.sort_by(|p, q| q.1.total_cmp(&p.1).then(p.0.cmp(&q.0)));
        for (&j, &(i, err)) in dead.iter().zip(&errors) {
            let norm = xs[i].iter().map(|v| v * v).sum::<f64>().sqrt();
            if err > 1e-12 && norm > 0.0 {
                atoms[j] = xs[i].iter().map(|v| v / norm).collect();
                reseeded.push(j);
            }
        }
    }

    let dictionary = Dictionary::from_flat(
        d.subtype(),
        dim,
        k,
        atoms.concat(),
        d.params().clone(),
        d.seed(),
    )?;
    Ok(UpdateOutcome {
        dictionary,
        scales,
        reseeded,
        fallback,
    })
}

/// One block-coordinate step per atom: `d_j += (b_j − D·a_j) / A_jj`.
fn gradient_step(current: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = current.clone();
    for j in 0..a.ncols() {
        let ajj = a[(j, j)];
        if ajj <= 0.0 || !ajj.is_finite() {
            continue;
        }
        let grad = b.column(j) - &out * a.column(j);
        let mut col = out.column_mut(j);
        col += grad / ajj;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::Subtype;

    #[test]
    fn rank_one_target_direction() {
        let d = Dictionary::from_atoms(Subtype::Color, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let target = [0.0, 0.6, 0.8];
        let xs: Vec<Signal> = [2.0, 3.0, 0.5].iter().map(|s| target.iter().map(|v| v * s).collect()).collect();
        let hs: Vec<SparseCode> = [1.0, 1.5, 0.25].iter().map(|&c| SparseCode::from(vec![0.0, c])).collect();
        let out = dict_update(&d, &xs, &hs).unwrap();
        for (a, b) in out.dictionary.atom(1).iter().zip(target) {
            assert!((a - b).abs() < 1e-6);
        }
        // atom 0 unused and every signal reconstructed: kept as is
        assert!(out.reseeded.is_empty());
        assert_eq!(out.dictionary.atom(0), d.atom(0));
    }

    #[test]
    fn all_zero_codes_leave_dictionary_unchanged() {
        let d = Dictionary::from_atoms(Subtype::Color, vec![vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
        let xs = vec![vec![1.0, 1.0], vec![0.0, 3.0]];
        let hs = vec![SparseCode::zeros(2), SparseCode::zeros(2)];
        let out = dict_update(&d, &xs, &hs).unwrap();
        assert_eq!(out.dictionary, d);
        assert!(out.reseeded.is_empty());
    }

    #[test]
    fn dead_atom_reseeded_from_worst_signal() {
        let d = Dictionary::from_atoms(Subtype::Color, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let xs = vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 2.0]];
        let hs = vec![SparseCode::from(vec![1.0, 0.0]), SparseCode::from(vec![0.0, 0.0])];
        let out = dict_update(&d, &xs, &hs).unwrap();
        assert_eq!(out.reseeded, vec![1]);
        assert_eq!(out.dictionary.atom(1), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn atoms_unit_norm_after_update() {
        let d = Dictionary::from_atoms(
            Subtype::Color,
            vec![vec![1.0, 0.3, 0.1, 0.0], vec![0.2, 1.0, 0.0, 0.4], vec![0.0, 0.1, 1.0, 1.0]],
        )
        .unwrap();
        let xs: Vec<Signal> = (0..12)
            .map(|i| (0..4).map(|j| ((i * 5 + j * 3) as f64).cos()).collect())
            .collect();
        let p = super::super::CodingParams { lambda: 0.05, step: 0.01, max_iters: 400 };
        let hs: Vec<SparseCode> = xs.iter().map(|x| super::super::stlars_encode(&d, x, &p).unwrap()).collect();
        let out = dict_update(&d, &xs, &hs).unwrap();
        for atom in out.dictionary.atoms() {
            let n = atom.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() <= 1e-9);
        }
    }
}
