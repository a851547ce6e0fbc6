//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random unit-norm atoms (atom-major) and a Gaussian signal.
pub fn random_lasso_instance(rng: &mut ChaCha8Rng, d: usize, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let atoms = (0..k)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let x = (0..d).map(|_| gaussian(rng)).collect();
    (atoms, x)
}

/// `‖x − Σ h_j a_j‖² + λ‖h‖₁`, evaluated directly.
pub fn lasso_value(atoms: &[Vec<f64>], x: &[f64], h: &[f64], lambda: f64) -> f64 {
    let mut r = x.to_vec();
    for (a, &c) in atoms.iter().zip(h) {
        for (ri, ai) in r.iter_mut().zip(a) {
            *ri -= c * ai;
        }
    }
    r.iter().map(|v| v * v).sum::<f64>() + lambda * h.iter().map(|v| v.abs()).sum::<f64>()
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for `‖x − A·h‖² + λ‖h‖₁`, run until the largest
/// coordinate change is below `1e-13` (or 100k sweeps).
pub fn lasso_cd(atoms: &[Vec<f64>], x: &[f64], lambda: f64) -> Vec<f64> {
    let k = atoms.len();
    let sq: Vec<f64> = atoms.iter().map(|a| a.iter().map(|v| v * v).sum()).collect();
    let mut h = vec![0.0; k];
    let mut r = x.to_vec();
    for _ in 0..100_000 {
        let mut max_change = 0.0f64;
        for j in 0..k {
            if sq[j] == 0.0 {
                continue;
            }
            let rho: f64 = atoms[j].iter().zip(&r).map(|(a, ri)| a * ri).sum::<f64>() + sq[j] * h[j];
            let new = soft(rho, lambda / 2.0) / sq[j];
            let delta = new - h[j];
            if delta != 0.0 {
                for (ri, a) in r.iter_mut().zip(&atoms[j]) {
                    *ri -= delta * a;
                }
                h[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < 1e-13 {
            break;
        }
    }
    h
}

/// Dense least squares `min_D Σ‖x_i − D h_i‖²` via the normal equations,
/// solved by Gaussian elimination with partial pivoting. Returns atoms column-wise.
pub fn least_squares_dictionary(xs: &[Vec<f64>], hs: &[Vec<f64>], ridge: f64) -> Vec<Vec<f64>> {
    let k = hs[0].len();
    let d = xs[0].len();
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![vec![0.0; d]; k]; // b[j] = Σ h_ij x_i
    for (x, h) in xs.iter().zip(hs) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += h[i] * h[j];
            }
            for t in 0..d {
                b[i][t] += h[i] * x[t];
            }
        }
    }
    for (j, row) in a.iter_mut().enumerate() {
        row[j] += ridge;
    }
    // solve A · Y = B where Y row j = atom j
    let n = k;
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for c in 0..n {
                        a[row][c] -= f * a[col][c];
                    }
                    for t in 0..d {
                        b[row][t] -= f * b[col][t];
                    }
                }
            }
        }
    }
    (0..n).map(|j| b[j].iter().map(|v| v / a[j][j]).collect()).collect()
}

/// Brute-force GAR at the largest threshold whose FAR ≤ `far` (threshold
/// candidates are every observed distance plus −∞).
pub fn brute_gar_at_far(genuine: &[f64], imposter: &[f64], far: f64) -> f64 {
    let mut best_t = f64::NEG_INFINITY;
    for &t in genuine.iter().chain(imposter) {
        let fa = imposter.iter().filter(|&&d| d <= t).count() as f64 / imposter.len() as f64;
        if fa <= far && t > best_t {
            best_t = t;
        }
    }
    genuine.iter().filter(|&&d| d <= best_t).count() as f64 / genuine.len() as f64
}

/// Brute-force CMC: for each probe count gallery entries that strictly beat
/// the best correct entry, or tie it at a lower index.
pub fn brute_cmc(dist: &[Vec<f64>], probe_ids: &[usize], gallery_ids: &[usize]) -> Vec<f64> {
    let g = gallery_ids.len();
    let mut ranks = Vec::new();
    for (p, row) in dist.iter().enumerate() {
        let mut best_rank = usize::MAX;
        for (gi, &id) in gallery_ids.iter().enumerate() {
            if id != probe_ids[p] {
                continue;
            }
            let ahead = (0..g)
                .filter(|&o| row[o] < row[gi] || (row[o] == row[gi] && o < gi))
                .count();
            best_rank = best_rank.min(ahead + 1);
        }
        ranks.push(best_rank);
    }
    (1..=g)
        .map(|r| ranks.iter().filter(|&&k| k <= r).count() as f64 / ranks.len() as f64)
        .collect()
}

/// Mean cross-entropy of a ReLU/softmax network computed from a flat
/// parameter vector (per layer: `fan_in × fan_out` row-major weights, then biases).
pub fn mlp_loss(sizes: &[usize], params: &[f64], data: &[(Vec<f64>, usize)]) -> f64 {
    let mut total = 0.0;
    for (x, class) in data {
        let mut a = x.clone();
        let mut off = 0;
        for l in 0..sizes.len() - 1 {
            let (fi, fo) = (sizes[l], sizes[l + 1]);
            let w = &params[off..off + fi * fo];
            let b = &params[off + fi * fo..off + fi * fo + fo];
            off += fi * fo + fo;
            let mut z: Vec<f64> = (0..fo).map(|o| b[o] + (0..fi).map(|i| a[i] * w[i * fo + o]).sum::<f64>()).collect();
            if l + 2 < sizes.len() {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            a = z;
        }
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + a.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        total += lse - a[*class];
    }
    total / data.len() as f64
}
