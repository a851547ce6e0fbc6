use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CodingParams;
use crate::error::{Error, Result};
use crate::synthgen::{resize_image, RasterImage, Subtype};

/// A flattened signal; image-derived signals hold intensities scaled to [0,1].
pub type Signal = Vec<f64>;

/// Resize `img` to `w`×`h` and flatten it to a [0,1] signal of length `w·h·3`.
pub fn image_signal(img: &RasterImage, w: u32, h: u32) -> Result<Signal> {
    let resized = resize_image(img, w, h)?;
    Ok(resized.data().iter().map(|&v| v as f64 / 255.0).collect())
}

/// `k` unit-norm atoms of dimension `d`, stored atom-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    subtype: Subtype,
    d: usize,
    k: usize,
    atoms: Vec<f64>,
    gram: Vec<f64>,
    params: CodingParams,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct DictionaryFile {
    subtype: Subtype,
    d: usize,
    k: usize,
    /// Row-major, one row per atom.
    atoms: Vec<f64>,
    params: CodingParams,
    seed: u64,
}

impl Dictionary {
    /// Build from raw atoms, normalising each to unit length.
    pub fn from_atoms(subtype: Subtype, atoms: Vec<Vec<f64>>) -> Result<Self> {
        let k = atoms.len();
        let d = atoms.first().map(Vec::len).unwrap_or(0);
        if k == 0 || d == 0 {
            return Err(Error::InvalidArgument("dictionary needs k ≥ 1 and d ≥ 1".into()));
        }
        let mut flat = Vec::with_capacity(k * d);
        for atom in atoms {
            if atom.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: atom.len(),
                });
            }
            flat.extend(atom);
        }
        Self::from_flat(subtype, d, k, flat, CodingParams::default(), 0)
    }

    pub(crate) fn from_flat(
        subtype: Subtype,
        d: usize,
        k: usize,
        mut atoms: Vec<f64>,
        params: CodingParams,
        seed: u64,
    ) -> Result<Self> {
        if atoms.len() != d * k {
            return Err(Error::DimensionMismatch {
                expected: d * k,
                got: atoms.len(),
            });
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dictionary atoms".into()));
        }
        for (j, atom) in atoms.chunks_exact_mut(d).enumerate() {
            let norm = atom.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidArgument(format!("atom {j} is the zero vector")));
            }
            atom.iter_mut().for_each(|v| *v /= norm);
        }
        let gram = gram(&atoms, d, k);
        Ok(Self {
            subtype,
            d,
            k,
            atoms,
            gram,
            params,
            seed,
        })
    }

    pub fn subtype(&self) -> Subtype {
        self.subtype
    }

    /// Atom dimension.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Atom count.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atom(&self, j: usize) -> &[f64] {
        &self.atoms[j * self.d..(j + 1) * self.d]
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        self.atoms.chunks_exact(self.d)
    }

    /// `⟨atom_i, atom_j⟩`.
    pub(crate) fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.k + j]
    }

    pub fn params(&self) -> &CodingParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_metadata(mut self, params: CodingParams, seed: u64) -> Self {
        self.params = params;
        self.seed = seed;
        self
    }

    /// `Dᵀx`.
    pub fn correlate(&self, x: &[f64]) -> Vec<f64> {
        self.atoms().map(|a| dot(a, x)).collect()
    }

    /// SHA-256 over the little-endian bit patterns of the atoms.
    pub fn checksum(&self) -> String {
        let bytes: Vec<u8> = self.atoms.iter().flat_map(|v| v.to_le_bytes()).collect();
        crate::seed::sha256_hex(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = DictionaryFile {
            subtype: self.subtype,
            d: self.d,
            k: self.k,
            atoms: self.atoms.clone(),
            params: self.params.clone(),
            seed: self.seed,
        };
        crate::pipeline::write_json(path, &file)
    }

    /// Load without renormalising, so stored values are preserved exactly.
    pub fn load(path: &Path) -> Result<Self> {
        let file: DictionaryFile = crate::pipeline::read_json(path)?;
        if file.atoms.len() != file.d * file.k || file.k == 0 || file.d == 0 {
            return Err(Error::parse(path, 1, "atom array does not match d × k"));
        }
        if file.atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(path.display().to_string()));
        }
        let gram = gram(&file.atoms, file.d, file.k);
        Ok(Self {
            subtype: file.subtype,
            d: file.d,
            k: file.k,
            atoms: file.atoms,
            gram,
            params: file.params,
            seed: file.seed,
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram(atoms: &[f64], d: usize, k: usize) -> Vec<f64> {
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let v = dot(&atoms[i * d..(i + 1) * d], &atoms[j * d..(j + 1) * d]);
            g[i * k + j] = v;
            g[j * k + i] = v;
        }
    }
    g
}
