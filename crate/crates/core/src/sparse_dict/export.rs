use std::path::Path;

use super::Dictionary;
use crate::error::{Error, Result};
use crate::synthgen::RasterImage;

/// Tile the atoms, each min–max rescaled to [0,255], into a near-square grid PNG.
///
/// Atoms are read as `w`×`h`×3 row-major images. Returns the grid as written.
pub fn export_atoms(d: &Dictionary, w: u32, h: u32, path: &Path) -> Result<RasterImage> {
    let tile = w as usize * h as usize * 3;
    if tile != d.dim() {
        return Err(Error::InvalidArgument(format!(
            "atoms of dimension {} are not {w}x{h}x3 images",
            d.dim()
        )));
    }
    let k = d.k();
    let cols = (k as f64).sqrt().ceil() as usize;
    let rows = k.div_ceil(cols);
    let (gw, gh) = (cols as u32 * w, rows as u32 * h);
    let mut grid = RasterImage::filled(gw, gh, [0, 0, 0]);
    for (j, atom) in d.atoms().enumerate() {
        let lo = atom.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = atom.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let (ox, oy) = ((j % cols) as u32 * w, (j / cols) as u32 * h);
        for y in 0..h {
            for x in 0..w {
                let base = (y as usize * w as usize + x as usize) * 3;
                let px: [u8; 3] = std::array::from_fn(|c| {
                    if span > 0.0 {
                        ((atom[base + c] - lo) / span * 255.0).round() as u8
                    } else {
                        128
                    }
                });
                grid.put_pixel(ox + x, oy + y, px);
            }
        }
    }
    grid.save_png(path)?;
    Ok(grid)
}
