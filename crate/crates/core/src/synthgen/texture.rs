use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;

use super::{resize_image, DatasetManifest, ManifestEntry, RasterImage, Subtype};
use crate::error::{Error, Result};
use crate::seed;

/// The procedural stand-in corpus supports up to this many distinct classes.
pub const STANDIN_CLASS_LIMIT: usize = 48;

const FAMILIES: usize = 6;

const PALETTE: [([f64; 3], [f64; 3]); 5] = [
    ([30.0, 30.0, 30.0], [220.0, 220.0, 220.0]),
    ([90.0, 50.0, 20.0], [210.0, 180.0, 130.0]),
    ([20.0, 60.0, 30.0], [150.0, 210.0, 120.0]),
    ([30.0, 40.0, 110.0], [170.0, 190.0, 240.0]),
    ([110.0, 20.0, 40.0], [240.0, 170.0, 150.0]),
];

pub fn standin_label(class_index: usize) -> String {
    format!("standin_{class_index:02}")
}

/// A procedural texture for stand-in class `class_index`.
///
/// Classes differ by pattern family (stripes, checkers, dots, rings,
/// crosshatch, blocky noise) and by frequency/orientation; each image varies
/// in phase and tint.
pub fn gen_texture_standin(class_index: usize, seed: u64, size: u32) -> Result<RasterImage> {
    if class_index >= STANDIN_CLASS_LIMIT {
        return Err(Error::InvalidClass {
            subtype: Subtype::Texture.to_string(),
            label: standin_label(class_index),
        });
    }
    if size == 0 {
        return Err(Error::InvalidArgument("image size must be ≥ 1".into()));
    }
    let family = class_index % FAMILIES;
    let variant = (class_index / FAMILIES) as f64;
    let (dark, light) = PALETTE[class_index % PALETTE.len()];
    let mut rng = seed::rng(seed);
    let scale = size as f64 / 64.0;
    let phase_x = rng.random_range(0.0..64.0) * scale;
    let phase_y = rng.random_range(0.0..64.0) * scale;
    let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(-15.0..=15.0));
    let cells: Vec<f64> = (0..64 * 64).map(|_| rng.random_range(0.0..1.0)).collect();

    let angle = variant * PI / 8.0;
    let (sin, cos) = angle.sin_cos();
    let n = size as usize;
    let mut data = Vec::with_capacity(n * n * 3);
    for y in 0..n {
        for x in 0..n {
            let (px, py) = (x as f64 + phase_x, y as f64 + phase_y);
            let u = px * cos + py * sin;
            let v = -px * sin + py * cos;
            let t = match family {
                0 => {
                    let period = (4.0 + 2.0 * variant) * scale;
                    0.5 + 0.5 * (2.0 * PI * u / period).sin()
                }
                1 => {
                    let period = (3.0 + 2.0 * variant) * scale;
                    let cx = (px / period).floor() as i64;
                    let cy = (py / period).floor() as i64;
                    ((cx + cy).rem_euclid(2)) as f64
                }
                2 => {
                    let spacing = (6.0 + 2.0 * variant) * scale;
                    let fx = px.rem_euclid(spacing) - spacing / 2.0;
                    let fy = py.rem_euclid(spacing) - spacing / 2.0;
                    if fx.hypot(fy) < spacing / 4.0 { 1.0 } else { 0.0 }
                }
                3 => {
                    let period = (5.0 + 2.0 * variant) * scale;
                    let r = (x as f64 - phase_x / 2.0).hypot(y as f64 - phase_y / 2.0);
                    0.5 + 0.5 * (2.0 * PI * r / period).cos()
                }
                4 => {
                    let period = (6.0 + 2.0 * variant) * scale;
                    let a = (2.0 * PI * u / period).sin();
                    let b = (2.0 * PI * v / period).sin();
                    if a.abs() < 0.3 || b.abs() < 0.3 { 1.0 } else { 0.0 }
                }
                _ => {
                    let cell = (2.0 + 2.0 * variant) * scale;
                    let cx = ((px / cell).floor() as usize) % 64;
                    let cy = ((py / cell).floor() as usize) % 64;
                    cells[cy * 64 + cx]
                }
            };
            for c in 0..3 {
                let value = dark[c] + t * (light[c] - dark[c]) + tint[c];
                data.push(value.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RasterImage::new(size, size, data)
}

/// Outcome of ingesting an external texture corpus.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub manifest: DatasetManifest,
    pub skipped: Vec<PathBuf>,
}

/// Resize every image under `root_dir/<class>/` to `size`×`size` and write it
/// as PNG under `out_dir/texture/<class>/`.
///
/// Unreadable images are skipped with a warning and listed in the report.
pub fn ingest_texture_dir(root_dir: &Path, size: u32, out_dir: &Path) -> Result<IngestReport> {
    let mut class_dirs: Vec<PathBuf> = std::fs::read_dir(root_dir)
        .map_err(|e| Error::io(root_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} has no class subdirectories",
            root_dir.display()
        )));
    }

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for dir in &class_dirs {
        let label = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::InvalidArgument(format!("non-UTF-8 class dir {}", dir.display())))?
            .to_string();
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for file in files {
            let img = match RasterImage::load(&file) {
                Ok(img) => img,
                Err(err) => {
                    log::warn!("skipping unreadable texture image: {err}");
                    skipped.push(file);
                    continue;
                }
            };
            let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
            let rel = PathBuf::from("texture").join(&label).join(format!("{stem}.png"));
            resize_image(&img, size, size)?.save_png(&out_dir.join(&rel))?;
            entries.push(ManifestEntry {
                path: rel,
                subtype: Subtype::Texture,
                label: label.clone(),
            });
        }
    }
    if entries.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} contains no readable images",
            root_dir.display()
        )));
    }
    Ok(IngestReport {
        manifest: DatasetManifest {
            root: out_dir.to_path_buf(),
            entries,
            seed: 0,
            image_size: size,
        },
        skipped,
    })
}
