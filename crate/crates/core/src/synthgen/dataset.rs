use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{
    gen_color_image, gen_shape_image, gen_texture_standin, standin_label, ColorTable,
    RasterImage, Subtype, COLOR_CLASSES, SHAPE_CLASSES,
};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Relative to the manifest root.
    pub path: PathBuf,
    pub subtype: Subtype,
    pub label: String,
}

/// A list of labeled images. Entry paths are relative to `root`, which is
/// the directory holding the manifest file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
    pub seed: u64,
    pub image_size: u32,
}

impl DatasetManifest {
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn count(&self, label: &str) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    /// Distinct labels in first-appearance order.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.label) {
                out.push(e.label.clone());
            }
        }
        out
    }

    /// Write `path,subtype,label` CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["path", "subtype", "label"])?;
        for e in &self.entries {
            w.write_record([&portable(&e.path), e.subtype.as_str(), &e.label])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["path", "subtype", "label"] {
            return Err(Error::parse(path, 1, "expected header `path,subtype,label`"));
        }
        let mut entries = Vec::new();
        for (i, row) in r.records().enumerate() {
            let row = row?;
            let line = i + 2;
            if row.len() != 3 {
                return Err(Error::parse(path, line, "expected 3 fields"));
            }
            let subtype = row[1]
                .parse()
                .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
            entries.push(ManifestEntry {
                path: PathBuf::from(&row[0]),
                subtype,
                label: row[2].to_string(),
            });
        }
        Ok(Self {
            root: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            entries,
            seed: 0,
            image_size: 0,
        })
    }
}

pub(crate) fn portable(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Seed for image `index` of class `class_index` within `subtype`.
pub(crate) fn image_seed(master: u64, subtype: Subtype, class_index: usize, index: usize) -> u64 {
    seed::derive(master, &[&subtype.as_str(), &class_index, &index])
}

/// Generate `per_class` images for every color or shape class under
/// `out_dir/<subtype>/<label>/` and write `out_dir/<subtype>_manifest.csv`.
pub fn gen_dataset(
    subtype: Subtype,
    per_class: usize,
    master_seed: u64,
    size: u32,
    out_dir: &Path,
    table: ColorTable,
) -> Result<DatasetManifest> {
    let labels: Vec<String> = match subtype {
        Subtype::Color => COLOR_CLASSES.iter().map(|s| s.to_string()).collect(),
        Subtype::Shape => SHAPE_CLASSES.iter().map(|s| s.to_string()).collect(),
        Subtype::Texture => {
            return Err(Error::InvalidArgument(
                "texture images are ingested or use the stand-in generator".into(),
            ))
        }
    };
    write_dataset(subtype, &labels, per_class, master_seed, size, out_dir, |ci, label, s| {
        match subtype {
            Subtype::Color => gen_color_image(label, s, size, table),
            _ => {
                debug_assert_eq!(SHAPE_CLASSES[ci], label);
                gen_shape_image(label, s, size)
            }
        }
    })
}

/// Generate the procedural texture stand-in corpus with `classes` classes.
pub fn gen_texture_standin_dataset(
    classes: usize,
    per_class: usize,
    master_seed: u64,
    size: u32,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    let labels: Vec<String> = (0..classes).map(standin_label).collect();
    write_dataset(
        Subtype::Texture,
        &labels,
        per_class,
        master_seed,
        size,
        out_dir,
        |ci, _, s| gen_texture_standin(ci, s, size),
    )
}

fn write_dataset<F>(
    subtype: Subtype,
    labels: &[String],
    per_class: usize,
    master_seed: u64,
    size: u32,
    out_dir: &Path,
    generate: F,
) -> Result<DatasetManifest>
where
    F: Fn(usize, &str, u64) -> Result<RasterImage> + Sync,
{
    if per_class == 0 {
        return Err(Error::InvalidArgument("per_class must be ≥ 1".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..labels.len())
        .flat_map(|c| (0..per_class).map(move |i| (c, i)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(c, i)| {
            let label = &labels[c];
            let img = generate(c, label, image_seed(master_seed, subtype, c, i))?;
            let rel = PathBuf::from(subtype.as_str())
                .join(label)
                .join(format!("{label}_{i:05}.png"));
            img.save_png(&out_dir.join(&rel))?;
            Ok(ManifestEntry {
                path: rel,
                subtype,
                label: label.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        root: out_dir.to_path_buf(),
        entries,
        seed: master_seed,
        image_size: size,
    };
    manifest.write_csv(&out_dir.join(format!("{}_manifest.csv", subtype.as_str())))?;
    Ok(manifest)
}
