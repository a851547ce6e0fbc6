//! Synthetic identity task: every subject is a fixed (color, shape,
//! texture) combination; each image resamples all three.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::portable;
use super::{
    gen_color_image, gen_texture_standin, render_shape, ColorTable, RasterImage, COLOR_CLASSES, SHAPE_CLASSES,
};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subject {
    pub id: String,
    pub color: &'static str,
    pub shape: &'static str,
    pub texture: usize,
}

/// Subject `index`; the first 70 subjects have distinct (color, shape) pairs.
pub fn subject(index: usize, texture_classes: usize) -> Subject {
    Subject {
        id: format!("subject_{index:03}"),
        color: COLOR_CLASSES[index % COLOR_CLASSES.len()],
        shape: SHAPE_CLASSES[index % SHAPE_CLASSES.len()],
        texture: index % texture_classes.max(1),
    }
}

/// Mean of a color and a texture sample with the subject's shape outline on top.
pub fn gen_subject_image(s: &Subject, seed_v: u64, size: u32, table: ColorTable) -> Result<RasterImage> {
    let color = gen_color_image(s.color, seed::derive(seed_v, &[&"color"]), size, table)?;
    let texture = gen_texture_standin(s.texture, seed::derive(seed_v, &[&"texture"]), size)?;
    let shape = render_shape(s.shape, seed::derive(seed_v, &[&"shape"]), size)?.image;
    let data = color
        .data()
        .chunks_exact(3)
        .zip(texture.data().chunks_exact(3))
        .zip(shape.data().chunks_exact(3))
        .flat_map(|((c, t), sh)| {
            let lit = sh.iter().any(|&v| v > 0);
            (0..3).map(move |k| if lit { sh[k] } else { (c[k] as u16 + t[k] as u16).div_ceil(2) as u8 })
        })
        .collect();
    RasterImage::new(size, size, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityEntry {
    /// Relative to the manifest root.
    pub path: String,
    pub subject: String,
    pub split: Split,
}

/// `path,subject,split` rows; paths are relative to `root`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityManifest {
    pub root: PathBuf,
    pub entries: Vec<IdentityEntry>,
}

/// Images per subject in each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }

    fn split_of(&self, i: usize) -> Split {
        if i < self.train {
            Split::Train
        } else if i < self.train + self.val {
            Split::Val
        } else {
            Split::Test
        }
    }
}

impl IdentityManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &IdentityEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn resolve(&self, e: &IdentityEntry) -> PathBuf {
        self.root.join(&e.path)
    }

    pub fn contains(&self, path: &str) -> bool {
        self.entries.iter().any(|e| e.path == path)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = crate::pipeline::csv_writer(path)?;
        w.write_record(["path", "subject", "split"])?;
        for e in &self.entries {
            w.write_record([e.path.as_str(), e.subject.as_str(), e.split.as_str()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
        if r.headers()?.iter().collect::<Vec<_>>() != ["path", "subject", "split"] {
            return Err(Error::parse(path, 1, "expected header `path,subject,split`"));
        }
        let mut entries = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != 3 {
                return Err(Error::parse(path, line, "expected 3 fields"));
            }
            let split = rec[2].parse().map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
            entries.push(IdentityEntry { path: rec[0].to_string(), subject: rec[1].to_string(), split });
        }
        Ok(Self { root: path.parent().map(Path::to_path_buf).unwrap_or_default(), entries })
    }
}

/// Render `subjects` identities under `out_dir/identity/<subject>/` and
/// write `out_dir/identity_manifest.csv`.
pub fn gen_identity_dataset(
    subjects: usize,
    counts: SplitCounts,
    texture_classes: usize,
    master_seed: u64,
    size: u32,
    out_dir: &Path,
    table: ColorTable,
) -> Result<IdentityManifest> {
    if subjects < 2 || counts.total() == 0 {
        return Err(Error::InvalidArgument("identity task needs ≥ 2 subjects and ≥ 1 image each".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..subjects).flat_map(|s| (0..counts.total()).map(move |i| (s, i))).collect();
    let entries: Vec<IdentityEntry> = jobs
        .par_iter()
        .map(|&(si, i)| {
            let s = subject(si, texture_classes);
            let rel = Path::new("identity").join(&s.id).join(format!("{}_{i:03}.png", s.id));
            let img = gen_subject_image(&s, seed::derive(master_seed, &[&"identity", &si, &i]), size, table)?;
            img.save_png(&out_dir.join(&rel))?;
            Ok(IdentityEntry { path: portable(&rel), subject: s.id, split: counts.split_of(i) })
        })
        .collect::<Result<_>>()?;
    let manifest = IdentityManifest { root: out_dir.to_path_buf(), entries };
    manifest.write_csv(&out_dir.join("identity_manifest.csv"))?;
    Ok(manifest)
}
