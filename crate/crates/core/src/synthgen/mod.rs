//! Synthetic color/shape datasets, the identity task, texture ingestion and resampling.

mod color;
mod dataset;
mod identity;
mod raster;
mod shape;
mod texture;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use color::{gen_color_image, ColorTable, BOUNDARY_COLORS};
pub use dataset::{gen_dataset, gen_texture_standin_dataset, DatasetManifest, ManifestEntry};
pub use identity::{
    gen_identity_dataset, gen_subject_image, subject, IdentityEntry, IdentityManifest, Split, SplitCounts, Subject,
};
pub(crate) use dataset::portable as portable_path;
pub use raster::{resize_image, RasterImage};
pub use shape::{gen_shape_image, render_shape, ShapeGeometry, ShapeRender, MIN_SHAPE_SIZE};
pub use texture::{
    gen_texture_standin, ingest_texture_dir, standin_label, IngestReport, STANDIN_CLASS_LIMIT,
};

/// The three visual-cue families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subtype {
    Color,
    Shape,
    Texture,
}

impl Subtype {
    pub const ALL: [Subtype; 3] = [Subtype::Color, Subtype::Shape, Subtype::Texture];

    pub fn as_str(self) -> &'static str {
        match self {
            Subtype::Color => "color",
            Subtype::Shape => "shape",
            Subtype::Texture => "texture",
        }
    }

    /// Fixed class ordering; `None` for texture, whose classes come from the corpus.
    pub fn fixed_labels(self) -> Option<&'static [&'static str]> {
        match self {
            Subtype::Color => Some(&COLOR_CLASSES),
            Subtype::Shape => Some(&SHAPE_CLASSES),
            Subtype::Texture => None,
        }
    }
}

impl fmt::Display for Subtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Subtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "color" => Ok(Subtype::Color),
            "shape" => Ok(Subtype::Shape),
            "texture" => Ok(Subtype::Texture),
            other => Err(Error::InvalidArgument(format!("unknown subtype `{other}`"))),
        }
    }
}

pub const COLOR_CLASSES: [&str; 10] = [
    "red", "green", "blue", "yellow", "magenta", "cyan", "black", "white", "brown", "orange",
];

pub const SHAPE_CLASSES: [&str; 7] = [
    "lines",
    "rectangle",
    "circle",
    "ellipse",
    "quadrilateral",
    "pentagon",
    "hexagon",
];

/// Number of texture classes in the full corpus.
pub const TEXTURE_CLASS_COUNT: usize = 47;

/// A class within a subtype and its position in that subtype's ordering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub subtype: Subtype,
    pub label: String,
    pub index: usize,
}

impl ClassSpec {
    /// Resolve a color or shape label against its fixed ordering.
    pub fn fixed(subtype: Subtype, label: &str) -> Result<Self> {
        let labels = subtype.fixed_labels().ok_or_else(|| {
            Error::InvalidArgument("texture classes are defined by the corpus".into())
        })?;
        labels
            .iter()
            .position(|l| *l == label)
            .map(|index| ClassSpec {
                subtype,
                label: label.to_string(),
                index,
            })
            .ok_or_else(|| Error::InvalidClass {
                subtype: subtype.to_string(),
                label: label.to_string(),
            })
    }

    /// Texture classes are ordered lexicographically by label.
    pub fn textures<S: AsRef<str>>(labels: &[S]) -> Vec<ClassSpec> {
        let mut sorted: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        sorted.sort();
        sorted.dedup();
        sorted
            .into_iter()
            .enumerate()
            .map(|(index, label)| ClassSpec {
                subtype: Subtype::Texture,
                label,
                index,
            })
            .collect()
    }
}
