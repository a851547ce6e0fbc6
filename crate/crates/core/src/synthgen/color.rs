use rand::Rng;

use super::{ClassSpec, RasterImage, Subtype, COLOR_CLASSES};
use crate::error::Result;
use crate::seed;

type ChannelRange = (u8, u8);

/// Per-class channel ranges used for color image generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorTable {
    /// Dominant channels in [200,255], suppressed channels in [0,120].
    #[default]
    Separable,
    /// As `Separable`, except red leaves G and B unconstrained in [0,255].
    WideRed,
}

const SEPARABLE: [[ChannelRange; 3]; 10] = [
    [(200, 255), (0, 120), (0, 120)],     // red
    [(0, 120), (200, 255), (0, 120)],     // green
    [(0, 120), (0, 120), (200, 255)],     // blue
    [(200, 255), (200, 255), (0, 120)],   // yellow
    [(200, 255), (0, 120), (200, 255)],   // magenta
    [(0, 120), (200, 255), (200, 255)],   // cyan
    [(0, 55), (0, 55), (0, 55)],          // black
    [(200, 255), (200, 255), (200, 255)], // white
    [(100, 160), (40, 90), (0, 50)],      // brown
    [(200, 255), (100, 160), (0, 60)],    // orange
];

impl ColorTable {
    pub fn ranges(self, class_index: usize) -> [ChannelRange; 3] {
        match (self, class_index) {
            (ColorTable::WideRed, 0) => [(200, 255), (0, 255), (0, 255)],
            _ => SEPARABLE[class_index],
        }
    }
}

/// Shape outline colors: the midpoint of each color class's range.
pub const BOUNDARY_COLORS: [[u8; 3]; 10] = {
    let mut out = [[0u8; 3]; 10];
    let mut i = 0;
    while i < 10 {
        let mut c = 0;
        while c < 3 {
            let (lo, hi) = SEPARABLE[i][c];
            out[i][c] = ((lo as u16 + hi as u16) / 2) as u8;
            c += 1;
        }
        i += 1;
    }
    out
};

/// A `size`×`size` image of independently sampled pixels from `label`'s range table.
pub fn gen_color_image(label: &str, seed: u64, size: u32, table: ColorTable) -> Result<RasterImage> {
    let class = ClassSpec::fixed(Subtype::Color, label)?;
    if size == 0 {
        return Err(crate::Error::InvalidArgument("image size must be ≥ 1".into()));
    }
    let ranges = table.ranges(class.index);
    let mut rng = seed::rng(seed);
    let n = size as usize * size as usize;
    let mut data = Vec::with_capacity(n * 3);
    for _ in 0..n {
        for &(lo, hi) in &ranges {
            data.push(rng.random_range(lo..=hi));
        }
    }
    debug_assert_eq!(COLOR_CLASSES[class.index], label);
    RasterImage::new(size, size, data)
}
