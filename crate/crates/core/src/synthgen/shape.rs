use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ClassSpec, RasterImage, Subtype, BOUNDARY_COLORS};
use crate::error::{Error, Result};
use crate::seed;

/// Smallest canvas on which every shape class fits with its minimum dimensions.
pub const MIN_SHAPE_SIZE: u32 = 40;

/// Vertices kept at least this far from the canvas edge.
const MARGIN: f64 = 3.0;
const MIN_RADIUS: f64 = 10.0;
const ELLIPSE_SEGMENTS: usize = 360;

/// Geometry of the rendered outline, in pixel-centre coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeGeometry {
    Segment { a: (f64, f64), b: (f64, f64) },
    Circle { center: (f64, f64), radius: f64 },
    Ellipse {
        center: (f64, f64),
        semi_axes: (f64, f64),
        rotation: f64,
    },
    Polygon { vertices: Vec<(f64, f64)> },
}

impl ShapeGeometry {
    /// Distance from `p` to the outline.
    pub fn distance(&self, p: (f64, f64)) -> f64 {
        match self {
            ShapeGeometry::Segment { a, b } => segment_distance(p, *a, *b),
            ShapeGeometry::Circle { center, radius } => (dist(p, *center) - radius).abs(),
            ShapeGeometry::Ellipse { .. } | ShapeGeometry::Polygon { .. } => self
                .edges()
                .into_iter()
                .map(|(a, b)| segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Closed polyline edges (ellipses are approximated finely).
    fn edges(&self) -> Vec<((f64, f64), (f64, f64))> {
        let closed = |v: &[(f64, f64)]| {
            (0..v.len())
                .map(|i| (v[i], v[(i + 1) % v.len()]))
                .collect::<Vec<_>>()
        };
        match self {
            ShapeGeometry::Segment { a, b } => vec![(*a, *b)],
            ShapeGeometry::Circle { .. } => Vec::new(),
            ShapeGeometry::Ellipse {
                center,
                semi_axes,
                rotation,
            } => closed(&ellipse_points(*center, *semi_axes, *rotation)),
            ShapeGeometry::Polygon { vertices } => closed(vertices),
        }
    }
}

/// A rendered shape image together with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct ShapeRender {
    pub image: RasterImage,
    pub geometry: ShapeGeometry,
    pub thickness: u32,
    pub color: [u8; 3],
}

/// One outline of class `label` on a black `size`×`size` canvas.
pub fn gen_shape_image(label: &str, seed: u64, size: u32) -> Result<RasterImage> {
    render_shape(label, seed, size).map(|r| r.image)
}

pub fn render_shape(label: &str, seed: u64, size: u32) -> Result<ShapeRender> {
    let class = ClassSpec::fixed(Subtype::Shape, label)?;
    if size < MIN_SHAPE_SIZE {
        return Err(Error::Generation(format!(
            "canvas {size}px is smaller than the {MIN_SHAPE_SIZE}px shape minimum"
        )));
    }
    let mut rng = seed::rng(seed);
    let thickness: u32 = rng.random_range(1..=5);
    let color = BOUNDARY_COLORS[rng.random_range(0..BOUNDARY_COLORS.len())];
    let s = size as f64;
    let max_radius = s / 2.0 - 6.0;

    let geometry = match class.index {
        0 => {
            let length = rng.random_range(20.0..=0.8 * s);
            let angle = rng.random_range(0.0..PI);
            let (hx, hy) = (0.5 * length * angle.cos(), 0.5 * length * angle.sin());
            let cx = centre_coord(&mut rng, hx.abs(), s);
            let cy = centre_coord(&mut rng, hy.abs(), s);
            ShapeGeometry::Segment {
                a: (cx - hx, cy - hy),
                b: (cx + hx, cy + hy),
            }
        }
        1 => {
            let r = rng.random_range(MIN_RADIUS..=max_radius);
            let half_angle = rng.random_range(PI / 8.0..=3.0 * PI / 8.0);
            let rot = rng.random_range(0.0..PI);
            let c = centre(&mut rng, r, s);
            let angles = [half_angle, PI - half_angle, PI + half_angle, -half_angle];
            polygon(c, &angles.map(|a| (a + rot, r)))
        }
        2 => {
            let radius = rng.random_range(MIN_RADIUS..=max_radius);
            let center = centre(&mut rng, radius, s);
            ShapeGeometry::Circle { center, radius }
        }
        3 => {
            let a = rng.random_range(MIN_RADIUS..=max_radius);
            let b = rng.random_range(MIN_RADIUS..=max_radius);
            let rotation = rng.random_range(0.0..PI);
            let (sin, cos) = rotation.sin_cos();
            let ex = (a * a * cos * cos + b * b * sin * sin).sqrt();
            let ey = (a * a * sin * sin + b * b * cos * cos).sqrt();
            let center = (centre_coord(&mut rng, ex, s), centre_coord(&mut rng, ey, s));
            ShapeGeometry::Ellipse {
                center,
                semi_axes: (a, b),
                rotation,
            }
        }
        4 => {
            let r = rng.random_range(MIN_RADIUS..=max_radius);
            let rot = rng.random_range(0.0..2.0 * PI);
            let c = centre(&mut rng, r, s);
            let corners: Vec<(f64, f64)> = (0..4)
                .map(|k| {
                    let jitter = rng.random_range(-PI / 6.0..=PI / 6.0);
                    let radius = rng.random_range(0.6 * r..=r);
                    (rot + k as f64 * PI / 2.0 + jitter, radius)
                })
                .collect();
            polygon(c, &corners)
        }
        n @ (5 | 6) => {
            let sides = n;
            let r = rng.random_range(MIN_RADIUS..=max_radius);
            let rot = rng.random_range(0.0..2.0 * PI);
            let c = centre(&mut rng, r, s);
            let corners: Vec<(f64, f64)> = (0..sides)
                .map(|k| (rot + 2.0 * PI * k as f64 / sides as f64, r))
                .collect();
            polygon(c, &corners)
        }
        _ => unreachable!("shape class index out of range"),
    };

    let mut image = RasterImage::filled(size, size, [0, 0, 0]);
    draw(&mut image, &geometry, thickness as f64 / 2.0, color);
    Ok(ShapeRender {
        image,
        geometry,
        thickness,
        color,
    })
}

fn centre_coord(rng: &mut ChaCha8Rng, extent: f64, s: f64) -> f64 {
    let lo = extent + MARGIN;
    let hi = s - 1.0 - extent - MARGIN;
    if hi <= lo {
        (lo + hi) / 2.0
    } else {
        rng.random_range(lo..=hi)
    }
}

fn centre(rng: &mut ChaCha8Rng, radius: f64, s: f64) -> (f64, f64) {
    let x = centre_coord(rng, radius, s);
    let y = centre_coord(rng, radius, s);
    (x, y)
}

fn polygon(c: (f64, f64), polar: &[(f64, f64)]) -> ShapeGeometry {
    ShapeGeometry::Polygon {
        vertices: polar
            .iter()
            .map(|&(a, r)| (c.0 + r * a.cos(), c.1 + r * a.sin()))
            .collect(),
    }
}

fn ellipse_points(c: (f64, f64), (a, b): (f64, f64), rotation: f64) -> Vec<(f64, f64)> {
    let (sin, cos) = rotation.sin_cos();
    (0..ELLIPSE_SEGMENTS)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / ELLIPSE_SEGMENTS as f64;
            let (x, y) = (a * t.cos(), b * t.sin());
            (c.0 + x * cos - y * sin, c.1 + x * sin + y * cos)
        })
        .collect()
}

fn dist(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).hypot(p.1 - q.1)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    dist(p, (a.0 + t * dx, a.1 + t * dy))
}

/// Light every pixel whose centre lies within `half_width` of the outline.
fn draw(img: &mut RasterImage, geometry: &ShapeGeometry, half_width: f64, color: [u8; 3]) {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let stamp = |img: &mut RasterImage, lo: (f64, f64), hi: (f64, f64), d: &dyn Fn((f64, f64)) -> f64| {
        let x0 = (lo.0 - half_width).floor().max(0.0) as u32;
        let y0 = (lo.1 - half_width).floor().max(0.0) as u32;
        let x1 = (hi.0 + half_width).ceil().min(w - 1.0) as u32;
        let y1 = (hi.1 + half_width).ceil().min(h - 1.0) as u32;
        for y in y0..=y1 {
            for x in x0..=x1 {
                if d((x as f64, y as f64)) <= half_width {
                    img.put_pixel(x, y, color);
                }
            }
        }
    };
    match geometry {
        ShapeGeometry::Circle { center, radius } => {
            let lo = (center.0 - radius, center.1 - radius);
            let hi = (center.0 + radius, center.1 + radius);
            stamp(img, lo, hi, &|p| geometry.distance(p));
        }
        _ => {
            for (a, b) in geometry.edges() {
                let lo = (a.0.min(b.0), a.1.min(b.1));
                let hi = (a.0.max(b.0), a.1.max(b.1));
                stamp(img, lo, hi, &|p| segment_distance(p, a, b));
            }
        }
    }
}
