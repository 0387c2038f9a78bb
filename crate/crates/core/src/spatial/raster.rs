use std::io::Cursor;

use image::{GrayImage, ImageFormat};

use crate::spatial::{PanelBox, Point, Resolution, SketchStrokes, SpatialError};

pub const BACKGROUND: u8 = 0;
pub const FOREGROUND: u8 = 255;

/// Single-channel guidance bitmap, row-major, one byte per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl ControlImage {
    pub fn blank(size: Resolution) -> Self {
        Self {
            width: size.width,
            height: size.height,
            pixels: vec![BACKGROUND; size.width as usize * size.height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != BACKGROUND).count()
    }

    /// 8-bit grayscale PNG.
    pub fn to_png(&self) -> Vec<u8> {
        let img = GrayImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("pixel buffer matches dimensions");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)
            .expect("in-memory PNG encoding");
        out.into_inner()
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, SpatialError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
            .map_err(|e| SpatialError::InvalidImage(e.to_string()))?
            .into_luma8();
        Ok(Self {
            width: img.width(),
            height: img.height(),
            pixels: img.into_raw(),
        })
    }

    fn stamp(&mut self, cx: i64, cy: i64, lo: i64, hi: i64) {
        let (w, h) = (i64::from(self.width), i64::from(self.height));
        for y in (cy + lo).max(0)..=(cy + hi).min(h - 1) {
            for x in (cx + lo).max(0)..=(cx + hi).min(w - 1) {
                self.pixels[(y * w + x) as usize] = FOREGROUND;
            }
        }
    }
}

/// Maps a panel-local point onto the target grid: `floor(x * target / panel)`,
/// clamped to the last pixel so points on the far edge stay visible.
fn to_target(p: Point, panel: &PanelBox, target: Resolution) -> (i64, i64) {
    let scale = |v: u32, from: u32, to: u32| -> i64 {
        let v = u64::from(v) * u64::from(to) / u64::from(from.max(1));
        v.min(u64::from(to.saturating_sub(1))) as i64
    };
    (
        scale(p.x, panel.width, target.width),
        scale(p.y, panel.height, target.height),
    )
}

/// Integer Bresenham over the major axis, always walking from the endpoint
/// with the smaller major coordinate so the result is independent of stroke
/// direction. Exact half-pixel ties round toward the start point.
fn trace_line(a: (i64, i64), b: (i64, i64), mut plot: impl FnMut(i64, i64)) {
    let x_major = (b.0 - a.0).abs() >= (b.1 - a.1).abs();
    // swap to (major, minor) coordinates
    let (a, b) = if x_major { (a, b) } else { ((a.1, a.0), (b.1, b.0)) };
    let (start, end) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    let d_major = end.0 - start.0;
    let d_minor = (end.1 - start.1).abs();
    let step = (end.1 - start.1).signum();
    let mut err = 2 * d_minor - d_major;
    let mut minor = start.1;
    for major in start.0..=end.0 {
        if x_major {
            plot(major, minor);
        } else {
            plot(minor, major);
        }
        if err > 0 {
            minor += step;
            err -= 2 * d_major;
        }
        err += 2 * d_minor;
    }
}

/// Scan-converts the sketch into a `target`-sized bitmap with a square brush
/// of `stroke_width` pixels. Deterministic: integer arithmetic only.
pub fn rasterize_sketch(strokes: &SketchStrokes, panel: &PanelBox, target: Resolution) -> ControlImage {
    let mut image = ControlImage::blank(target);
    if target.width == 0 || target.height == 0 {
        return image;
    }
    let w = i64::from(strokes.stroke_width.max(1));
    let (lo, hi) = (-((w - 1) / 2), w / 2);
    for line in &strokes.strokes {
        for pair in line.windows(2) {
            let a = to_target(pair[0], panel, target);
            let b = to_target(pair[1], panel, target);
            trace_line(a, b, |x, y| image.stamp(x, y, lo, hi));
        }
    }
    image
}
