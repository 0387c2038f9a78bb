//! Spatial pacing: the sketched panel frame drives shot composition, and the
//! strokes inside it become a scribble-style guidance bitmap.

mod raster;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use raster::{rasterize_sketch, ControlImage, BACKGROUND, FOREGROUND};

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error("invalid panel box: {0}")]
    InvalidBox(String),
    #[error("invalid sketch: {0}")]
    InvalidStrokes(String),
    #[error("invalid control image: {0}")]
    InvalidImage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Default for Canvas {
    fn default() -> Self {
        Self {
            width: 2048,
            height: 2048,
        }
    }
}

/// The user-drawn frame of one panel, in canvas pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelBox {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl PanelBox {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }

    pub fn validate(&self, canvas: &Canvas) -> Result<(), SpatialError> {
        if self.width == 0 || self.height == 0 {
            return Err(SpatialError::InvalidBox("width and height must be positive".into()));
        }
        let right = u64::from(self.x) + u64::from(self.width);
        let bottom = u64::from(self.y) + u64::from(self.height);
        if right > u64::from(canvas.width) || bottom > u64::from(canvas.height) {
            return Err(SpatialError::InvalidBox(format!(
                "{}x{} at ({}, {}) exceeds the {}x{} canvas",
                self.width, self.height, self.x, self.y, canvas.width, canvas.height
            )));
        }
        Ok(())
    }
}

/// A point in panel-local pixel coordinates. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Point {
    pub x: u32,
    pub y: u32,
}

impl From<[u32; 2]> for Point {
    fn from([x, y]: [u32; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [u32; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

fn default_stroke_width() -> u32 {
    3
}

/// Freehand polylines drawn inside a panel.
///
/// `stroke_width` is the side of the square brush in output (generation
/// resolution) pixels, so it does not change when the panel is rescaled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchStrokes {
    #[serde(default)]
    pub strokes: Vec<Vec<Point>>,
    #[serde(default = "default_stroke_width")]
    pub stroke_width: u32,
}

impl Default for SketchStrokes {
    fn default() -> Self {
        Self {
            strokes: Vec::new(),
            stroke_width: default_stroke_width(),
        }
    }
}

pub const MAX_STROKE_WIDTH: u32 = 64;

impl SketchStrokes {
    pub fn validate(&self, panel: &PanelBox) -> Result<(), SpatialError> {
        if self.stroke_width == 0 || self.stroke_width > MAX_STROKE_WIDTH {
            return Err(SpatialError::InvalidStrokes(format!(
                "stroke width must be in 1..={MAX_STROKE_WIDTH}"
            )));
        }
        for (i, line) in self.strokes.iter().enumerate() {
            if line.len() < 2 {
                return Err(SpatialError::InvalidStrokes(format!(
                    "stroke {i} has fewer than two points"
                )));
            }
            if let Some(p) = line.iter().find(|p| p.x > panel.width || p.y > panel.height) {
                return Err(SpatialError::InvalidStrokes(format!(
                    "stroke {i} point ({}, {}) lies outside the {}x{} panel",
                    p.x, p.y, panel.width, panel.height
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompositionClass {
    Panoramic,
    Medium,
    CloseUp,
}

/// Aspect-ratio cutoffs for [`classify_aspect`]. Both bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspectThresholds {
    pub panoramic_min: f64,
    pub close_up_max: f64,
}

impl Default for AspectThresholds {
    fn default() -> Self {
        Self {
            panoramic_min: 1.8,
            close_up_max: 0.67,
        }
    }
}

pub fn classify_aspect(panel: &PanelBox, thresholds: &AspectThresholds) -> CompositionClass {
    let ratio = f64::from(panel.width) / f64::from(panel.height);
    if ratio >= thresholds.panoramic_min {
        CompositionClass::Panoramic
    } else if ratio <= thresholds.close_up_max {
        CompositionClass::CloseUp
    } else {
        CompositionClass::Medium
    }
}

/// Prompt fragment per composition class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionDirectives {
    #[serde(rename = "Panoramic")]
    pub panoramic: String,
    #[serde(rename = "Medium")]
    pub medium: String,
    #[serde(rename = "CloseUp")]
    pub close_up: String,
}

impl Default for CompositionDirectives {
    fn default() -> Self {
        Self {
            panoramic: "wide panoramic cinematic establishing shot".into(),
            medium: "medium shot".into(),
            close_up: "close-up character portrait".into(),
        }
    }
}

impl CompositionDirectives {
    pub fn directive(&self, class: CompositionClass) -> &str {
        match class {
            CompositionClass::Panoramic => &self.panoramic,
            CompositionClass::Medium => &self.medium,
            CompositionClass::CloseUp => &self.close_up,
        }
    }
}

pub fn composition_directive(class: CompositionClass, directives: &CompositionDirectives) -> &str {
    directives.directive(class)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

pub const LATENT_GRID: u32 = 64;

/// Generation resolution for a panel: the long side is scaled to `max_side`
/// and each dimension is rounded to the nearest multiple of 64 (ties up,
/// minimum 64, never above `max_side`). Integer arithmetic throughout.
pub fn snap_resolution(panel: &PanelBox, max_side: u32) -> Resolution {
    let max_side = max_side.max(LATENT_GRID);
    let long = u64::from(panel.width.max(panel.height).max(1));
    let cap = u64::from(max_side / LATENT_GRID);
    let snap = |dim: u32| -> u32 {
        let grid = u64::from(LATENT_GRID);
        // round(dim * max_side / long / grid), half up
        let num = 2 * u64::from(dim) * u64::from(max_side) + long * grid;
        let cells = (num / (2 * long * grid)).clamp(1, cap);
        (cells * grid) as u32
    };
    Resolution {
        width: snap(panel.width),
        height: snap(panel.height),
    }
}
