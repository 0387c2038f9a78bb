use std::io::Cursor;

use async_trait::async_trait;
use flux_core::prompt::splitmix64;
use flux_core::{GenerationRequest, Genre, StyleRegistry};
use image::{ImageFormat, Rgb, RgbImage};

use crate::{BackendError, ImageBackend, PanelImage};

/// Background palette of a mock panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tint {
    Neutral,
    Genre(Genre),
}

impl Tint {
    /// Base color; Chaos alternates between two clashing colors.
    fn colors(self) -> ([u8; 3], [u8; 3]) {
        match self {
            Tint::Neutral => ([128, 128, 128], [128, 128, 128]),
            Tint::Genre(Genre::Tragedy) => ([70, 92, 150], [70, 92, 150]),
            Tint::Genre(Genre::Romance) => ([224, 130, 150], [224, 130, 150]),
            Tint::Genre(Genre::Chaos) => ([250, 60, 20], [20, 220, 60]),
            Tint::Genre(Genre::Mystery) => ([78, 36, 124], [78, 36, 124]),
        }
    }
}

/// The genre whose positive fragments appear most often in `prompt`; ties go
/// to the earlier genre in canonical order.
pub fn tint_for(prompt: &str, styles: &StyleRegistry) -> Tint {
    let mut best = (0usize, Tint::Neutral);
    for m in styles.modifiers() {
        let hits = m.positive.iter().filter(|p| prompt.contains(p.as_str())).count();
        if hits > best.0 {
            best = (hits, Tint::Genre(m.genre));
        }
    }
    best.1
}

const NOISE: i32 = 12;
const CHECKER: u32 = 16;
const INK: [u8; 3] = [24, 24, 24];

/// Offline stand-in for a diffusion model.
///
/// Output is a pure function of the request: genre tint from the prompt, a
/// luminance texture seeded by `request.seed`, and the control strokes drawn
/// as dark ink. The texture shifts all three channels equally so a neutral
/// panel stays exactly gray.
#[derive(Debug, Clone)]
pub struct MockBackend {
    styles: StyleRegistry,
}

impl MockBackend {
    pub fn new(styles: &StyleRegistry) -> Self {
        Self {
            styles: styles.clone(),
        }
    }

    pub fn render(&self, request: &GenerationRequest) -> PanelImage {
        let (w, h) = (request.width.max(1), request.height.max(1));
        let (a, b) = tint_for(&request.prompt, &self.styles).colors();
        let mut state = request.seed;
        let img = RgbImage::from_fn(w, h, |x, y| {
            state = state.wrapping_add(1);
            let noise = (splitmix64(state) % (2 * NOISE as u64 + 1)) as i32 - NOISE;
            if let Some(control) = &request.control_image {
                let cx = u64::from(x) * u64::from(control.width) / u64::from(w);
                let cy = u64::from(y) * u64::from(control.height) / u64::from(h);
                if control.get(cx as u32, cy as u32) != 0 {
                    return Rgb(INK);
                }
            }
            let base = if ((x / CHECKER) + (y / CHECKER)).is_multiple_of(2) { a } else { b };
            Rgb(base.map(|c| (i32::from(c) + noise).clamp(0, 255) as u8))
        });
        let mut bytes = Cursor::new(Vec::new());
        img.write_to(&mut bytes, ImageFormat::Png)
            .expect("in-memory PNG encoding");
        PanelImage {
            width: w,
            height: h,
            bytes: bytes.into_inner(),
            backend_id: self.id().to_string(),
            request_digest: request.digest(),
        }
    }
}

#[async_trait]
impl ImageBackend for MockBackend {
    fn id(&self) -> &str {
        "mock"
    }

    async fn generate(&self, request: &GenerationRequest) -> Result<PanelImage, BackendError> {
        Ok(self.render(request))
    }
}
