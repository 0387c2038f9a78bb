//! Image backends behind a common [`ImageBackend`] trait.
//!
//! [`HttpBackend`] talks to a text-to-image server over a small JSON contract;
//! [`MockBackend`] renders a deterministic stand-in whose colors encode the
//! active genre, so genre shifts can be checked without a diffusion model.

mod http;
mod mock;

use std::io::Cursor;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use flux_core::{GenerationRequest, StyleRegistry};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{GenerateBody, GenerateResponse, HttpBackend};
pub use mock::{tint_for, MockBackend, Tint};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unreachable after {attempts} attempt(s): {last_error}")]
    BackendUnreachable { attempts: u32, last_error: String },
    #[error("backend rejected the request with status {status}: {body}")]
    BackendRejected { status: u16, body: String },
    #[error("backend returned {got_width}x{got_height}, expected {width}x{height}")]
    DimensionMismatch {
        width: u32,
        height: u32,
        got_width: u32,
        got_height: u32,
    },
    #[error("malformed backend response: {0}")]
    InvalidResponse(String),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
}

/// A generated panel, PNG-encoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelImage {
    pub width: u32,
    pub height: u32,
    pub bytes: Vec<u8>,
    pub backend_id: String,
    /// [`GenerationRequest::digest`] of the request that produced it.
    pub request_digest: String,
}

impl PanelImage {
    /// Decodes the PNG and checks it against `request`'s dimensions.
    pub fn from_png(
        bytes: Vec<u8>,
        request: &GenerationRequest,
        backend_id: &str,
    ) -> Result<Self, BackendError> {
        let (got_width, got_height) = png_dimensions(&bytes)?;
        if (got_width, got_height) != (request.width, request.height) {
            return Err(BackendError::DimensionMismatch {
                width: request.width,
                height: request.height,
                got_width,
                got_height,
            });
        }
        Ok(Self {
            width: got_width,
            height: got_height,
            bytes,
            backend_id: backend_id.to_string(),
            request_digest: request.digest(),
        })
    }

    pub fn decode_rgb(&self) -> Result<image::RgbImage, BackendError> {
        image::load_from_memory_with_format(&self.bytes, image::ImageFormat::Png)
            .map(|img| img.into_rgb8())
            .map_err(|e| BackendError::InvalidResponse(e.to_string()))
    }
}

fn png_dimensions(bytes: &[u8]) -> Result<(u32, u32), BackendError> {
    image::ImageReader::with_format(Cursor::new(bytes), image::ImageFormat::Png)
        .into_dimensions()
        .map_err(|e| BackendError::InvalidResponse(format!("not a PNG: {e}")))
}

#[async_trait]
pub trait ImageBackend: Send + Sync {
    fn id(&self) -> &str;

    async fn generate(&self, request: &GenerationRequest) -> Result<PanelImage, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_timeout() -> f64 {
    120.0
}

fn default_retries() -> u32 {
    2
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            base_url: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
        }
    }
}

impl BackendConfig {
    pub fn mock() -> Self {
        Self::default()
    }

    pub fn http(base_url: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Http,
            base_url: Some(base_url.into()),
            ..Self::default()
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(BackendError::InvalidConfig("timeout must be positive".into()));
        }
        if self.kind == BackendKind::Http && self.base_url.is_none() {
            return Err(BackendError::InvalidConfig("http backend requires base_url".into()));
        }
        Ok(())
    }
}

/// Instantiates the configured backend. The mock needs the style registry to
/// recognize genre fragments in prompts.
pub fn build_backend(
    config: &BackendConfig,
    styles: &StyleRegistry,
) -> Result<Arc<dyn ImageBackend>, BackendError> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::Mock => Arc::new(MockBackend::new(styles)),
        BackendKind::Http => Arc::new(HttpBackend::new(config)?),
    })
}
