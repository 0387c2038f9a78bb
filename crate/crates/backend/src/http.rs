use std::time::Duration;

use async_trait::async_trait;
use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use flux_core::GenerationRequest;
use reqwest::{Client, StatusCode, Url};
use serde::{Deserialize, Serialize};

use crate::{BackendConfig, BackendError, ImageBackend, PanelImage};

/// JSON body of `POST {base_url}/generate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateBody {
    pub prompt: String,
    pub negative_prompt: String,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    /// Base64 (standard alphabet, padded) 8-bit grayscale PNG.
    pub control_image: Option<String>,
}

impl GenerateBody {
    pub fn from_request(request: &GenerationRequest) -> Self {
        Self {
            prompt: request.prompt.clone(),
            negative_prompt: request.negative_prompt.clone(),
            width: request.width,
            height: request.height,
            seed: request.seed,
            control_image: request
                .control_image
                .as_ref()
                .map(|c| STANDARD.encode(c.to_png())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponse {
    /// Base64 PNG.
    pub image: String,
}

/// Client for a text-to-image server.
///
/// Connection failures, timeouts and 5xx responses are retried with
/// exponential backoff; 4xx responses are returned immediately.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: Client,
    endpoint: Url,
    max_retries: u32,
    backoff: Duration,
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let base = config.base_url.as_deref().unwrap_or_default();
        let mut base = Url::parse(base)
            .map_err(|e| BackendError::InvalidConfig(format!("base_url {base:?}: {e}")))?;
        if !base.path().ends_with('/') {
            let path = format!("{}/", base.path());
            base.set_path(&path);
        }
        let endpoint = base
            .join("generate")
            .map_err(|e| BackendError::InvalidConfig(e.to_string()))?;
        let client = Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| BackendError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            client,
            endpoint,
            max_retries: config.max_retries,
            backoff: Duration::from_millis(250),
        })
    }

    /// Delay before the first retry; doubles on each further attempt.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn endpoint(&self) -> &Url {
        &self.endpoint
    }

    async fn attempt(&self, body: &GenerateBody) -> Result<Vec<u8>, Attempt> {
        let resp = self
            .client
            .post(self.endpoint.clone())
            .json(body)
            .send()
            .await
            .map_err(|e| Attempt::Transient(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
            let text = resp.text().await.unwrap_or_default();
            return Err(Attempt::Transient(format!("status {status}: {text}")));
        }
        if !status.is_success() {
            let text = resp.text().await.unwrap_or_default();
            return Err(Attempt::Fatal(BackendError::BackendRejected {
                status: status.as_u16(),
                body: text,
            }));
        }
        let bytes = resp
            .bytes()
            .await
            .map_err(|e| Attempt::Transient(e.to_string()))?;
        let parsed: GenerateResponse = serde_json::from_slice(&bytes)
            .map_err(|e| Attempt::Fatal(BackendError::InvalidResponse(e.to_string())))?;
        STANDARD
            .decode(parsed.image.as_bytes())
            .map_err(|e| Attempt::Fatal(BackendError::InvalidResponse(format!("image: {e}"))))
    }
}

enum Attempt {
    Transient(String),
    Fatal(BackendError),
}

#[async_trait]
impl ImageBackend for HttpBackend {
    fn id(&self) -> &str {
        "http"
    }

    async fn generate(&self, request: &GenerationRequest) -> Result<PanelImage, BackendError> {
        let body = GenerateBody::from_request(request);
        let mut last_error = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                let delay = self.backoff.saturating_mul(1 << (attempt - 1).min(16));
                log::warn!("retrying {} in {delay:?}: {last_error}", self.endpoint);
                tokio::time::sleep(delay).await;
            }
            match self.attempt(&body).await {
                Ok(png) => return PanelImage::from_png(png, request, self.id()),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Transient(e)) => last_error = e,
            }
        }
        Err(BackendError::BackendUnreachable {
            attempts: self.max_retries + 1,
            last_error,
        })
    }
}
