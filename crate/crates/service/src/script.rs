//! Headless sessions driven by a JSON script (`flux run`).
//!
//! ```json
//! {
//!   "anchor": "a red-haired detective in a trench coat",
//!   "config": {"decay": 0.8},
//!   "turns": [
//!     {"box": {"x": 0, "y": 0, "width": 1024, "height": 512},
//!      "keyword": "Street", "emoji": "🥀", "regenerate": 1}
//!   ]
//! }
//! ```
//!
//! Without an explicit `session_id` the id is derived from the script
//! contents, so rerunning a script reproduces the same seeds and images.
//! With `start_ms` set, event timestamps come from a logical clock that
//! starts there and advances one second per event.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use flux_backend::ImageBackend;
use flux_core::{Canvas, ConfigOverrides, PanelBox, SketchStrokes};
use flux_store::ExportManifest;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uuid::Uuid;

use crate::{Assets, Engine, EngineError, PanelInput, SessionSettings, TurnResponse};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<Uuid>,
    pub anchor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canvas: Option<Canvas>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_ms: Option<i64>,
    pub turns: Vec<ScriptTurn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptTurn {
    #[serde(rename = "box")]
    pub panel_box: PanelBox,
    #[serde(default)]
    pub strokes: SketchStrokes,
    pub keyword: String,
    pub emoji: String,
    /// Rerolls of this panel after it is first generated.
    #[serde(default)]
    pub regenerate: u32,
}

impl Script {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn resolved_session_id(&self) -> Uuid {
        self.session_id.unwrap_or_else(|| {
            let canonical = serde_json::to_vec(self).expect("script serializes");
            let digest = Sha256::digest(&canonical);
            let mut bytes = [0u8; 16];
            bytes.copy_from_slice(&digest[..16]);
            Uuid::new_v8(bytes)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub session_id: Uuid,
    /// One response per generated image, rerolls included, in order.
    pub responses: Vec<TurnResponse>,
    pub export: ExportManifest,
}

/// Where `run` keeps its files.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub out_dir: PathBuf,
    /// Session store root; defaults to `{out_dir}/sessions`.
    pub data_dir: Option<PathBuf>,
}

impl RunPaths {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            data_dir: None,
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| self.out_dir.join("sessions"))
    }

    pub fn comic_dir(&self) -> PathBuf {
        self.out_dir.join("comic")
    }
}

/// Plays `script` against a fresh session and exports the result to
/// `{out_dir}/comic`. Responses are also written to `{out_dir}/turns.json`.
pub async fn run(
    script: &Script,
    assets: Assets,
    backend: Arc<dyn ImageBackend>,
    paths: &RunPaths,
) -> Result<RunReport, EngineError> {
    let mut engine = Engine::new(assets, &paths.data_dir(), backend)?;
    if let Some(start) = script.start_ms {
        let tick = AtomicI64::new(0);
        engine = engine.with_clock(move || start + 1000 * tick.fetch_add(1, Ordering::Relaxed));
    }
    let id = script.resolved_session_id();
    engine.create_session_with_id(
        id,
        SessionSettings {
            anchor: script.anchor.clone(),
            config: script.config,
            canvas: script.canvas,
        },
    )?;

    let mut responses = Vec::new();
    for turn in &script.turns {
        let response = engine
            .submit_panel(
                id,
                PanelInput {
                    panel_box: turn.panel_box,
                    strokes: turn.strokes.clone(),
                    keyword: turn.keyword.clone(),
                    emoji: turn.emoji.clone(),
                },
            )
            .await?;
        let index = response.turn_index;
        responses.push(response);
        for _ in 0..turn.regenerate {
            responses.push(engine.regenerate(id, index).await?);
        }
    }

    let export = engine.export_to(id, &paths.comic_dir())?;
    write_json(&paths.out_dir.join("turns.json"), &responses)?;
    Ok(RunReport {
        session_id: id,
        responses,
        export,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), EngineError> {
    let io = |e: std::io::Error| EngineError::Internal(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| EngineError::Internal(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io)
}
