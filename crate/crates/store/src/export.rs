use std::fs;
use std::path::Path;

use flux_core::{Canvas, CharacterAnchor, EmotionVector, FluxConfig, Genre};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::{SessionRecord, SessionStore, StoreError};

/// Contents of `manifest.json`.
///
/// Built only from logged data, so exporting the same session twice gives
/// byte-identical output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub session_id: Uuid,
    pub anchor: CharacterAnchor,
    /// Set when the anchor was edited after the session started.
    pub anchor_edited: bool,
    pub anchor_history: Vec<CharacterAnchor>,
    pub config: FluxConfig<f64>,
    pub canvas: Canvas,
    pub created_ms: i64,
    pub panels: Vec<ManifestPanel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestPanel {
    pub turn_index: u32,
    pub file: String,
    pub keyword: String,
    pub emoji: String,
    pub regeneration_counter: u32,
    pub timestamp_ms: i64,
    pub request_digest: String,
    pub backend_id: String,
    pub state: EmotionVector<f64>,
    pub active_genre: Option<Genre>,
}

impl ExportManifest {
    pub fn trajectory(&self) -> Vec<EmotionVector<f64>> {
        self.panels.iter().map(|p| p.state).collect()
    }

    pub fn to_json(&self) -> Result<String, StoreError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

pub fn panel_file_name(turn: u32) -> String {
    format!("panel_{turn:02}.png")
}

pub(crate) fn build_manifest(session: &SessionRecord) -> Result<ExportManifest, StoreError> {
    if session.images.is_empty() {
        return Err(StoreError::NoPanels);
    }
    let mut panels = Vec::with_capacity(session.images.len());
    for (&turn, image) in &session.images {
        let event = session
            .latest_event(turn)
            .expect("every stored image has an event");
        let entry = session
            .state
            .at_turn(turn)
            .ok_or(StoreError::StateDivergence { turn })?;
        panels.push(ManifestPanel {
            turn_index: turn,
            file: panel_file_name(turn),
            keyword: event.keyword.clone(),
            emoji: event.emoji.clone(),
            regeneration_counter: image.regeneration_counter,
            timestamp_ms: event.timestamp_ms,
            request_digest: image.request_digest.clone(),
            backend_id: image.backend_id.clone(),
            state: entry.state,
            active_genre: entry.active_genre,
        });
    }
    Ok(ExportManifest {
        session_id: session.session_id,
        anchor: session.anchor.clone(),
        anchor_edited: session.anchor_edited(),
        anchor_history: session.anchor_history.clone(),
        config: session.config,
        canvas: session.canvas,
        created_ms: session.created_ms,
        panels,
    })
}

pub(crate) fn export(
    store: &SessionStore,
    session: &SessionRecord,
    out_dir: &Path,
) -> Result<ExportManifest, StoreError> {
    let manifest = build_manifest(session)?;
    fs::create_dir_all(out_dir)?;
    for panel in &manifest.panels {
        let bytes = store.read_image(session.session_id, panel.turn_index, panel.regeneration_counter)?;
        fs::write(out_dir.join(&panel.file), bytes)?;
    }
    fs::write(out_dir.join("manifest.json"), manifest.to_json()?)?;
    Ok(manifest)
}
