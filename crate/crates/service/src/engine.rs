use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use flux_backend::{BackendError, ImageBackend};
use flux_core::{
    classify_aspect, rasterize_sketch, snap_resolution, synthesize, AffectError, Canvas,
    CharacterAnchor, ConfigOverrides, EmotionVector, FluxConfig, GenerationRequest, Genre,
    HistoryEntry, PanelBox, PanelEvent, PromptError, SeedPolicy, SketchStrokes, SynthesisInput,
};
use flux_store::{image_file_name, ExportManifest, NewSession, SessionRecord, SessionStore, StoreError};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::Assets;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown session {0}")]
    UnknownSession(Uuid),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("session has no generated panels")]
    NoPanels,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Store(StoreError),
    #[error("{0}")]
    Internal(String),
}

impl From<StoreError> for EngineError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownSession(id) => EngineError::UnknownSession(id),
            StoreError::NoPanels => EngineError::NoPanels,
            StoreError::MissingImage { .. } => EngineError::NotFound(e.to_string()),
            other => EngineError::Store(other),
        }
    }
}

fn affect_error(e: AffectError) -> EngineError {
    match e.root() {
        AffectError::UnknownKeyword(_) | AffectError::UnknownEmoji(_) => {
            EngineError::Unprocessable(e.to_string())
        }
        _ => EngineError::Internal(e.to_string()),
    }
}

fn prompt_error(e: PromptError) -> EngineError {
    EngineError::Internal(format!("prompt synthesis: {e}"))
}

/// Parameters of `POST /sessions`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSettings {
    pub anchor: String,
    #[serde(default)]
    pub config: Option<ConfigOverrides>,
    #[serde(default)]
    pub canvas: Option<Canvas>,
}

/// One user turn: the sketched frame plus the affective injection.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelInput {
    #[serde(rename = "box")]
    pub panel_box: PanelBox,
    #[serde(default)]
    pub strokes: SketchStrokes,
    pub keyword: String,
    pub emoji: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResponse {
    pub turn_index: u32,
    pub regeneration_counter: u32,
    pub state: EmotionVector,
    pub active_genre: Option<Genre>,
    pub flux_triggered_this_turn: bool,
    /// Path of the panel image on this service.
    pub image: String,
    pub prompt_preview: String,
    pub negative_prompt: String,
    pub seed: u64,
}

/// Snapshot served by `GET /sessions/{id}/state`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: Uuid,
    pub anchor: CharacterAnchor,
    pub anchor_edited: bool,
    pub turn_index: u32,
    pub state: EmotionVector,
    pub active_genre: Option<Genre>,
    pub history: Vec<HistoryEntry<f64>>,
    pub config: FluxConfig,
    pub canvas: Canvas,
}

impl SessionView {
    fn of(record: &SessionRecord) -> Self {
        Self {
            session_id: record.session_id,
            anchor: record.anchor.clone(),
            anchor_edited: record.anchor_edited(),
            turn_index: record.state.turn_index,
            state: record.state.current,
            active_genre: record.state.active_genre,
            history: record.state.history.clone(),
            config: record.config,
            canvas: record.canvas,
        }
    }
}

pub fn image_url(id: Uuid, turn: u32, counter: u32) -> String {
    format!("/sessions/{id}/images/{}", image_file_name(turn, counter))
}

/// A session's single writer lock and its latest committed record.
struct Slot {
    writer: tokio::sync::Mutex<()>,
    committed: RwLock<Arc<SessionRecord>>,
}

impl Slot {
    fn snapshot(&self) -> Arc<SessionRecord> {
        self.committed.read().expect("snapshot lock").clone()
    }

    fn publish(&self, record: SessionRecord) {
        *self.committed.write().expect("snapshot lock") = Arc::new(record);
    }
}

type Clock = dyn Fn() -> i64 + Send + Sync;

pub struct Engine {
    assets: Assets,
    store: SessionStore,
    backend: Arc<dyn ImageBackend>,
    slots: Mutex<HashMap<Uuid, Arc<Slot>>>,
    clock: Box<Clock>,
}

fn wall_clock() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

impl Engine {
    pub fn new(
        assets: Assets,
        data_dir: &Path,
        backend: Arc<dyn ImageBackend>,
    ) -> Result<Self, EngineError> {
        let store = SessionStore::open(data_dir, assets.model.clone())?;
        Ok(Self {
            assets,
            store,
            backend,
            slots: Mutex::new(HashMap::new()),
            clock: Box::new(wall_clock),
        })
    }

    /// Replaces the timestamp source (UTC milliseconds).
    pub fn with_clock(mut self, clock: impl Fn() -> i64 + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn assets(&self) -> &Assets {
        &self.assets
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    fn slot(&self, id: Uuid) -> Result<Arc<Slot>, EngineError> {
        let mut slots = self.slots.lock().expect("session registry");
        if let Some(slot) = slots.get(&id) {
            return Ok(slot.clone());
        }
        let record = self.store.load_session(id)?;
        let slot = Arc::new(Slot {
            writer: tokio::sync::Mutex::new(()),
            committed: RwLock::new(Arc::new(record)),
        });
        slots.insert(id, slot.clone());
        Ok(slot)
    }

    pub fn create_session(&self, settings: SessionSettings) -> Result<SessionView, EngineError> {
        self.create_session_with_id(Uuid::new_v4(), settings)
    }

    pub fn create_session_with_id(
        &self,
        id: Uuid,
        settings: SessionSettings,
    ) -> Result<SessionView, EngineError> {
        let anchor = CharacterAnchor::new(settings.anchor)
            .map_err(|e| EngineError::BadRequest(e.to_string()))?;
        let overrides = self.assets.overrides.merged(settings.config.unwrap_or_default());
        let config = FluxConfig::with_overrides(&overrides)
            .map_err(|e| EngineError::BadRequest(e.to_string()))?;
        let canvas = settings.canvas.unwrap_or_default();
        if canvas.width == 0 || canvas.height == 0 {
            return Err(EngineError::BadRequest("canvas must be non-empty".into()));
        }
        let record = self
            .store
            .create_session(NewSession {
                session_id: id,
                anchor,
                config,
                canvas,
                created_ms: (self.clock)(),
            })
            .map_err(|e| match e {
                StoreError::SessionExists(_) => EngineError::BadRequest(e.to_string()),
                other => other.into(),
            })?;
        let view = SessionView::of(&record);
        self.slots.lock().expect("session registry").insert(
            id,
            Arc::new(Slot {
                writer: tokio::sync::Mutex::new(()),
                committed: RwLock::new(Arc::new(record)),
            }),
        );
        Ok(view)
    }

    pub fn session(&self, id: Uuid) -> Result<Arc<SessionRecord>, EngineError> {
        Ok(self.slot(id)?.snapshot())
    }

    pub fn view(&self, id: Uuid) -> Result<SessionView, EngineError> {
        Ok(SessionView::of(&*self.session(id)?))
    }

    /// The request a panel event generates, given the genre active at its turn.
    pub fn build_request(
        &self,
        session: &SessionRecord,
        event: &PanelEvent,
        active: Option<Genre>,
    ) -> Result<GenerationRequest, EngineError> {
        let assets = &self.assets;
        let class = classify_aspect(&event.panel_box, &assets.thresholds);
        let size = snap_resolution(&event.panel_box, assets.max_side);
        let control_image = (!event.strokes.strokes.is_empty())
            .then(|| rasterize_sketch(&event.strokes, &event.panel_box, size));
        let (_, scene) = assets.model.vocabulary.lookup(&event.keyword).map_err(affect_error)?;
        let modifier = active
            .map(|g| assets.styles.modifier(g))
            .transpose()
            .map_err(prompt_error)?;
        synthesize(SynthesisInput {
            anchor: &session.anchor,
            directive: assets.styles.composition.directive(class),
            scene_fragment: scene,
            active: modifier,
            base_negative: &assets.styles.base_negative,
            seed: SeedPolicy::new(session.session_id).seed(event.turn_index, event.regeneration_counter),
            panel_index: event.turn_index,
            size,
            control_image,
        })
        .map_err(prompt_error)
    }

    /// Runs one new-panel turn. Nothing is committed unless generation and
    /// persistence both succeed.
    pub async fn submit_panel(&self, id: Uuid, input: PanelInput) -> Result<TurnResponse, EngineError> {
        let slot = self.slot(id)?;
        let _writer = slot.writer.lock().await;
        let session = slot.snapshot();

        input
            .panel_box
            .validate(&session.canvas)
            .map_err(|e| EngineError::Unprocessable(e.to_string()))?;
        input
            .strokes
            .validate(&input.panel_box)
            .map_err(|e| EngineError::Unprocessable(e.to_string()))?;
        let m = &self.assets.model;
        let next = session
            .state
            .step(&input.keyword, &input.emoji, &m.lexicon, &m.vocabulary, &session.config)
            .map_err(affect_error)?;

        let event = PanelEvent {
            turn_index: next.turn_index,
            panel_box: input.panel_box,
            strokes: input.strokes,
            keyword: input.keyword,
            emoji: input.emoji,
            regeneration_counter: 0,
            timestamp_ms: (self.clock)(),
        };
        self.generate_and_commit(&slot, &session, event, next.active_genre).await
    }

    /// Rerolls the image of an existing turn with the next seed. The
    /// narrative state does not change.
    pub async fn regenerate(&self, id: Uuid, turn: u32) -> Result<TurnResponse, EngineError> {
        let slot = self.slot(id)?;
        let _writer = slot.writer.lock().await;
        let session = slot.snapshot();
        let last = session
            .latest_event(turn)
            .ok_or_else(|| EngineError::NotFound(format!("turn {turn} does not exist")))?;
        let active = session.state.at_turn(turn).and_then(|e| e.active_genre);
        let event = last.regenerated((self.clock)());
        self.generate_and_commit(&slot, &session, event, active).await
    }

    async fn generate_and_commit(
        &self,
        slot: &Slot,
        session: &SessionRecord,
        event: PanelEvent,
        active: Option<Genre>,
    ) -> Result<TurnResponse, EngineError> {
        let id = session.session_id;
        let request = self.build_request(session, &event, active)?;
        let image = self.backend.generate(&request).await?;
        let (turn, counter) = (event.turn_index, event.regeneration_counter);
        let ack = self.store.append_event(id, event, &image)?;
        let record = self.store.read_session(id)?;
        let response = TurnResponse {
            turn_index: turn,
            regeneration_counter: counter,
            state: ack.entry.state,
            active_genre: ack.entry.active_genre,
            flux_triggered_this_turn: record.state.flux_triggered_at(turn),
            image: image_url(id, turn, counter),
            prompt_preview: request.prompt,
            negative_prompt: request.negative_prompt,
            seed: request.seed,
        };
        slot.publish(record);
        Ok(response)
    }

    pub async fn change_anchor(&self, id: Uuid, anchor: String) -> Result<SessionView, EngineError> {
        let anchor = CharacterAnchor::new(anchor).map_err(|e| EngineError::BadRequest(e.to_string()))?;
        let slot = self.slot(id)?;
        let _writer = slot.writer.lock().await;
        let record = self.store.change_anchor(id, anchor, (self.clock)())?;
        let view = SessionView::of(&record);
        slot.publish(record);
        Ok(view)
    }

    pub fn image(&self, id: Uuid, turn: u32, counter: u32) -> Result<Vec<u8>, EngineError> {
        self.slot(id)?;
        Ok(self.store.read_image(id, turn, counter)?)
    }

    pub fn export_to(&self, id: Uuid, out_dir: &Path) -> Result<ExportManifest, EngineError> {
        self.slot(id)?;
        Ok(self.store.export_comic(id, out_dir)?)
    }

    /// Export as a zip archive.
    pub fn export_archive(&self, id: Uuid) -> Result<Vec<u8>, EngineError> {
        self.slot(id)?;
        let files = self.store.export_files(id)?;
        crate::zip_files(&files).map_err(|e| EngineError::Internal(e.to_string()))
    }
}
