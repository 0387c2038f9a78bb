//! JSON over HTTP.
//!
//! | route | |
//! |---|---|
//! | `POST /sessions` | create a session |
//! | `GET /sessions/{id}/state` | trajectory for the radar chart |
//! | `POST /sessions/{id}/panels` | submit a turn |
//! | `POST /sessions/{id}/panels/{turn}/regenerate` | reroll a panel image |
//! | `PUT /sessions/{id}/anchor` | edit the character anchor |
//! | `GET /sessions/{id}/images/{turn}_{counter}.png` | panel image |
//! | `GET /sessions/{id}/export` | zip of the exported comic |
//! | `GET /vocab`, `GET /lexicon`, `GET /spatial` | listings for the UI |

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use flux_core::{AspectThresholds, CompositionDirectives, EmotionVector};
use serde::{Deserialize, Serialize};
use serde_json::json;
use uuid::Uuid;

use crate::{Engine, EngineError, PanelInput, SessionSettings};

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/panels", post(submit_panel))
        .route("/sessions/{id}/panels/{turn}/regenerate", post(regenerate))
        .route("/sessions/{id}/anchor", put(change_anchor))
        .route("/sessions/{id}/images/{file}", get(image))
        .route("/sessions/{id}/export", get(export))
        .route("/vocab", get(vocab))
        .route("/lexicon", get(lexicon))
        .route("/spatial", get(spatial))
        .with_state(engine)
}

impl IntoResponse for EngineError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self {
            EngineError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            EngineError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            EngineError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            EngineError::Unprocessable(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unprocessable"),
            EngineError::NoPanels => (StatusCode::CONFLICT, "no_panels"),
            EngineError::Backend(_) => (StatusCode::BAD_GATEWAY, "backend_failure"),
            EngineError::Store(_) | EngineError::Internal(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        if status.is_server_error() {
            log::error!("{self}");
        }
        (status, Json(json!({ "error": kind, "message": self.to_string() }))).into_response()
    }
}

type Shared = State<Arc<Engine>>;

fn session_id(raw: &str) -> Result<Uuid, EngineError> {
    Uuid::parse_str(raw).map_err(|_| EngineError::NotFound(format!("no session {raw:?}")))
}

async fn create_session(
    State(engine): Shared,
    Json(settings): Json<SessionSettings>,
) -> Result<impl IntoResponse, EngineError> {
    let view = engine.create_session(settings)?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": view.session_id }))))
}

async fn state(State(engine): Shared, Path(id): Path<String>) -> Result<impl IntoResponse, EngineError> {
    Ok(Json(engine.view(session_id(&id)?)?))
}

async fn submit_panel(
    State(engine): Shared,
    Path(id): Path<String>,
    Json(input): Json<PanelInput>,
) -> Result<impl IntoResponse, EngineError> {
    Ok(Json(engine.submit_panel(session_id(&id)?, input).await?))
}

async fn regenerate(
    State(engine): Shared,
    Path((id, turn)): Path<(String, String)>,
) -> Result<impl IntoResponse, EngineError> {
    let id = session_id(&id)?;
    let turn: u32 = turn
        .parse()
        .map_err(|_| EngineError::NotFound(format!("turn {turn} does not exist")))?;
    Ok(Json(engine.regenerate(id, turn).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnchorBody {
    anchor: String,
}

async fn change_anchor(
    State(engine): Shared,
    Path(id): Path<String>,
    Json(body): Json<AnchorBody>,
) -> Result<impl IntoResponse, EngineError> {
    Ok(Json(engine.change_anchor(session_id(&id)?, body.anchor).await?))
}

/// Parses `{turn}_{counter}.png`.
fn parse_image_name(name: &str) -> Option<(u32, u32)> {
    let (turn, counter) = name.strip_suffix(".png")?.split_once('_')?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !(digits(turn) && digits(counter)) {
        return None;
    }
    Some((turn.parse().ok()?, counter.parse().ok()?))
}

async fn image(
    State(engine): Shared,
    Path((id, file)): Path<(String, String)>,
) -> Result<impl IntoResponse, EngineError> {
    let id = session_id(&id)?;
    let (turn, counter) =
        parse_image_name(&file).ok_or_else(|| EngineError::NotFound(format!("no image {file:?}")))?;
    let bytes = engine.image(id, turn, counter)?;
    Ok(([(header::CONTENT_TYPE, "image/png")], bytes))
}

async fn export(State(engine): Shared, Path(id): Path<String>) -> Result<impl IntoResponse, EngineError> {
    let id = session_id(&id)?;
    let bytes = engine.export_archive(id)?;
    let disposition = format!("attachment; filename=\"comic-{id}.zip\"");
    Ok((
        [
            (header::CONTENT_TYPE, "application/zip".to_string()),
            (header::CONTENT_DISPOSITION, disposition),
        ],
        bytes,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub keyword: String,
    pub scene_fragment: String,
    pub frequency: u64,
    pub weights: EmotionVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub emoji: String,
    pub weights: EmotionVector,
}

async fn vocab(State(engine): Shared) -> Json<Vec<VocabEntry>> {
    let entries = engine
        .assets()
        .model
        .vocabulary
        .iter()
        .map(|e| VocabEntry {
            keyword: e.keyword.clone(),
            scene_fragment: e.scene_fragment.clone(),
            frequency: e.frequency,
            weights: e.weights,
        })
        .collect();
    Json(entries)
}

async fn lexicon(State(engine): Shared) -> Json<Vec<LexiconEntry>> {
    let entries = engine
        .assets()
        .model
        .lexicon
        .iter()
        .map(|(emoji, w)| LexiconEntry {
            emoji: emoji.to_string(),
            weights: *w,
        })
        .collect();
    Json(entries)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialSettings {
    pub thresholds: AspectThresholds,
    pub directives: CompositionDirectives,
    pub max_side: u32,
}

async fn spatial(State(engine): Shared) -> Json<SpatialSettings> {
    let assets = engine.assets();
    Json(SpatialSettings {
        thresholds: assets.thresholds,
        directives: assets.styles.composition.clone(),
        max_side: assets.max_side,
    })
}
