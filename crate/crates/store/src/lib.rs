//! Event-sourced session persistence.
//!
//! Layout under the store root:
//!
//! ```text
//! {root}/{session_id}/events.jsonl
//! {root}/{session_id}/images/{turn:02}_{counter:02}.png
//! ```
//!
//! The log is one JSON record per line, fsynced on append. Narrative state is
//! never trusted from disk: loading replays the events through the affect
//! engine and checks the result against the per-turn snapshots in the log.

mod export;
mod record;

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use flux_backend::PanelImage;
use flux_core::{
    replay, AffectError, AffectModel, Canvas, CharacterAnchor, FluxConfig, HistoryEntry,
    NarrativeState, PanelEvent,
};
use thiserror::Error;
use uuid::Uuid;

pub use export::{panel_file_name, ExportManifest, ManifestPanel};
pub use record::LogRecord;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown session {0}")]
    UnknownSession(Uuid),
    #[error("session {0} already exists")]
    SessionExists(Uuid),
    #[error("event out of order: {0}")]
    OutOfOrderEvent(String),
    #[error("corrupt log at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error("replayed state diverges from the log at turn {turn}")]
    StateDivergence { turn: u32 },
    #[error("session has no generated panels")]
    NoPanels,
    #[error("image for turn {turn} counter {counter} is missing")]
    MissingImage { turn: u32, counter: u32 },
    #[error(transparent)]
    Affect(#[from] AffectError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Metadata of one stored panel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    pub turn_index: u32,
    pub regeneration_counter: u32,
    pub request_digest: String,
    pub backend_id: String,
}

impl ImageRef {
    pub fn file_name(&self) -> String {
        image_file_name(self.turn_index, self.regeneration_counter)
    }
}

pub fn image_file_name(turn: u32, counter: u32) -> String {
    format!("{turn:02}_{counter:02}.png")
}

/// Everything known about a session, rebuilt from its log.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub session_id: Uuid,
    /// Current anchor (the latest edit, if any).
    pub anchor: CharacterAnchor,
    /// Every anchor the session has used, oldest first.
    pub anchor_history: Vec<CharacterAnchor>,
    pub config: FluxConfig<f64>,
    pub canvas: Canvas,
    pub created_ms: i64,
    /// All panel events in log order, regenerations included.
    pub events: Vec<PanelEvent>,
    /// Latest image per turn.
    pub images: BTreeMap<u32, ImageRef>,
    pub state: NarrativeState<f64>,
}

impl SessionRecord {
    pub fn anchor_edited(&self) -> bool {
        self.anchor_history.len() > 1
    }

    /// Most recent event for `turn` (the latest regeneration, if any).
    pub fn latest_event(&self, turn: u32) -> Option<&PanelEvent> {
        self.events.iter().rev().find(|e| e.turn_index == turn)
    }

    fn next_counter(&self, turn: u32) -> Option<u32> {
        self.images.get(&turn).map(|i| i.regeneration_counter + 1)
    }
}

/// Parameters of a new session.
#[derive(Debug, Clone)]
pub struct NewSession {
    pub session_id: Uuid,
    pub anchor: CharacterAnchor,
    pub config: FluxConfig<f64>,
    pub canvas: Canvas,
    pub created_ms: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ack {
    pub turn_index: u32,
    pub regeneration_counter: u32,
    /// State at `turn_index` after the append.
    pub entry: HistoryEntry<f64>,
}

pub struct SessionStore {
    root: PathBuf,
    model: Arc<AffectModel<f64>>,
}

enum TailPolicy {
    Truncate,
    Ignore,
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>, model: Arc<AffectModel<f64>>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, model })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn session_dir(&self, id: Uuid) -> PathBuf {
        self.root.join(id.to_string())
    }

    fn log_path(&self, id: Uuid) -> PathBuf {
        self.session_dir(id).join("events.jsonl")
    }

    pub fn image_path(&self, id: Uuid, turn: u32, counter: u32) -> PathBuf {
        self.session_dir(id).join("images").join(image_file_name(turn, counter))
    }

    pub fn exists(&self, id: Uuid) -> bool {
        self.log_path(id).is_file()
    }

    pub fn list_sessions(&self) -> Result<Vec<Uuid>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            if let Some(id) = entry.file_name().to_str().and_then(|s| Uuid::parse_str(s).ok()) {
                if self.exists(id) {
                    ids.push(id);
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn create_session(&self, new: NewSession) -> Result<SessionRecord, StoreError> {
        let id = new.session_id;
        if self.exists(id) {
            return Err(StoreError::SessionExists(id));
        }
        new.config.validate()?;
        let dir = self.session_dir(id);
        fs::create_dir_all(dir.join("images"))?;
        let record = LogRecord::Created {
            session_id: id,
            anchor: new.anchor,
            config: new.config,
            canvas: new.canvas,
            created_ms: new.created_ms,
        };
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        let mut file = OpenOptions::new().write(true).create_new(true).open(self.log_path(id))?;
        file.write_all(line.as_bytes())?;
        file.sync_all()?;
        sync_dir(&dir);
        sync_dir(&self.root);
        self.load_session(id)
    }

    /// Loads a session for writing. A torn trailing line left by a crash is
    /// truncated away; corruption anywhere else is an error.
    pub fn load_session(&self, id: Uuid) -> Result<SessionRecord, StoreError> {
        self.load(id, TailPolicy::Truncate)
    }

    /// Read-only load that tolerates (but does not repair) a torn tail, for
    /// readers running alongside the writer.
    pub fn read_session(&self, id: Uuid) -> Result<SessionRecord, StoreError> {
        self.load(id, TailPolicy::Ignore)
    }

    fn load(&self, id: Uuid, tail: TailPolicy) -> Result<SessionRecord, StoreError> {
        let path = self.log_path(id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::UnknownSession(id)),
            Err(e) => return Err(e.into()),
        };
        let (records, good_len) = record::parse_log(&bytes)?;
        if good_len < bytes.len() {
            log::warn!(
                "session {id}: dropping {} byte(s) of torn trailing record",
                bytes.len() - good_len
            );
            if let TailPolicy::Truncate = tail {
                let file = OpenOptions::new().write(true).open(&path)?;
                file.set_len(good_len as u64)?;
                file.sync_all()?;
            }
        }
        self.rebuild(id, records)
    }

    fn rebuild(&self, id: Uuid, records: Vec<LogRecord>) -> Result<SessionRecord, StoreError> {
        let mut records = records.into_iter();
        let Some(LogRecord::Created { session_id, anchor, config, canvas, created_ms }) = records.next()
        else {
            return Err(StoreError::CorruptLog { line: 1, reason: "missing session header".into() });
        };
        if session_id != id {
            return Err(StoreError::CorruptLog { line: 1, reason: format!("header names session {session_id}") });
        }
        let mut session = SessionRecord {
            session_id,
            anchor: anchor.clone(),
            anchor_history: vec![anchor],
            config,
            canvas,
            created_ms,
            events: Vec::new(),
            images: BTreeMap::new(),
            state: NarrativeState::initial(),
        };
        let mut snapshots = Vec::new();
        for (i, rec) in records.enumerate() {
            match rec {
                LogRecord::Created { .. } => {
                    return Err(StoreError::CorruptLog { line: i + 2, reason: "duplicate session header".into() })
                }
                LogRecord::AnchorChanged { anchor, .. } => {
                    session.anchor = anchor.clone();
                    session.anchor_history.push(anchor);
                }
                LogRecord::Panel { event, request_digest, backend_id, state, active_genre } => {
                    check_order(&session, &event)?;
                    if !event.is_regeneration() {
                        snapshots.push((event.turn_index, state, active_genre));
                    }
                    session.images.insert(
                        event.turn_index,
                        ImageRef {
                            turn_index: event.turn_index,
                            regeneration_counter: event.regeneration_counter,
                            request_digest,
                            backend_id,
                        },
                    );
                    session.events.push(event);
                }
            }
        }
        let m = &self.model;
        session.state = replay(&session.events, &m.lexicon, &m.vocabulary, &session.config)?;
        for (turn, state, active) in snapshots {
            let entry = session.state.at_turn(turn);
            if entry.map(|e| (e.state, e.active_genre)) != Some((state, active)) {
                return Err(StoreError::StateDivergence { turn });
            }
        }
        Ok(session)
    }

    /// Durably appends a panel event together with its image.
    ///
    /// The image file is written first; the event is acknowledged only once
    /// its log line has been synced.
    pub fn append_event(&self, id: Uuid, event: PanelEvent, image: &PanelImage) -> Result<Ack, StoreError> {
        let session = self.load_session(id)?;
        check_order(&session, &event)?;
        let m = &self.model;
        let entry = if event.is_regeneration() {
            *session
                .state
                .at_turn(event.turn_index)
                .expect("order check guarantees the turn exists")
        } else {
            let next = session
                .state
                .step(&event.keyword, &event.emoji, &m.lexicon, &m.vocabulary, &session.config)?;
            *next.history.last().expect("history is never empty")
        };

        write_atomic(&self.image_path(id, event.turn_index, event.regeneration_counter), &image.bytes)?;

        let ack = Ack {
            turn_index: event.turn_index,
            regeneration_counter: event.regeneration_counter,
            entry,
        };
        self.append_record(
            id,
            &LogRecord::Panel {
                event,
                request_digest: image.request_digest.clone(),
                backend_id: image.backend_id.clone(),
                state: entry.state,
                active_genre: entry.active_genre,
            },
        )?;
        Ok(ack)
    }

    pub fn change_anchor(&self, id: Uuid, anchor: CharacterAnchor, timestamp_ms: i64) -> Result<SessionRecord, StoreError> {
        self.load_session(id)?;
        self.append_record(id, &LogRecord::AnchorChanged { anchor, timestamp_ms })?;
        self.load_session(id)
    }

    fn append_record(&self, id: Uuid, record: &LogRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        let mut file = OpenOptions::new().append(true).open(self.log_path(id))?;
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok(())
    }

    pub fn read_image(&self, id: Uuid, turn: u32, counter: u32) -> Result<Vec<u8>, StoreError> {
        match fs::read(self.image_path(id, turn, counter)) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::MissingImage { turn, counter }),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes `panel_{turn:02}.png` (latest regeneration of each turn) and
    /// `manifest.json` into `out_dir`.
    pub fn export_comic(&self, id: Uuid, out_dir: &Path) -> Result<ExportManifest, StoreError> {
        let session = self.read_session(id)?;
        export::export(self, &session, out_dir)
    }

    /// The export as in-memory `(file name, bytes)` pairs, manifest last.
    pub fn export_files(&self, id: Uuid) -> Result<Vec<(String, Vec<u8>)>, StoreError> {
        let session = self.read_session(id)?;
        let manifest = export::build_manifest(&session)?;
        let mut files = Vec::with_capacity(manifest.panels.len() + 1);
        for panel in &manifest.panels {
            let bytes = self.read_image(id, panel.turn_index, panel.regeneration_counter)?;
            files.push((panel.file.clone(), bytes));
        }
        files.push(("manifest.json".to_string(), manifest.to_json()?.into_bytes()));
        Ok(files)
    }
}

fn check_order(session: &SessionRecord, event: &PanelEvent) -> Result<(), StoreError> {
    let last = session.images.len() as u32;
    if event.is_regeneration() {
        match session.next_counter(event.turn_index) {
            Some(next) if next == event.regeneration_counter => Ok(()),
            Some(next) => Err(StoreError::OutOfOrderEvent(format!(
                "turn {} expects regeneration counter {next}, got {}",
                event.turn_index, event.regeneration_counter
            ))),
            None => Err(StoreError::OutOfOrderEvent(format!(
                "regeneration of turn {} which does not exist",
                event.turn_index
            ))),
        }
    } else if event.turn_index != last + 1 {
        Err(StoreError::OutOfOrderEvent(format!(
            "expected turn {}, got {}",
            last + 1,
            event.turn_index
        )))
    } else {
        Ok(())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(dir) = path.parent() {
        sync_dir(dir);
    }
    Ok(())
}

fn sync_dir(dir: &Path) {
    // Directory fsync is not supported everywhere; failure only weakens
    // durability of the directory entry.
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}
