use flux_core::{Canvas, CharacterAnchor, EmotionVector, FluxConfig, Genre, PanelEvent};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::StoreError;

/// One line of `events.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Created {
        session_id: Uuid,
        anchor: CharacterAnchor,
        config: FluxConfig<f64>,
        canvas: Canvas,
        created_ms: i64,
    },
    Panel {
        event: PanelEvent,
        request_digest: String,
        backend_id: String,
        /// State at the event's turn, for cross-checking replay.
        state: EmotionVector<f64>,
        active_genre: Option<Genre>,
    },
    AnchorChanged {
        anchor: CharacterAnchor,
        timestamp_ms: i64,
    },
}

/// Parses a log, returning the records and the byte length of the intact
/// prefix. Only the final line may be damaged (unterminated or unparsable);
/// that is reported through a short prefix rather than an error.
pub(crate) fn parse_log(bytes: &[u8]) -> Result<(Vec<LogRecord>, usize), StoreError> {
    let mut records = Vec::new();
    let mut offset = 0;
    let mut line_no = 0;
    while offset < bytes.len() {
        line_no += 1;
        let rest = &bytes[offset..];
        let (line, terminated) = match rest.iter().position(|&b| b == b'\n') {
            Some(n) => (&rest[..n], true),
            None => (rest, false),
        };
        let parsed = std::str::from_utf8(line)
            .map_err(|e| e.to_string())
            .and_then(|s| serde_json::from_str::<LogRecord>(s).map_err(|e| e.to_string()));
        let is_last = offset + line.len() + usize::from(terminated) >= bytes.len();
        match parsed {
            Ok(rec) if terminated => records.push(rec),
            // unterminated tail: the write never completed
            Ok(_) => return Ok((records, offset)),
            Err(_) if is_last => return Ok((records, offset)),
            Err(reason) => return Err(StoreError::CorruptLog { line: line_no, reason }),
        }
        offset += line.len() + 1;
    }
    Ok((records, bytes.len()))
}
