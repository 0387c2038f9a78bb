use serde::{Deserialize, Serialize};

use crate::spatial::{PanelBox, SketchStrokes};

/// One user turn as recorded in the session log.
///
/// New panels carry `regeneration_counter == 0` and the next turn index;
/// rerolls of an existing panel reuse its turn index with a higher counter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelEvent {
    pub turn_index: u32,
    #[serde(rename = "box")]
    pub panel_box: PanelBox,
    #[serde(default)]
    pub strokes: SketchStrokes,
    pub keyword: String,
    pub emoji: String,
    #[serde(default)]
    pub regeneration_counter: u32,
    /// UTC milliseconds since the Unix epoch.
    pub timestamp_ms: i64,
}

impl PanelEvent {
    /// A new-panel event with an empty sketch in a 512x512 box.
    pub fn new_panel(turn_index: u32, keyword: &str, emoji: &str) -> Self {
        Self {
            turn_index,
            panel_box: PanelBox::new(0, 0, 512, 512),
            strokes: SketchStrokes::default(),
            keyword: keyword.to_string(),
            emoji: emoji.to_string(),
            regeneration_counter: 0,
            timestamp_ms: 0,
        }
    }

    pub fn is_regeneration(&self) -> bool {
        self.regeneration_counter > 0
    }

    /// The same panel inputs with the next regeneration counter.
    pub fn regenerated(&self, timestamp_ms: i64) -> Self {
        Self {
            regeneration_counter: self.regeneration_counter + 1,
            timestamp_ms,
            ..self.clone()
        }
    }
}
