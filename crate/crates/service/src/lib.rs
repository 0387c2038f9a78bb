//! Session loop for the genre-shifting comic service.
//!
//! [`Engine`] runs one turn end to end: affect update, composition analysis,
//! prompt synthesis, generation and persistence. [`api::router`] exposes it
//! over HTTP; [`script`] drives it headlessly from a JSON script.

pub mod api;
mod archive;
mod engine;
pub mod script;

use std::path::Path;
use std::sync::Arc;

use flux_core::{
    defaults, AffectModel, AspectThresholds, ConfigOverrides, EmojiLexicon, KeywordVocabulary,
    StyleRegistry,
};
use thiserror::Error;

pub use archive::zip_files;
pub use engine::{
    Engine, EngineError, PanelInput, SessionSettings, SessionView, TurnResponse,
};

/// Generation size cap (longest side, pixels) when none is configured.
pub const DEFAULT_MAX_SIDE: u32 = 512;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

/// Read-only inputs shared by every session.
#[derive(Debug, Clone)]
pub struct Assets {
    pub model: Arc<AffectModel>,
    pub styles: StyleRegistry,
    pub thresholds: AspectThresholds,
    /// Service-wide config overrides, applied under per-session ones.
    pub overrides: ConfigOverrides,
    pub max_side: u32,
}

impl Assets {
    /// The shipped lexicon, vocabulary and styles with default settings.
    pub fn builtin() -> Self {
        Self::load(None, None, None, None).expect("shipped data is valid")
    }

    /// Loads each file that is given and falls back to the shipped data for
    /// the rest.
    pub fn load(
        vocab: Option<&Path>,
        lexicon: Option<&Path>,
        styles: Option<&Path>,
        config: Option<&Path>,
    ) -> Result<Self, LoadError> {
        let vocabulary = match vocab {
            Some(p) => KeywordVocabulary::from_json(&read(p)?).map_err(|e| invalid(p, e))?,
            None => defaults::vocabulary().expect("shipped vocabulary"),
        };
        let lexicon = match lexicon {
            Some(p) => EmojiLexicon::from_json(&read(p)?).map_err(|e| invalid(p, e))?,
            None => defaults::lexicon().expect("shipped lexicon"),
        };
        let styles = match styles {
            Some(p) => StyleRegistry::from_json(&read(p)?).map_err(|e| invalid(p, e))?,
            None => defaults::styles().expect("shipped styles"),
        };
        let overrides = match config {
            Some(p) => {
                let o = ConfigOverrides::from_json(&read(p)?).map_err(|e| invalid(p, e))?;
                flux_core::FluxConfig::<f64>::with_overrides(&o).map_err(|e| invalid(p, e))?;
                o
            }
            None => ConfigOverrides::default(),
        };
        Ok(Self {
            model: Arc::new(AffectModel::new(lexicon, vocabulary)),
            styles,
            thresholds: AspectThresholds::default(),
            overrides,
            max_side: DEFAULT_MAX_SIDE,
        })
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn invalid(path: &Path, e: impl std::fmt::Display) -> LoadError {
    LoadError::Invalid {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}
