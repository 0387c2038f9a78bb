//! Affect accumulation and genre switching.
//!
//! Every new panel folds a keyword weight and an emoji weight into a decaying
//! four-dimensional state. When one dimension dominates above the flux
//! threshold, the matching genre becomes active and stays active until another
//! genre takes over. Everything here is a pure function of its inputs.

mod config;
mod dynamics;
mod lexicon;
mod state;
mod vector;

use thiserror::Error;

pub use config::{ConfigOverrides, FluxConfig};
pub use dynamics::{detect_flux, rarity_multiplier, update_state};
pub use lexicon::{AffectModel, EmojiLexicon, KeywordEntry, KeywordVocabulary};
pub use state::{replay, step, HistoryEntry, NarrativeState};
pub use vector::{EmotionVector, Genre};

#[derive(Debug, Error)]
pub enum AffectError {
    #[error("unknown emoji {0:?}")]
    UnknownEmoji(String),
    #[error("unknown keyword {0:?}")]
    UnknownKeyword(String),
    #[error("unknown genre {0:?}")]
    UnknownGenre(String),
    #[error("no keyword in the vocabulary has a positive frequency")]
    DegenerateVocabulary,
    #[error("rarity multiplier {0} outside the configured range")]
    InvalidBeta(f64),
    #[error("invalid emotion vector: {0}")]
    InvalidVector(String),
    #[error("invalid flux config: {0}")]
    InvalidConfig(String),
    #[error("invalid emoji lexicon: {0}")]
    InvalidLexicon(String),
    #[error("invalid keyword vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("event out of order: expected turn {expected}, found {found}")]
    OutOfOrder { expected: u32, found: u32 },
    #[error("turn {turn}: {source}")]
    AtTurn {
        turn: u32,
        #[source]
        source: Box<AffectError>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AffectError {
    /// The innermost error, with any turn context stripped.
    pub fn root(&self) -> &AffectError {
        match self {
            AffectError::AtTurn { source, .. } => source.root(),
            other => other,
        }
    }
}
