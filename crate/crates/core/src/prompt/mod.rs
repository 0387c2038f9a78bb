//! Prompt synthesis: the spatial and affective streams meet here.

mod seed;
mod style;
mod synth;

use thiserror::Error;

use crate::affect::Genre;

pub use seed::{splitmix64, SeedPolicy};
pub use style::{default_base_negative, style_modifier_for, StyleModifier, StyleRegistry};
pub use synth::{
    dedup_phrases, split_phrases, synthesize, CharacterAnchor, GenerationRequest, SynthesisInput,
};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("style registry has no modifier for {0}")]
    MissingGenre(Genre),
    #[error("invalid style registry: {0}")]
    InvalidRegistry(String),
    #[error("invalid character anchor: {0}")]
    InvalidAnchor(String),
    #[error("{0} is empty")]
    EmptyFragment(&'static str),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
