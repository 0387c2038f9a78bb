//! Core of the genre-shifting comic engine.
//!
//! * [`affect`] accumulates keyword and emoji weights across panels and
//!   decides when a genre takes over.
//! * [`spatial`] turns the sketched panel frame into a shot type, a
//!   generation resolution and a guidance bitmap.
//! * [`prompt`] merges both streams with the character anchor into a
//!   [`GenerationRequest`].
//!
//! The affect engine is generic over [`Scalar`]; the aliases below fix it to
//! `f64` (what the service runs), `f32`, or exact rationals.

pub mod affect;
pub mod defaults;
pub mod event;
pub mod prompt;
pub mod scalar;
pub mod spatial;

pub use affect::{
    detect_flux, rarity_multiplier, replay, step, update_state, AffectError, ConfigOverrides,
    Genre, HistoryEntry,
};
pub use event::PanelEvent;
pub use prompt::{
    synthesize, CharacterAnchor, GenerationRequest, PromptError, SeedPolicy, StyleModifier,
    StyleRegistry, SynthesisInput,
};
pub use scalar::{Exact, Scalar};
pub use spatial::{
    classify_aspect, composition_directive, rasterize_sketch, snap_resolution, AspectThresholds,
    Canvas, CompositionClass, CompositionDirectives, ControlImage, PanelBox, Resolution, SketchStrokes,
};

pub type EmotionVector<T = f64> = affect::EmotionVector<T>;
pub type FluxConfig<T = f64> = affect::FluxConfig<T>;
pub type NarrativeState<T = f64> = affect::NarrativeState<T>;
pub type EmojiLexicon<T = f64> = affect::EmojiLexicon<T>;
pub type KeywordVocabulary<T = f64> = affect::KeywordVocabulary<T>;
pub type AffectModel<T = f64> = affect::AffectModel<T>;

pub type EmotionVectorF32 = affect::EmotionVector<f32>;
pub type NarrativeStateF32 = affect::NarrativeState<f32>;
pub type FluxConfigF32 = affect::FluxConfig<f32>;

pub type ExactEmotionVector = affect::EmotionVector<Exact>;
pub type ExactNarrativeState = affect::NarrativeState<Exact>;
pub type ExactFluxConfig = affect::FluxConfig<Exact>;
pub type ExactAffectModel = affect::AffectModel<Exact>;
