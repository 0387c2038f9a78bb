use serde::{Deserialize, Serialize};

use crate::affect::{
    detect_flux, rarity_multiplier, update_state, AffectError, EmojiLexicon, EmotionVector,
    FluxConfig, Genre, KeywordVocabulary,
};
use crate::event::PanelEvent;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry<T> {
    pub turn_index: u32,
    pub state: EmotionVector<T>,
    pub active_genre: Option<Genre>,
}

/// Accumulated affect of one session.
///
/// `history[0]` is the zero state; `history[t]` is the state after panel `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeState<T> {
    pub current: EmotionVector<T>,
    pub turn_index: u32,
    pub active_genre: Option<Genre>,
    pub history: Vec<HistoryEntry<T>>,
}

impl<T: Scalar> Default for NarrativeState<T> {
    fn default() -> Self {
        Self::initial()
    }
}

impl<T: Scalar> NarrativeState<T> {
    pub fn initial() -> Self {
        Self {
            current: EmotionVector::zero(),
            turn_index: 0,
            active_genre: None,
            history: vec![HistoryEntry {
                turn_index: 0,
                state: EmotionVector::zero(),
                active_genre: None,
            }],
        }
    }

    pub fn at_turn(&self, turn: u32) -> Option<&HistoryEntry<T>> {
        self.history.get(turn as usize)
    }

    /// True when the active genre changed on `turn`.
    pub fn flux_triggered_at(&self, turn: u32) -> bool {
        match (turn.checked_sub(1), self.at_turn(turn)) {
            (Some(prev), Some(entry)) => self
                .at_turn(prev)
                .is_some_and(|p| p.active_genre != entry.active_genre),
            _ => false,
        }
    }

    /// Advances by one new panel. Pure: `self` is left untouched.
    pub fn step(
        &self,
        keyword: &str,
        emoji: &str,
        lexicon: &EmojiLexicon<T>,
        vocab: &KeywordVocabulary<T>,
        config: &FluxConfig<T>,
    ) -> Result<Self, AffectError> {
        let (w_kw, _) = vocab.lookup(keyword)?;
        let w_emoji = lexicon.lookup(emoji)?;
        let beta = match rarity_multiplier(keyword, vocab, config) {
            Err(AffectError::DegenerateVocabulary) => {
                log::warn!("vocabulary has no keyword frequencies; using beta_max");
                config.beta_max
            }
            other => other?,
        };
        let current = update_state(&self.current, &w_kw, &w_emoji, beta, config)?;
        let active_genre = detect_flux(&current, self.active_genre, config);
        let turn_index = self.turn_index + 1;

        let mut history = self.history.clone();
        history.push(HistoryEntry {
            turn_index,
            state: current,
            active_genre,
        });
        Ok(Self {
            current,
            turn_index,
            active_genre,
            history,
        })
    }
}

/// Free-function form of [`NarrativeState::step`].
pub fn step<T: Scalar>(
    state: &NarrativeState<T>,
    keyword: &str,
    emoji: &str,
    lexicon: &EmojiLexicon<T>,
    vocab: &KeywordVocabulary<T>,
    config: &FluxConfig<T>,
) -> Result<NarrativeState<T>, AffectError> {
    state.step(keyword, emoji, lexicon, vocab, config)
}

/// Rebuilds a session's state from its event log.
///
/// New-panel events are folded through [`step`]; regeneration events must
/// refer to an existing panel and leave the state untouched.
pub fn replay<'a, T: Scalar>(
    events: impl IntoIterator<Item = &'a PanelEvent>,
    lexicon: &EmojiLexicon<T>,
    vocab: &KeywordVocabulary<T>,
    config: &FluxConfig<T>,
) -> Result<NarrativeState<T>, AffectError> {
    let mut state = NarrativeState::initial();
    for event in events {
        if event.is_regeneration() {
            if event.turn_index == 0 || event.turn_index > state.turn_index {
                return Err(AffectError::OutOfOrder {
                    expected: state.turn_index + 1,
                    found: event.turn_index,
                });
            }
            continue;
        }
        if event.turn_index != state.turn_index + 1 {
            return Err(AffectError::OutOfOrder {
                expected: state.turn_index + 1,
                found: event.turn_index,
            });
        }
        state = state
            .step(&event.keyword, &event.emoji, lexicon, vocab, config)
            .map_err(|source| AffectError::AtTurn {
                turn: event.turn_index,
                source: Box::new(source),
            })?;
    }
    Ok(state)
}
