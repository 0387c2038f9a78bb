use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::affect::Genre;
use crate::prompt::PromptError;
use crate::spatial::CompositionDirectives;

/// Prompt fragments injected while a genre is active.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleModifier {
    pub genre: Genre,
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

impl StyleModifier {
    pub fn validate(&self) -> Result<(), PromptError> {
        let genre = self.genre;
        if self.positive.is_empty() || self.negative.is_empty() {
            return Err(PromptError::InvalidRegistry(format!(
                "{genre} needs both positive and negative fragments"
            )));
        }
        if let Some(p) = self.positive.iter().chain(&self.negative).find(|p| p.trim().is_empty()) {
            return Err(PromptError::InvalidRegistry(format!("{genre} has a blank fragment {p:?}")));
        }
        if let Some(p) = self.positive.iter().find(|p| self.negative.contains(p)) {
            return Err(PromptError::InvalidRegistry(format!(
                "{genre} lists {p:?} as both positive and negative"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModifier {
    positive: Vec<String>,
    negative: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawRegistry {
    #[serde(default)]
    composition: Option<CompositionDirectives>,
    #[serde(default)]
    base_negative: Option<Vec<String>>,
    #[serde(flatten)]
    genres: BTreeMap<String, RawModifier>,
}

pub fn default_base_negative() -> Vec<String> {
    ["deformed hands", "extra limbs", "text artifacts"]
        .map(String::from)
        .to_vec()
}

/// Style modifiers per genre, composition directives and the standing
/// negative prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StyleRegistry {
    modifiers: BTreeMap<Genre, StyleModifier>,
    pub composition: CompositionDirectives,
    pub base_negative: Vec<String>,
}

impl StyleRegistry {
    /// Builds a registry without requiring every genre. Use
    /// [`StyleRegistry::validate_complete`] before serving from it.
    pub fn from_modifiers(
        modifiers: impl IntoIterator<Item = StyleModifier>,
        composition: CompositionDirectives,
        base_negative: Vec<String>,
    ) -> Result<Self, PromptError> {
        let mut map = BTreeMap::new();
        for m in modifiers {
            m.validate()?;
            let genre = m.genre;
            if map.insert(genre, m).is_some() {
                return Err(PromptError::InvalidRegistry(format!("{genre} defined twice")));
            }
        }
        Ok(Self {
            modifiers: map,
            composition,
            base_negative,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, PromptError> {
        let raw: RawRegistry = serde_json::from_str(text)?;
        let modifiers = raw
            .genres
            .into_iter()
            .map(|(name, m)| {
                let genre = name
                    .parse::<Genre>()
                    .map_err(|_| PromptError::InvalidRegistry(format!("unknown genre {name:?}")))?;
                Ok(StyleModifier {
                    genre,
                    positive: m.positive,
                    negative: m.negative,
                })
            })
            .collect::<Result<Vec<_>, PromptError>>()?;
        let registry = Self::from_modifiers(
            modifiers,
            raw.composition.unwrap_or_default(),
            raw.base_negative.unwrap_or_else(default_base_negative),
        )?;
        registry.validate_complete()?;
        Ok(registry)
    }

    pub fn validate_complete(&self) -> Result<(), PromptError> {
        for g in Genre::ALL {
            self.modifier(g)?;
        }
        for (class, d) in [
            ("Panoramic", &self.composition.panoramic),
            ("Medium", &self.composition.medium),
            ("CloseUp", &self.composition.close_up),
        ] {
            if d.trim().is_empty() {
                return Err(PromptError::InvalidRegistry(format!("empty {class} directive")));
            }
        }
        Ok(())
    }

    pub fn modifier(&self, genre: Genre) -> Result<&StyleModifier, PromptError> {
        self.modifiers.get(&genre).ok_or(PromptError::MissingGenre(genre))
    }

    pub fn modifiers(&self) -> impl Iterator<Item = &StyleModifier> {
        self.modifiers.values()
    }
}

pub fn style_modifier_for(genre: Genre, registry: &StyleRegistry) -> Result<&StyleModifier, PromptError> {
    registry.modifier(genre)
}
