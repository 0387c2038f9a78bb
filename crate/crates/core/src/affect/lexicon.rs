use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::affect::{AffectError, EmotionVector};
use crate::scalar::Scalar;

/// File representation of a weight vector. Files carry plain decimals; the
/// engine converts them into its scalar type at load.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    romance: f64,
    tragedy: f64,
    chaos: f64,
    mystery: f64,
}

impl RawWeights {
    fn convert<T: Scalar>(self) -> Result<EmotionVector<T>, AffectError> {
        EmotionVector::from_f64_array([self.romance, self.tragedy, self.chaos, self.mystery])
    }
}

fn check_unit_scale<T: Scalar>(what: &str, key: &str, w: &EmotionVector<T>) -> Result<(), String> {
    w.validate().map_err(|e| format!("{what} {key:?}: {e}"))?;
    if w.max_component() > T::one() {
        return Err(format!("{what} {key:?}: weights exceed unit scale"));
    }
    Ok(())
}

/// Emoji → weight vector table.
///
/// Keys are NFC-normalized single grapheme clusters; lookups normalize the
/// query the same way, so composed and decomposed spellings agree.
#[derive(Debug, Clone, PartialEq)]
pub struct EmojiLexicon<T> {
    entries: BTreeMap<String, EmotionVector<T>>,
}

impl<T: Scalar> EmojiLexicon<T> {
    pub fn new(
        entries: impl IntoIterator<Item = (String, EmotionVector<T>)>,
    ) -> Result<Self, AffectError> {
        let mut map = BTreeMap::new();
        for (key, weights) in entries {
            let key: String = key.nfc().collect();
            if key.graphemes(true).count() != 1 {
                return Err(AffectError::InvalidLexicon(format!(
                    "{key:?} is not a single grapheme cluster"
                )));
            }
            check_unit_scale("emoji", &key, &weights).map_err(AffectError::InvalidLexicon)?;
            if map.insert(key.clone(), weights).is_some() {
                return Err(AffectError::InvalidLexicon(format!(
                    "{key:?} appears twice after normalization"
                )));
            }
        }
        Ok(Self { entries: map })
    }

    pub fn from_json(text: &str) -> Result<Self, AffectError> {
        let raw: BTreeMap<String, RawWeights> = serde_json::from_str(text)?;
        let entries = raw
            .into_iter()
            .map(|(k, w)| w.convert().map(|w| (k, w)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(entries)
    }

    pub fn lookup(&self, emoji: &str) -> Result<EmotionVector<T>, AffectError> {
        let key: String = emoji.nfc().collect();
        self.entries
            .get(&key)
            .copied()
            .ok_or_else(|| AffectError::UnknownEmoji(emoji.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &EmotionVector<T>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Copy with every weight multiplied by `factor`. The result is not held
    /// to unit scale; it exists for sensitivity analysis of the dynamics.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.scale(factor)))
                .collect(),
        }
    }
}

/// One vocabulary keyword as offered by the UI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeywordEntry<T> {
    pub keyword: String,
    pub weights: EmotionVector<T>,
    /// Corpus frequency; feeds the rarity multiplier.
    pub frequency: u64,
    pub scene_fragment: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKeyword {
    weights: RawWeights,
    frequency: u64,
    scene_fragment: String,
}

/// Closed keyword vocabulary with case-insensitive lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordVocabulary<T> {
    entries: BTreeMap<String, KeywordEntry<T>>,
    max_frequency: u64,
}

fn fold_case(keyword: &str) -> String {
    keyword.trim().to_lowercase()
}

impl<T: Scalar> KeywordVocabulary<T> {
    pub fn new(entries: impl IntoIterator<Item = KeywordEntry<T>>) -> Result<Self, AffectError> {
        let mut map = BTreeMap::new();
        for mut entry in entries {
            entry.keyword = entry.keyword.trim().to_string();
            entry.scene_fragment = entry.scene_fragment.trim().to_string();
            if entry.keyword.is_empty() {
                return Err(AffectError::InvalidVocabulary("empty keyword".into()));
            }
            if entry.scene_fragment.is_empty() {
                return Err(AffectError::InvalidVocabulary(format!(
                    "keyword {:?} has an empty scene fragment",
                    entry.keyword
                )));
            }
            check_unit_scale("keyword", &entry.keyword, &entry.weights)
                .map_err(AffectError::InvalidVocabulary)?;
            let key = fold_case(&entry.keyword);
            if let Some(prev) = map.insert(key, entry) {
                return Err(AffectError::InvalidVocabulary(format!(
                    "keyword {:?} is not case-insensitively unique",
                    prev.keyword
                )));
            }
        }
        let max_frequency = map.values().map(|e| e.frequency).max().unwrap_or(0);
        Ok(Self {
            entries: map,
            max_frequency,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, AffectError> {
        let raw: BTreeMap<String, RawKeyword> = serde_json::from_str(text)?;
        let entries = raw
            .into_iter()
            .map(|(keyword, r)| {
                Ok(KeywordEntry {
                    keyword,
                    weights: r.weights.convert()?,
                    frequency: r.frequency,
                    scene_fragment: r.scene_fragment,
                })
            })
            .collect::<Result<Vec<_>, AffectError>>()?;
        Self::new(entries)
    }

    pub fn entry(&self, keyword: &str) -> Result<&KeywordEntry<T>, AffectError> {
        self.entries
            .get(&fold_case(keyword))
            .ok_or_else(|| AffectError::UnknownKeyword(keyword.to_string()))
    }

    pub fn lookup(&self, keyword: &str) -> Result<(EmotionVector<T>, &str), AffectError> {
        let e = self.entry(keyword)?;
        Ok((e.weights, e.scene_fragment.as_str()))
    }

    pub fn max_frequency(&self) -> u64 {
        self.max_frequency
    }

    pub fn iter(&self) -> impl Iterator<Item = &KeywordEntry<T>> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// See [`EmojiLexicon::scaled`].
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(k, e)| {
                    let mut e = e.clone();
                    e.weights = e.weights.scale(factor);
                    (k.clone(), e)
                })
                .collect(),
            max_frequency: self.max_frequency,
        }
    }
}

/// The closed input vocabulary of a deployment: emoji lexicon plus keywords.
#[derive(Debug, Clone, PartialEq)]
pub struct AffectModel<T> {
    pub lexicon: EmojiLexicon<T>,
    pub vocabulary: KeywordVocabulary<T>,
}

impl<T: Scalar> AffectModel<T> {
    pub fn new(lexicon: EmojiLexicon<T>, vocabulary: KeywordVocabulary<T>) -> Self {
        Self {
            lexicon,
            vocabulary,
        }
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self::new(self.lexicon.scaled(factor), self.vocabulary.scaled(factor))
    }
}
