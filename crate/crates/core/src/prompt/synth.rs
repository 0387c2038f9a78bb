use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompt::{PromptError, StyleModifier};
use crate::spatial::{ControlImage, Resolution};

/// Fixed protagonist description that opens every prompt of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CharacterAnchor(String);

impl CharacterAnchor {
    pub fn new(description: impl Into<String>) -> Result<Self, PromptError> {
        let description = description.into().trim().to_string();
        if description.is_empty() {
            return Err(PromptError::InvalidAnchor("description is empty".into()));
        }
        if description.contains(['\n', '\r']) {
            return Err(PromptError::InvalidAnchor("description contains a line break".into()));
        }
        Ok(Self(description))
    }

    pub fn description(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CharacterAnchor {
    type Error = PromptError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<CharacterAnchor> for String {
    fn from(a: CharacterAnchor) -> Self {
        a.0
    }
}

/// A fully assembled request for the image backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub negative_prompt: String,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub control_image: Option<ControlImage>,
    pub panel_index: u32,
}

#[derive(Serialize)]
struct CanonicalRequest<'a> {
    prompt: &'a str,
    negative_prompt: &'a str,
    width: u32,
    height: u32,
    seed: u64,
    panel_index: u32,
    control_image: Option<String>,
}

impl GenerationRequest {
    /// Hex SHA-256 of the canonical JSON form. The control bitmap enters
    /// through its own digest over `width`, `height` and raw pixels.
    pub fn digest(&self) -> String {
        let control_image = self.control_image.as_ref().map(|c| {
            let mut h = Sha256::new();
            h.update(c.width.to_le_bytes());
            h.update(c.height.to_le_bytes());
            h.update(&c.pixels);
            hex::encode(h.finalize())
        });
        let canonical = CanonicalRequest {
            prompt: &self.prompt,
            negative_prompt: &self.negative_prompt,
            width: self.width,
            height: self.height,
            seed: self.seed,
            panel_index: self.panel_index,
            control_image,
        };
        let bytes = serde_json::to_vec(&canonical).expect("canonical request serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn prompt_phrases(&self) -> Vec<&str> {
        split_phrases(&self.prompt).collect()
    }

    pub fn negative_phrases(&self) -> Vec<&str> {
        split_phrases(&self.negative_prompt).collect()
    }
}

/// Comma-separated phrases, trimmed, blanks dropped.
pub fn split_phrases(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|p| !p.is_empty())
}

/// Exact-string, case-sensitive dedup keeping first occurrences.
pub fn dedup_phrases<S: AsRef<str>>(phrases: &[S]) -> Vec<String> {
    let mut seen = HashSet::new();
    phrases
        .iter()
        .map(AsRef::as_ref)
        .filter(|p| seen.insert(*p))
        .map(str::to_string)
        .collect()
}

pub struct SynthesisInput<'a> {
    pub anchor: &'a CharacterAnchor,
    pub directive: &'a str,
    pub scene_fragment: &'a str,
    pub active: Option<&'a StyleModifier>,
    pub base_negative: &'a [String],
    pub seed: u64,
    pub panel_index: u32,
    pub size: Resolution,
    pub control_image: Option<ControlImage>,
}

/// Assembles anchor, composition directive, scene and active style into one
/// request.
///
/// The anchor is emitted verbatim first. Later phrases are dropped when they
/// repeat an earlier phrase or contain one of the active genre's suppressed
/// phrases. Negative phrases that occur anywhere in the final prompt are
/// dropped, so the prompt never asks for and against the same thing.
pub fn synthesize(input: SynthesisInput<'_>) -> Result<GenerationRequest, PromptError> {
    if split_phrases(input.directive).next().is_none() {
        return Err(PromptError::EmptyFragment("composition directive"));
    }
    if split_phrases(input.scene_fragment).next().is_none() {
        return Err(PromptError::EmptyFragment("scene fragment"));
    }
    let anchor = input.anchor.description();
    let suppressed: Vec<&str> = input
        .active
        .map(|m| m.negative.iter().flat_map(|n| split_phrases(n)).collect())
        .unwrap_or_default();

    let mut seen: HashSet<&str> = split_phrases(anchor).collect();
    let mut body = Vec::new();
    let style = input.active.into_iter().flat_map(|m| m.positive.iter());
    let candidates = split_phrases(input.directive)
        .chain(split_phrases(input.scene_fragment))
        .chain(style.flat_map(|p| split_phrases(p)));
    for phrase in candidates {
        if seen.contains(phrase) || suppressed.iter().any(|n| phrase.contains(n)) {
            continue;
        }
        seen.insert(phrase);
        body.push(phrase);
    }

    let mut prompt = anchor.to_string();
    for phrase in &body {
        prompt.push_str(", ");
        prompt.push_str(phrase);
    }

    let negatives: Vec<&str> = input
        .base_negative
        .iter()
        .flat_map(|n| split_phrases(n))
        .chain(suppressed.iter().copied())
        .filter(|n| !prompt.contains(n))
        .collect();
    let negative_prompt = dedup_phrases(&negatives).join(", ");

    Ok(GenerationRequest {
        prompt,
        negative_prompt,
        width: input.size.width,
        height: input.size.height,
        seed: input.seed,
        control_image: input.control_image,
        panel_index: input.panel_index,
    })
}
