//! Data shipped with the crate: the interface vocabulary, emoji lexicon and
//! style registry used when no override files are given.

use crate::affect::{AffectError, EmojiLexicon, KeywordVocabulary};
use crate::prompt::{PromptError, StyleRegistry};
use crate::scalar::Scalar;

pub const LEXICON_JSON: &str = include_str!("../data/lexicon.json");
pub const VOCABULARY_JSON: &str = include_str!("../data/vocab.json");
pub const STYLES_JSON: &str = include_str!("../data/styles.json");

pub fn lexicon<T: Scalar>() -> Result<EmojiLexicon<T>, AffectError> {
    EmojiLexicon::from_json(LEXICON_JSON)
}

pub fn vocabulary<T: Scalar>() -> Result<KeywordVocabulary<T>, AffectError> {
    KeywordVocabulary::from_json(VOCABULARY_JSON)
}

pub fn styles() -> Result<StyleRegistry, PromptError> {
    StyleRegistry::from_json(STYLES_JSON)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affect::Genre;

    #[test]
    fn shipped_data_loads() {
        let lex = lexicon::<f64>().unwrap();
        let vocab = vocabulary::<f64>().unwrap();
        let styles = styles().unwrap();
        assert!(lex.len() >= 12);
        assert!(vocab.len() >= 12);
        assert_eq!(lex.lookup("🥀").unwrap().to_array(), [0.0, 1.0, 0.0, 0.0]);
        let (w, scene) = vocab.lookup("Gunshot").unwrap();
        assert_eq!(w.to_array(), [0.0, 0.6, 0.4, 0.0]);
        assert_eq!(scene, "a sudden gunshot rings out");
        assert!(vocab.lookup("Spaceship").is_err());
        assert!(lex.lookup("🤡").is_err());
        let t = styles.modifier(Genre::Tragedy).unwrap();
        assert_eq!(t.positive, ["monochrome blue palette", "high contrast shadows", "film noir grain"]);
        assert_eq!(t.negative, ["bright colors", "cheerful expressions"]);
    }

    #[test]
    fn shipped_data_loads_exactly() {
        let lex = lexicon::<crate::Exact>().unwrap();
        assert_eq!(lex.lookup("😢").unwrap().tragedy, crate::Exact::new(9, 10));
    }
}
