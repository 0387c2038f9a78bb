//! The per-turn flux dynamics: rarity multiplier, state update and dominance.

use crate::affect::{AffectError, EmotionVector, FluxConfig, Genre, KeywordVocabulary};
use crate::scalar::Scalar;

/// Rarity multiplier for `keyword`, linear in normalized corpus frequency:
/// the most frequent keyword maps to `beta_min`, an unseen one to `beta_max`.
pub fn rarity_multiplier<T: Scalar>(
    keyword: &str,
    vocab: &KeywordVocabulary<T>,
    config: &FluxConfig<T>,
) -> Result<T, AffectError> {
    let entry = vocab.entry(keyword)?;
    let f_max = vocab.max_frequency();
    if f_max == 0 {
        return Err(AffectError::DegenerateVocabulary);
    }
    let share = T::from_count(entry.frequency) / T::from_count(f_max);
    let beta = config.beta_min + (config.beta_max - config.beta_min) * (T::one() - share);
    Ok(beta.max_of(config.beta_min).min_of(config.beta_max))
}

/// `prev * decay + (w_kw + w_emoji) * beta`, component-wise.
pub fn update_state<T: Scalar>(
    prev: &EmotionVector<T>,
    w_kw: &EmotionVector<T>,
    w_emoji: &EmotionVector<T>,
    beta: T,
    config: &FluxConfig<T>,
) -> Result<EmotionVector<T>, AffectError> {
    if !(beta >= config.beta_min && beta <= config.beta_max) {
        return Err(AffectError::InvalidBeta(beta.to_f64()));
    }
    let injection = w_kw.add(*w_emoji);
    let next = prev.zip_with(injection, |p, w| p * config.decay + w * beta);
    next.validate()?;
    Ok(next)
}

/// Which genre's style modifier is active after observing `state`.
///
/// A genre takes over only when it exceeds the threshold and is the strict
/// unique maximum. Otherwise the previous genre is kept, including when no
/// component is above threshold any more.
pub fn detect_flux<T: Scalar>(
    state: &EmotionVector<T>,
    previous_active: Option<Genre>,
    config: &FluxConfig<T>,
) -> Option<Genre> {
    if !(state.max_component() > config.flux_threshold) {
        return previous_active;
    }
    state.dominant().or(previous_active)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affect::KeywordEntry;

    fn vocab(freqs: &[(&str, u64)]) -> KeywordVocabulary<f64> {
        KeywordVocabulary::new(freqs.iter().map(|(k, f)| KeywordEntry {
            keyword: k.to_string(),
            weights: EmotionVector::zero(),
            frequency: *f,
            scene_fragment: format!("{k} scene"),
        }))
        .unwrap()
    }

    fn v(c: [f64; 4]) -> EmotionVector<f64> {
        EmotionVector::from_array(c)
    }

    #[test]
    fn rarity_endpoints_and_midpoint() {
        let cfg = FluxConfig::default();
        let vocab = vocab(&[("common", 100), ("rare", 0), ("mid", 50)]);
        assert_eq!(rarity_multiplier("common", &vocab, &cfg).unwrap(), 1.0);
        assert_eq!(rarity_multiplier("rare", &vocab, &cfg).unwrap(), 3.0);
        assert_eq!(rarity_multiplier("mid", &vocab, &cfg).unwrap(), 2.0);
        assert!(matches!(
            rarity_multiplier("absent", &vocab, &cfg),
            Err(AffectError::UnknownKeyword(_))
        ));
    }

    #[test]
    fn rarity_degenerate_vocabulary() {
        let cfg = FluxConfig::default();
        let vocab = vocab(&[("a", 0), ("b", 0)]);
        assert!(matches!(
            rarity_multiplier("a", &vocab, &cfg),
            Err(AffectError::DegenerateVocabulary)
        ));
    }

    #[test]
    fn update_examples() {
        let cfg = FluxConfig::default();
        let half = v([0.0, 0.5, 0.0, 0.0]);
        assert_eq!(
            update_state(&EmotionVector::zero(), &half, &half, 1.0, &cfg).unwrap(),
            v([0.0, 1.0, 0.0, 0.0])
        );
        for beta in [1.0, 2.0, 3.0] {
            let out = update_state(
                &v([0.0, 1.0, 0.0, 0.0]),
                &EmotionVector::zero(),
                &EmotionVector::zero(),
                beta,
                &cfg,
            )
            .unwrap();
            assert_eq!(out, v([0.0, 0.8, 0.0, 0.0]));
        }
        let out = update_state(&EmotionVector::splat(1.0), &half, &half, 3.0, &cfg).unwrap();
        let expected = [0.8, 3.8, 0.8, 0.8];
        for (a, b) in out.to_array().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn update_rejects_beta_outside_range() {
        let cfg = FluxConfig::default();
        let z = EmotionVector::<f64>::zero();
        assert!(matches!(
            update_state(&z, &z, &z, 0.5, &cfg),
            Err(AffectError::InvalidBeta(_))
        ));
        assert!(update_state(&z, &z, &z, 3.5, &cfg).is_err());
    }

    #[test]
    fn flux_examples() {
        let cfg = FluxConfig::default();
        assert_eq!(detect_flux(&v([0.0, 2.6, 0.0, 0.0]), None, &cfg), Some(Genre::Tragedy));
        assert_eq!(detect_flux(&v([0.0, 2.4, 0.0, 0.0]), None, &cfg), None);
        assert_eq!(
            detect_flux(&v([2.6, 2.6, 0.0, 0.0]), Some(Genre::Romance), &cfg),
            Some(Genre::Romance)
        );
        // exactly at threshold does not trigger
        assert_eq!(detect_flux(&v([0.0, 2.5, 0.0, 0.0]), None, &cfg), None);
    }

    #[test]
    fn active_genre_persists_below_threshold() {
        let cfg = FluxConfig::default();
        assert_eq!(
            detect_flux(&v([0.0, 0.1, 0.0, 0.0]), Some(Genre::Mystery), &cfg),
            Some(Genre::Mystery)
        );
        // displaced by another genre meeting the rule
        assert_eq!(
            detect_flux(&v([0.0, 0.1, 3.0, 0.0]), Some(Genre::Mystery), &cfg),
            Some(Genre::Chaos)
        );
    }
}
