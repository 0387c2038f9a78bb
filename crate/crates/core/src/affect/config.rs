use serde::{Deserialize, Serialize};

use crate::affect::AffectError;
use crate::scalar::Scalar;

/// Parameters of the flux dynamics.
///
/// `decay` is applied once per new panel, `flux_threshold` is the dominance
/// cutoff, and the rarity multiplier is confined to `[beta_min, beta_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxConfig<T> {
    pub decay: T,
    pub flux_threshold: T,
    pub beta_min: T,
    pub beta_max: T,
}

impl<T: Scalar> Default for FluxConfig<T> {
    fn default() -> Self {
        Self {
            decay: T::from_ratio(4, 5),
            flux_threshold: T::from_ratio(5, 2),
            beta_min: T::one(),
            beta_max: T::from_ratio(3, 1),
        }
    }
}

/// Overridable subset of [`FluxConfig`], as found in config files and in
/// session-creation requests. Absent fields keep their defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_threshold: Option<f64>,
}

impl ConfigOverrides {
    pub fn from_json(text: &str) -> Result<Self, AffectError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Layers `other` on top of `self`.
    pub fn merged(self, other: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            decay: other.decay.or(self.decay),
            flux_threshold: other.flux_threshold.or(self.flux_threshold),
        }
    }
}

impl<T: Scalar> FluxConfig<T> {
    pub fn with_overrides(overrides: &ConfigOverrides) -> Result<Self, AffectError> {
        let mut config = Self::default();
        if let Some(decay) = overrides.decay {
            config.decay = convert(decay, "decay")?;
        }
        if let Some(threshold) = overrides.flux_threshold {
            config.flux_threshold = convert(threshold, "flux_threshold")?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self, AffectError> {
        Self::with_overrides(&ConfigOverrides::from_json(text)?)
    }

    pub fn validate(&self) -> Result<(), AffectError> {
        let zero = T::zero();
        let all_finite = [self.decay, self.flux_threshold, self.beta_min, self.beta_max]
            .into_iter()
            .all(Scalar::is_finite);
        if !all_finite {
            return Err(AffectError::InvalidConfig("non-finite parameter".into()));
        }
        if !(self.decay > zero && self.decay <= T::one()) {
            return Err(AffectError::InvalidConfig(format!(
                "decay must lie in (0, 1], got {:?}",
                self.decay
            )));
        }
        if !(self.flux_threshold > zero) {
            return Err(AffectError::InvalidConfig(format!(
                "flux_threshold must be positive, got {:?}",
                self.flux_threshold
            )));
        }
        if !(self.beta_min > zero && self.beta_min <= self.beta_max) {
            return Err(AffectError::InvalidConfig(
                "beta bounds must satisfy 0 < beta_min <= beta_max".into(),
            ));
        }
        Ok(())
    }

    pub fn to_f64(&self) -> FluxConfig<f64> {
        FluxConfig {
            decay: self.decay.to_f64(),
            flux_threshold: self.flux_threshold.to_f64(),
            beta_min: self.beta_min.to_f64(),
            beta_max: self.beta_max.to_f64(),
        }
    }
}

fn convert<T: Scalar>(value: f64, field: &str) -> Result<T, AffectError> {
    T::from_f64(value)
        .ok_or_else(|| AffectError::InvalidConfig(format!("{field} = {value} is not representable")))
}
