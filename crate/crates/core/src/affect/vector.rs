use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::affect::AffectError;
use crate::scalar::Scalar;

/// One of the four affect dimensions tracked by the engine.
///
/// Declaration order is the canonical serialization and display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Genre {
    Romance,
    Tragedy,
    Chaos,
    Mystery,
}

impl Genre {
    pub const ALL: [Genre; 4] = [Genre::Romance, Genre::Tragedy, Genre::Chaos, Genre::Mystery];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Genre::Romance => "Romance",
            Genre::Tragedy => "Tragedy",
            Genre::Chaos => "Chaos",
            Genre::Mystery => "Mystery",
        }
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Genre {
    type Err = AffectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Genre::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| AffectError::UnknownGenre(s.to_string()))
    }
}

/// Non-negative scores over (Romance, Tragedy, Chaos, Mystery).
///
/// Used both for the accumulated narrative state and for the per-turn
/// keyword and emoji weight contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionVector<T> {
    pub romance: T,
    pub tragedy: T,
    pub chaos: T,
    pub mystery: T,
}

impl<T: Scalar> Default for EmotionVector<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> EmotionVector<T> {
    pub fn new(romance: T, tragedy: T, chaos: T, mystery: T) -> Result<Self, AffectError> {
        let v = Self::from_array([romance, tragedy, chaos, mystery]);
        v.validate()?;
        Ok(v)
    }

    pub fn zero() -> Self {
        Self::splat(T::zero())
    }

    pub fn splat(value: T) -> Self {
        Self::from_array([value; 4])
    }

    /// Unit weight on a single dimension.
    pub fn unit(genre: Genre) -> Self {
        let mut v = Self::zero();
        *v.get_mut(genre) = T::one();
        v
    }

    pub fn from_array(c: [T; 4]) -> Self {
        Self {
            romance: c[0],
            tragedy: c[1],
            chaos: c[2],
            mystery: c[3],
        }
    }

    pub fn to_array(self) -> [T; 4] {
        [self.romance, self.tragedy, self.chaos, self.mystery]
    }

    pub fn from_f64_array(c: [f64; 4]) -> Result<Self, AffectError> {
        let mut out = [T::zero(); 4];
        for (slot, value) in out.iter_mut().zip(c) {
            *slot = T::from_f64(value).ok_or_else(|| {
                AffectError::InvalidVector(format!("{value} is not representable"))
            })?;
        }
        let v = Self::from_array(out);
        v.validate()?;
        Ok(v)
    }

    pub fn to_f64_array(self) -> [f64; 4] {
        self.to_array().map(Scalar::to_f64)
    }

    pub fn get(&self, genre: Genre) -> T {
        self.to_array()[genre.index()]
    }

    pub fn get_mut(&mut self, genre: Genre) -> &mut T {
        match genre {
            Genre::Romance => &mut self.romance,
            Genre::Tragedy => &mut self.tragedy,
            Genre::Chaos => &mut self.chaos,
            Genre::Mystery => &mut self.mystery,
        }
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self::from_array(self.to_array().map(f))
    }

    pub fn zip_with(self, other: Self, f: impl Fn(T, T) -> T) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        Self::from_array([f(a[0], b[0]), f(a[1], b[1]), f(a[2], b[2]), f(a[3], b[3])])
    }

    pub fn scale(self, k: T) -> Self {
        self.map(|x| x * k)
    }

    pub fn add(self, other: Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn max_component(&self) -> T {
        self.to_array()
            .into_iter()
            .fold(T::zero(), |acc, x| acc.max_of(x))
    }

    /// The dimension holding the strict unique maximum, if there is one.
    pub fn dominant(&self) -> Option<Genre> {
        let max = self.max_component();
        let mut winners = Genre::ALL.into_iter().filter(|g| self.get(*g) == max);
        match (winners.next(), winners.next()) {
            (Some(g), None) => Some(g),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), AffectError> {
        for g in Genre::ALL {
            let x = self.get(g);
            if !x.is_finite() {
                return Err(AffectError::InvalidVector(format!("{g} component is not finite")));
            }
            if x < T::zero() {
                return Err(AffectError::InvalidVector(format!("{g} component is negative")));
            }
        }
        Ok(())
    }
}
