use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Corpus;

/// An exact fraction in `[0, 1]`.
///
/// Kept as a ratio so `floor(fraction · len)` does not depend on binary
/// rounding of values like `0.1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fraction {
    num: u64,
    den: u64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("fraction {0} is outside [0, 1]")]
pub struct FractionError(pub f64);

const DECIMAL_DENOMINATOR: u64 = 1_000_000_000;

impl Fraction {
    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self, FractionError> {
        if den == 0 || num > den {
            return Err(FractionError(if den == 0 { f64::NAN } else { num as f64 / den as f64 }));
        }
        Ok(Fraction { num, den })
    }

    pub fn from_percent(percent: u32) -> Result<Self, FractionError> {
        Fraction::new(percent as u64, 100)
    }

    /// Converts a decimal, rounding to nine fractional digits.
    pub fn from_f64(x: f64) -> Result<Self, FractionError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(FractionError(x));
        }
        let num = num_traits::Float::round(x * DECIMAL_DENOMINATOR as f64) as u64;
        Fraction::new(num, DECIMAL_DENOMINATOR)
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `floor(self · n)`, computed exactly.
    pub fn of(self, n: usize) -> usize {
        ((self.num as u128 * n as u128) / self.den as u128) as usize
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        Fraction::from_f64(x).map_err(serde::de::Error::custom)
    }
}

/// Keeps `floor(fraction · |c|)` sentences chosen by a seeded uniform
/// shuffle, returned in their original relative order.
pub fn sample_fraction(corpus: &Corpus, fraction: Fraction, seed: u64) -> Corpus {
    let keep = fraction.of(corpus.len());
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut chosen = order[..keep].to_vec();
    chosen.sort_unstable();
    Corpus {
        language: corpus.language.clone(),
        sentences: chosen.into_iter().map(|i| corpus.sentences[i].clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Token};
    use alloc::format;
    use alloc::vec;

    fn corpus(n: usize) -> Corpus {
        let mut c = Corpus::new("fa");
        for i in 0..n {
            c.sentences.push(Sentence {
                id: format!("{i}"),
                language: "fa".into(),
                tokens: vec![Token::new(1, "w", "w", "N")],
                frames: vec![],
            });
        }
        c
    }

    #[test]
    fn ten_percent_floor() {
        let c = corpus(23984);
        let s = sample_fraction(&c, Fraction::from_f64(0.10).unwrap(), 13);
        assert_eq!(s.len(), 2398);
    }

    #[test]
    fn extremes() {
        let c = corpus(37);
        assert!(sample_fraction(&c, Fraction::ZERO, 1).is_empty());
        assert_eq!(sample_fraction(&c, Fraction::ONE, 1), c);
    }

    #[test]
    fn deterministic_ordered_subsequence() {
        let c = corpus(200);
        let f = Fraction::from_percent(30).unwrap();
        let a = sample_fraction(&c, f, 99);
        assert_eq!(a, sample_fraction(&c, f, 99));
        assert_eq!(a.len(), 60);
        let ids: Vec<usize> = a.sentences.iter().map(|s| s.id.parse().unwrap()).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        assert_ne!(a, sample_fraction(&c, f, 100));
    }

    #[test]
    fn fraction_bounds() {
        assert!(Fraction::from_f64(1.5).is_err());
        assert!(Fraction::from_f64(-0.1).is_err());
        assert!(Fraction::new(1, 0).is_err());
        assert_eq!(Fraction::from_f64(0.29).unwrap().of(100), 29);
        assert_eq!(Fraction::from_percent(70).unwrap().of(10), 7);
    }
}
