use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One bit per feature column; the GA chromosome.
///
/// Ordered by fitness tie-break rules elsewhere; equality and hashing are
/// bitwise. Serialized as an array of `0`/`1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask {
    bits: Vec<bool>,
}

impl FeatureMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        FeatureMask { bits }
    }

    pub fn all(n: usize) -> Self {
        FeatureMask { bits: vec![true; n] }
    }

    pub fn none(n: usize) -> Self {
        FeatureMask { bits: vec![false; n] }
    }

    /// Mask with exactly the listed columns set.
    pub fn of(n: usize, selected: &[usize]) -> Self {
        let mut m = Self::none(n);
        for &i in selected {
            m.bits[i] = true;
        }
        m
    }

    /// Decodes the low `n` bits of `code`; bit `i` of the integer is column `i`.
    pub fn from_code(n: usize, code: u64) -> Self {
        FeatureMask {
            bits: (0..n).map(|i| code >> i & 1 == 1).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn selected(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }

    /// Checks the mask is usable for training on `n_features` columns.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.len() != n_features {
            return Err(Error::MaskLength {
                mask: self.len(),
                features: n_features,
            });
        }
        if self.count() == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(())
    }
}

impl fmt::Debug for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        write!(f, "FeatureMask({s})")
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.bits.iter().map(|&b| u8::from(b)))
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        raw.into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(serde::de::Error::custom(format!("mask bit must be 0 or 1, got {other}"))),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(FeatureMask::from_bits)
    }
}
