//! Longitudinal attribute patterns.
//!
//! A pattern over `T` occasions and `K` attributes is a `T·K`-bit integer in
//! occasion-major, least-significant-first order: bit `t·K + k` (zero based)
//! holds the mastery of attribute `k` on occasion `t`. The `K` bits of one
//! occasion are therefore contiguous, and `(index >> t·K) & (2^K − 1)` is the
//! occasion-`t` pattern.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default cap on `T·K`, i.e. at most 65,536 longitudinal patterns.
pub const DEFAULT_PATTERN_BITS_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttributePattern(pub u32);

impl AttributePattern {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatternSpace {
    occasions: usize,
    attributes: usize,
}

impl PatternSpace {
    pub fn new(occasions: usize, attributes: usize) -> Result<Self> {
        Self::with_cap(occasions, attributes, DEFAULT_PATTERN_BITS_CAP)
    }

    pub fn with_cap(occasions: usize, attributes: usize, cap_bits: usize) -> Result<Self> {
        if occasions == 0 || attributes == 0 {
            return Err(Error::Design("occasion and attribute counts must be positive".into()));
        }
        let bits = occasions * attributes;
        if bits > cap_bits.min(31) {
            return Err(Error::PatternSpace {
                bits,
                size: 1u128.checked_shl(bits as u32).unwrap_or(u128::MAX),
                cap: cap_bits.min(31),
            });
        }
        Ok(PatternSpace {
            occasions,
            attributes,
        })
    }

    pub fn occasions(&self) -> usize {
        self.occasions
    }

    pub fn attributes(&self) -> usize {
        self.attributes
    }

    pub fn bits(&self) -> usize {
        self.occasions * self.attributes
    }

    /// Number of longitudinal patterns, `2^{T·K}`.
    pub fn len(&self) -> usize {
        1 << self.bits()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of patterns on a single occasion, `2^K`.
    pub fn occasion_len(&self) -> usize {
        1 << self.attributes
    }

    pub fn iter(&self) -> impl Iterator<Item = AttributePattern> {
        (0..self.len() as u32).map(AttributePattern)
    }

    /// The `K`-bit pattern of occasion `t` (zero based).
    #[inline]
    pub fn occasion_pattern(&self, pattern: AttributePattern, t: usize) -> usize {
        (pattern.index() >> (t * self.attributes)) & (self.occasion_len() - 1)
    }

    #[inline]
    pub fn has_attribute(&self, pattern: AttributePattern, t: usize, k: usize) -> bool {
        pattern.0 >> (t * self.attributes + k) & 1 == 1
    }

    /// Bit vector in occasion-major order (`α_11 … α_K1, …, α_1T … α_KT`).
    pub fn to_bits(&self, pattern: AttributePattern) -> Vec<u8> {
        (0..self.bits()).map(|b| (pattern.0 >> b & 1) as u8).collect()
    }

    pub fn from_bits(&self, bits: &[u8]) -> Result<AttributePattern> {
        if bits.len() != self.bits() {
            return Err(Error::Argument(format!(
                "pattern has {} bits, expected {}",
                bits.len(),
                self.bits()
            )));
        }
        let mut index = 0u32;
        for (b, &v) in bits.iter().enumerate() {
            match v {
                0 => {}
                1 => index |= 1 << b,
                other => return Err(Error::Argument(format!("pattern bit {b} is {other}, expected 0 or 1"))),
            }
        }
        Ok(AttributePattern(index))
    }

    /// Compact text form: occasions separated by `-`, attributes in order,
    /// e.g. `110-111` for K=3, T=2.
    pub fn label(&self, pattern: AttributePattern) -> String {
        (0..self.occasions)
            .map(|t| occasion_label(self.occasion_pattern(pattern, t), self.attributes))
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// Text form of a single-occasion pattern, attribute 1 first.
pub fn occasion_label(pattern: usize, attributes: usize) -> String {
    (0..attributes)
        .map(|k| if pattern >> k & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// All `2^{T·K}` patterns, refusing spaces beyond the default cap.
pub fn enumerate_patterns(occasions: usize, attributes: usize) -> Result<PatternSpace> {
    PatternSpace::new(occasions, attributes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sizes() {
        assert_eq!(enumerate_patterns(2, 3).unwrap().len(), 64);
        assert_eq!(enumerate_patterns(1, 1).unwrap().len(), 2);
        assert_eq!(enumerate_patterns(3, 4).unwrap().len(), 4096);
    }

    #[test]
    fn cap_is_enforced() {
        match enumerate_patterns(3, 6) {
            Err(Error::PatternSpace { bits, size, .. }) => {
                assert_eq!(bits, 18);
                assert_eq!(size, 1 << 18);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(PatternSpace::with_cap(3, 6, 18).is_ok());
    }

    #[test]
    fn occasion_major_layout() {
        let s = PatternSpace::new(2, 3).unwrap();
        // α_21 = 1 and α_32 = 1
        let p = s.from_bits(&[0, 1, 0, 0, 0, 1]).unwrap();
        assert_eq!(p.0, 0b100_010);
        assert_eq!(s.occasion_pattern(p, 0), 0b010);
        assert_eq!(s.occasion_pattern(p, 1), 0b100);
        assert!(s.has_attribute(p, 0, 1) && s.has_attribute(p, 1, 2));
        assert_eq!(s.label(p), "010-001");
    }

    proptest! {
        #[test]
        fn index_bits_bijection(t in 1usize..4, k in 1usize..5, raw in 0u32..(1 << 16)) {
            let s = PatternSpace::new(t, k).unwrap();
            let p = AttributePattern(raw % s.len() as u32);
            prop_assert_eq!(s.from_bits(&s.to_bits(p)).unwrap(), p);
        }
    }
}
