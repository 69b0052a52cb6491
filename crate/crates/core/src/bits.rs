//! Packed fixed-length binary patterns.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// A fixed-length binary pattern packed into 64-bit words.
///
/// Bits beyond `len` in the last word are always zero, so word-wise
/// popcounts never see garbage.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD_BITS)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            words: vec![u64::MAX; len.div_ceil(WORD_BITS)],
            len,
        };
        v.clear_tail();
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Thermometer pattern: `ones` leading ones followed by zeros.
    pub fn prefix_ones(len: usize, ones: usize) -> Self {
        let mut v = Self::zeros(len);
        let ones = ones.min(len);
        let full = ones / WORD_BITS;
        for w in &mut v.words[..full] {
            *w = u64::MAX;
        }
        let rem = ones % WORD_BITS;
        if rem > 0 {
            v.words[full] = (1u64 << rem) - 1;
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    #[inline]
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where the two patterns differ.
    ///
    /// Panics on length mismatch; callers at API boundaries check first.
    #[inline]
    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len, "hamming distance on unequal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Ones-count of `self & other`.
    #[inline]
    pub fn and_count(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len, "and_count on unequal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn complement(&self) -> Self {
        let mut v = Self {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        v.clear_tail();
        v
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = Self::zeros(self.len + other.len);
        for (i, b) in self.iter().chain(other.iter()).enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.len == expected {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected,
                found: self.len,
            })
        }
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem > 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Format(format!(
                    "invalid bit character {other:?} in {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bools(&bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_hamming(a: &[bool], b: &[bool]) -> usize {
        a.iter().zip(b).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn parse_and_display() {
        let v: BitVector = "10110".parse().unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.count_ones(), 3);
        assert_eq!(v.to_string(), "10110");
        assert!("10a".parse::<BitVector>().is_err());
    }

    #[test]
    fn complement_keeps_tail_clear() {
        let v = BitVector::zeros(70).complement();
        assert_eq!(v.count_ones(), 70);
        assert_eq!(v, BitVector::ones(70));
    }

    #[test]
    fn prefix_ones_across_word_boundary() {
        let v = BitVector::prefix_ones(130, 65);
        assert_eq!(v.count_ones(), 65);
        assert!(v.get(64));
        assert!(!v.get(65));
    }

    proptest! {
        #[test]
        fn hamming_matches_naive(
            pair in (1usize..200).prop_flat_map(|n| (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(any::<bool>(), n),
            ))
        ) {
            let (a, b) = pair;
            let va = BitVector::from_bools(&a);
            let vb = BitVector::from_bools(&b);
            prop_assert_eq!(va.hamming(&vb), naive_hamming(&a, &b));
            prop_assert_eq!(va.hamming(&vb), vb.hamming(&va));
            prop_assert_eq!(va.hamming(&va), 0);
        }

        #[test]
        fn hamming_triangle_inequality(
            triple in (1usize..100).prop_flat_map(|n| (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(any::<bool>(), n),
            ))
        ) {
            let (a, b, c) = triple;
            let (a, b, c) = (BitVector::from_bools(&a), BitVector::from_bools(&b), BitVector::from_bools(&c));
            prop_assert!(a.hamming(&c) <= a.hamming(&b) + b.hamming(&c));
        }
    }
}
