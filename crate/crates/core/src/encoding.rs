//! Unary (thermometer) codes for magnitudes and k-bit binary codes for
//! class labels.
//!
//! A thermometer code of level `l` out of `L` is `l` ones followed by
//! `L - l` zeros, so the Hamming distance between two codes equals the
//! difference of their levels.

use crate::bits::BitVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnaryCoder {
    levels: usize,
    lo: f64,
    hi: f64,
}

impl UnaryCoder {
    pub fn new(levels: usize, lo: f64, hi: f64) -> Result<Self> {
        if levels == 0 {
            return Err(Error::Argument("unary code needs at least one level".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::Argument(format!(
                "unary range requires finite hi > lo, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { levels, lo, hi })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Level (number of leading ones) assigned to `value`.
    pub fn level(&self, value: f64) -> Result<usize> {
        if !(value >= self.lo && value <= self.hi) {
            return Err(Error::Range {
                value,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let scaled = ((value - self.lo) / (self.hi - self.lo) * self.levels as f64).floor();
        Ok((scaled as usize).min(self.levels))
    }

    pub fn encode(&self, value: f64) -> Result<BitVector> {
        Ok(BitVector::prefix_ones(self.levels, self.level(value)?))
    }

    /// Bucket midpoint of the code's level; the all-ones code maps to `hi`.
    pub fn decode(&self, code: &BitVector) -> Result<f64> {
        code.check_len(self.levels)?;
        let level = thermometer_level(code)?;
        if level == self.levels {
            return Ok(self.hi);
        }
        Ok(self.lo + (level as f64 + 0.5) * (self.hi - self.lo) / self.levels as f64)
    }
}

/// Count of leading ones, rejecting codes with a one after a zero.
pub fn thermometer_level(code: &BitVector) -> Result<usize> {
    let level = code.count_ones();
    if code.iter().take(level).all(|b| b) {
        Ok(level)
    } else {
        Err(Error::Format(format!("{code} is not a thermometer code")))
    }
}

pub fn unary_encode(coder: &UnaryCoder, value: f64) -> Result<BitVector> {
    coder.encode(value)
}

pub fn unary_decode(coder: &UnaryCoder, code: &BitVector) -> Result<f64> {
    coder.decode(code)
}

/// A class label together with its `k`-bit big-endian code.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassCode {
    label: u64,
    bits: BitVector,
}

impl ClassCode {
    pub fn label(&self) -> u64 {
        self.label
    }

    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn into_bits(self) -> BitVector {
        self.bits
    }

    pub fn from_bits(bits: BitVector) -> Self {
        Self {
            label: decode_class(&bits),
            bits,
        }
    }
}

pub fn encode_class(label: u64, k: usize) -> Result<ClassCode> {
    if k == 0 {
        return Err(Error::Argument("class code needs at least one bit".into()));
    }
    if k < 64 && label >> k != 0 {
        return Err(Error::LabelRange { label, bits: k });
    }
    let mut bits = BitVector::zeros(k);
    for j in 0..k {
        let shift = k - 1 - j;
        if shift < 64 && (label >> shift) & 1 == 1 {
            bits.set(j, true);
        }
    }
    Ok(ClassCode { label, bits })
}

/// Big-endian value of any bit pattern. Patterns wider than 64 bits keep
/// only the low 64.
pub fn decode_class(bits: &BitVector) -> u64 {
    bits.iter().fold(0u64, |acc, b| (acc << 1) | b as u64)
}

/// Smallest `k` with `2^k >= classes` (at least 1).
pub fn bits_for_classes(classes: usize) -> usize {
    let mut k = 1;
    while (1usize << k) < classes {
        k += 1;
    }
    k
}
