//! One-pass CC4 corner-classification network.
//!
//! Every training sample becomes one hidden neuron. Its input weights are
//! `+1` where the sample has a one and `-1` where it has a zero, and its
//! bias weight is `r - s + 1` with `s` the sample's ones-count. For a query
//! `x` the neuron's net input is then `r + 1 - hamming(x, sample)`, so it
//! fires exactly when the query lies within Hamming radius `r`. Output
//! weights are `+1`/`-1` copies of the sample's class code, and both layers
//! use a step that is 1 only for strictly positive sums.

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::encoding::ClassCode;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSample {
    pub input: BitVector,
    pub output: ClassCode,
}

impl TrainingSample {
    pub fn new(input: BitVector, output: ClassCode) -> Self {
        Self { input, output }
    }
}

/// Checks that the set is non-empty and uniform; returns `(R, k)`.
pub(crate) fn sample_dims(samples: &[TrainingSample]) -> Result<(usize, usize)> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Argument("training set is empty".into()))?;
    let (r_len, k) = (first.input.len(), first.output.width());
    if r_len == 0 || k == 0 {
        return Err(Error::Argument("inputs and outputs need at least one bit".into()));
    }
    for s in samples {
        s.input.check_len(r_len)?;
        if s.output.width() != k {
            return Err(Error::Dimension {
                expected: k,
                found: s.output.width(),
            });
        }
    }
    Ok((r_len, k))
}

#[inline]
fn sign(bit: bool) -> i8 {
    if bit {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cc4Model {
    input_len: usize,
    output_len: usize,
    radius: u32,
    /// S x R, row-major, entries in {-1, +1}.
    hidden_weights: Vec<i8>,
    bias_weights: Vec<i32>,
    /// S x k, row-major, entries in {-1, +1}.
    output_weights: Vec<i8>,
    // Packed views of the +1 and -1 positions of each hidden row.
    plus: Vec<BitVector>,
    minus: Vec<BitVector>,
}

pub fn train_cc4(samples: &[TrainingSample], r: u32) -> Result<Cc4Model> {
    let (input_len, output_len) = sample_dims(samples)?;
    if r as usize > input_len {
        return Err(Error::Argument(format!(
            "radius {r} exceeds input length {input_len}"
        )));
    }
    let n = samples.len();
    let mut hidden_weights = Vec::with_capacity(n * input_len);
    let mut bias_weights = Vec::with_capacity(n);
    let mut output_weights = Vec::with_capacity(n * output_len);
    for s in samples {
        hidden_weights.extend(s.input.iter().map(sign));
        let ones = s.input.count_ones() as i32;
        bias_weights.push(r as i32 - ones + 1);
        output_weights.extend(s.output.bits().iter().map(sign));
    }
    Cc4Model::from_parts(
        input_len,
        output_len,
        r,
        hidden_weights,
        bias_weights,
        output_weights,
    )
}

impl Cc4Model {
    /// Rebuilds a model from raw weight arrays, checking every structural
    /// invariant (±1 entries, bias column consistent with `radius`).
    pub fn from_parts(
        input_len: usize,
        output_len: usize,
        radius: u32,
        hidden_weights: Vec<i8>,
        bias_weights: Vec<i32>,
        output_weights: Vec<i8>,
    ) -> Result<Self> {
        let hidden = bias_weights.len();
        if hidden == 0 || input_len == 0 || output_len == 0 {
            return Err(Error::Argument("model dimensions must be positive".into()));
        }
        if hidden_weights.len() != hidden * input_len {
            return Err(Error::Dimension {
                expected: hidden * input_len,
                found: hidden_weights.len(),
            });
        }
        if output_weights.len() != hidden * output_len {
            return Err(Error::Dimension {
                expected: hidden * output_len,
                found: output_weights.len(),
            });
        }
        if radius as usize > input_len {
            return Err(Error::Argument(format!(
                "radius {radius} exceeds input length {input_len}"
            )));
        }
        if hidden_weights.iter().chain(&output_weights).any(|&w| w != 1 && w != -1) {
            return Err(Error::Format("weights must be +1 or -1".into()));
        }
        let mut plus = Vec::with_capacity(hidden);
        let mut minus = Vec::with_capacity(hidden);
        for (i, row) in hidden_weights.chunks_exact(input_len).enumerate() {
            let p = BitVector::from_bools(&row.iter().map(|&w| w == 1).collect::<Vec<_>>());
            let ones = p.count_ones() as i64;
            if bias_weights[i] as i64 != radius as i64 - ones + 1 {
                return Err(Error::Format(format!(
                    "bias weight {} of hidden neuron {i} does not match radius {radius}",
                    bias_weights[i]
                )));
            }
            minus.push(p.complement());
            plus.push(p);
        }
        Ok(Self {
            input_len,
            output_len,
            radius,
            hidden_weights,
            bias_weights,
            output_weights,
            plus,
            minus,
        })
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn hidden_count(&self) -> usize {
        self.bias_weights.len()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn hidden_weights(&self) -> &[i8] {
        &self.hidden_weights
    }

    pub fn hidden_row(&self, i: usize) -> &[i8] {
        &self.hidden_weights[i * self.input_len..(i + 1) * self.input_len]
    }

    pub fn bias_weights(&self) -> &[i32] {
        &self.bias_weights
    }

    pub fn output_weights(&self) -> &[i8] {
        &self.output_weights
    }

    pub fn output_row(&self, i: usize) -> &[i8] {
        &self.output_weights[i * self.output_len..(i + 1) * self.output_len]
    }

    /// Net input `sum_j w_ij x_j + bias_i` of hidden neuron `i`.
    #[inline]
    fn net_input(&self, i: usize, x: &BitVector) -> i64 {
        let dot = x.and_count(&self.plus[i]) as i64 - x.and_count(&self.minus[i]) as i64;
        dot + self.bias_weights[i] as i64
    }

    fn firing(&self, x: &BitVector) -> Result<Vec<bool>> {
        x.check_len(self.input_len)?;
        Ok((0..self.hidden_count())
            .map(|i| self.net_input(i, x) > 0)
            .collect())
    }

    pub fn hidden_activations(&self, x: &BitVector) -> Result<BitVector> {
        Ok(BitVector::from_bools(&self.firing(x)?))
    }

    /// Output code bits: bit `j` is 1 iff the firing neurons' `±1` votes on
    /// `j` sum to a strictly positive value.
    pub fn predict(&self, x: &BitVector) -> Result<BitVector> {
        let firing = self.firing(x)?;
        let mut sums = vec![0i64; self.output_len];
        for (i, _) in firing.iter().enumerate().filter(|(_, &f)| f) {
            for (s, &w) in sums.iter_mut().zip(self.output_row(i)) {
                *s += w as i64;
            }
        }
        Ok(BitVector::from_bools(
            &sums.iter().map(|&s| s > 0).collect::<Vec<_>>(),
        ))
    }

    /// Number of hidden neurons that fire for `x`.
    pub fn coverage_count(&self, x: &BitVector) -> Result<usize> {
        Ok(self.firing(x)?.into_iter().filter(|&f| f).count())
    }
}

pub fn hidden_activations(model: &Cc4Model, x: &BitVector) -> Result<BitVector> {
    model.hidden_activations(x)
}

pub fn predict_cc4(model: &Cc4Model, x: &BitVector) -> Result<BitVector> {
    model.predict(x)
}

pub fn coverage_count(model: &Cc4Model, x: &BitVector) -> Result<usize> {
    model.coverage_count(x)
}
