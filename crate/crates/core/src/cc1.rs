//! Two-pass CC1 network with a per-sample radius of generalization.
//!
//! The first pass stores each training input and code as a hidden neuron
//! (the same `±1` weight prescription as CC4). The second pass gives neuron
//! `i` the radius `max(0, d_i - 1)`, where `d_i` is the Hamming distance to
//! the nearest sample carrying a different output code, so no region ever
//! contains a conflicting training input.
//!
//! Inference switches on coverage. If some regions contain the query, the
//! covering neurons decide (nearest one for classification, membership
//! weighted mean for regression). Otherwise the `knn_k` nearest stored
//! samples decide. All ties break toward the lowest stored index.

use crate::bits::BitVector;
use crate::cc4::{sample_dims, TrainingSample};
use crate::error::{Error, Result};

pub const DEFAULT_KNN_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Classify,
    Regress,
}

/// Per-neuron weighting of the selected neurons, as a function of the
/// Hamming distance `d` to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Membership {
    /// `1 / (1 + d)`
    InverseDistance,
    /// `exp(-d^2 / (2 sigma^2))`
    Gaussian { sigma: f64 },
}

impl Membership {
    /// Gaussian kernel with the default bandwidth `R / 8`.
    pub fn default_gaussian(input_len: usize) -> Self {
        Membership::Gaussian {
            sigma: input_len as f64 / 8.0,
        }
    }

    #[inline]
    pub fn weight(&self, distance: usize) -> f64 {
        let d = distance as f64;
        match *self {
            Membership::InverseDistance => 1.0 / (1.0 + d),
            Membership::Gaussian { sigma } => (-d * d / (2.0 * sigma * sigma)).exp(),
        }
    }
}

/// Which neurons answer a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    /// Neurons whose region contains the query, in index order, with their
    /// distances.
    Covered(Vec<(usize, usize)>),
    /// The `knn_k` nearest neurons ordered by `(distance, index)`.
    Nearest(Vec<(usize, usize)>),
}

impl Selection {
    pub fn neurons(&self) -> &[(usize, usize)] {
        match self {
            Selection::Covered(v) | Selection::Nearest(v) => v,
        }
    }

    pub fn is_covered(&self) -> bool {
        matches!(self, Selection::Covered(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cc1Model {
    stored_inputs: Vec<BitVector>,
    stored_codes: Vec<BitVector>,
    stored_targets: Option<Vec<f64>>,
    radii: Vec<u32>,
    knn_k: usize,
    mode: Mode,
    membership: Membership,
}

pub fn knn_k_for(knn_fraction: f64, sample_count: usize) -> Result<usize> {
    if !(knn_fraction > 0.0 && knn_fraction <= 1.0) {
        return Err(Error::Argument(format!(
            "knn fraction must lie in (0, 1], got {knn_fraction}"
        )));
    }
    Ok(((knn_fraction * sample_count as f64).floor() as usize).clamp(1, sample_count))
}

/// Second pass: `max(0, d_i - 1)` against the nearest other-code sample,
/// or `R` if every sample shares the code.
fn adaptive_radii(samples: &[TrainingSample], input_len: usize) -> Vec<u32> {
    samples
        .iter()
        .map(|si| {
            samples
                .iter()
                .filter(|sj| sj.output.bits() != si.output.bits())
                .map(|sj| si.input.hamming(&sj.input))
                .min()
                .map_or(input_len, |d| d.saturating_sub(1)) as u32
        })
        .collect()
}

pub fn train_cc1(samples: &[TrainingSample], knn_fraction: f64) -> Result<Cc1Model> {
    let (input_len, _) = sample_dims(samples)?;
    let knn_k = knn_k_for(knn_fraction, samples.len())?;
    Ok(Cc1Model {
        stored_inputs: samples.iter().map(|s| s.input.clone()).collect(),
        stored_codes: samples.iter().map(|s| s.output.bits().clone()).collect(),
        stored_targets: None,
        radii: adaptive_radii(samples, input_len),
        knn_k,
        mode: Mode::Classify,
        membership: Membership::InverseDistance,
    })
}

/// Regression variant: radii still come from the samples' codes (usually a
/// quantized target), while inference averages the raw `targets`.
pub fn train_cc1_regress(
    samples: &[TrainingSample],
    targets: &[f64],
    knn_fraction: f64,
) -> Result<Cc1Model> {
    if targets.len() != samples.len() {
        return Err(Error::Dimension {
            expected: samples.len(),
            found: targets.len(),
        });
    }
    if let Some(t) = targets.iter().find(|t| !t.is_finite()) {
        return Err(Error::Argument(format!("non-finite regression target {t}")));
    }
    let mut model = train_cc1(samples, knn_fraction)?;
    model.stored_targets = Some(targets.to_vec());
    model.mode = Mode::Regress;
    Ok(model)
}

/// CC1 whose radii are capped by a fixed CC4 radius `r`.
pub fn refine_from_cc4(samples: &[TrainingSample], r: u32, knn_fraction: f64) -> Result<Cc1Model> {
    let mut model = train_cc1(samples, knn_fraction)?;
    for radius in &mut model.radii {
        *radius = (*radius).min(r);
    }
    Ok(model)
}

impl Cc1Model {
    /// Rebuilds a model from stored parts, validating the invariants.
    pub fn from_parts(
        stored_inputs: Vec<BitVector>,
        stored_codes: Vec<BitVector>,
        stored_targets: Option<Vec<f64>>,
        radii: Vec<u32>,
        knn_k: usize,
        membership: Membership,
    ) -> Result<Self> {
        let n = stored_inputs.len();
        if n == 0 {
            return Err(Error::Argument("model has no stored samples".into()));
        }
        let input_len = stored_inputs[0].len();
        let output_len = stored_codes.first().map_or(0, |c| c.len());
        if input_len == 0 || output_len == 0 {
            return Err(Error::Argument("model dimensions must be positive".into()));
        }
        for s in &stored_inputs {
            s.check_len(input_len)?;
        }
        for c in &stored_codes {
            c.check_len(output_len)?;
        }
        if stored_codes.len() != n || radii.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: stored_codes.len().min(radii.len()),
            });
        }
        if let Some(&r) = radii.iter().find(|&&r| r as usize > input_len) {
            return Err(Error::Argument(format!("radius {r} exceeds input length {input_len}")));
        }
        if knn_k == 0 || knn_k > n {
            return Err(Error::Argument(format!("knn_k {knn_k} outside [1, {n}]")));
        }
        if let Some(t) = &stored_targets {
            if t.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: t.len(),
                });
            }
        }
        if let Membership::Gaussian { sigma } = membership {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::Argument(format!("gaussian sigma must be positive, got {sigma}")));
            }
        }
        let mode = if stored_targets.is_some() {
            Mode::Regress
        } else {
            Mode::Classify
        };
        Ok(Self {
            stored_inputs,
            stored_codes,
            stored_targets,
            radii,
            knn_k,
            mode,
            membership,
        })
    }

    pub fn with_membership(mut self, membership: Membership) -> Result<Self> {
        if let Membership::Gaussian { sigma } = membership {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::Argument(format!("gaussian sigma must be positive, got {sigma}")));
            }
        }
        self.membership = membership;
        Ok(self)
    }

    pub fn input_len(&self) -> usize {
        self.stored_inputs[0].len()
    }

    pub fn output_len(&self) -> usize {
        self.stored_codes[0].len()
    }

    pub fn hidden_count(&self) -> usize {
        self.stored_inputs.len()
    }

    pub fn stored_inputs(&self) -> &[BitVector] {
        &self.stored_inputs
    }

    pub fn stored_codes(&self) -> &[BitVector] {
        &self.stored_codes
    }

    pub fn stored_targets(&self) -> Option<&[f64]> {
        self.stored_targets.as_deref()
    }

    pub fn radii(&self) -> &[u32] {
        &self.radii
    }

    pub fn knn_k(&self) -> usize {
        self.knn_k
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn membership(&self) -> Membership {
        self.membership
    }

    /// The 1NN/kNN switch: covering neurons if any, else the `knn_k` nearest.
    pub fn select(&self, x: &BitVector) -> Result<Selection> {
        x.check_len(self.input_len())?;
        let distances: Vec<usize> = self.stored_inputs.iter().map(|s| s.hamming(x)).collect();
        let covered: Vec<(usize, usize)> = distances
            .iter()
            .enumerate()
            .filter(|&(i, &d)| d <= self.radii[i] as usize)
            .map(|(i, &d)| (i, d))
            .collect();
        if !covered.is_empty() {
            return Ok(Selection::Covered(covered));
        }
        let mut order: Vec<(usize, usize)> = distances.into_iter().enumerate().collect();
        let k = self.knn_k;
        if k < order.len() {
            order.select_nth_unstable_by_key(k - 1, |&(i, d)| (d, i));
            order.truncate(k);
        }
        order.sort_unstable_by_key(|&(i, d)| (d, i));
        Ok(Selection::Nearest(order))
    }

    pub fn predict(&self, x: &BitVector) -> Result<BitVector> {
        if self.mode != Mode::Classify {
            return Err(Error::State("classification on a regression model".into()));
        }
        match self.select(x)? {
            Selection::Covered(c) => {
                let &(best, _) = c
                    .iter()
                    .min_by_key(|&&(i, d)| (d, i))
                    .expect("covering set is non-empty");
                Ok(self.stored_codes[best].clone())
            }
            Selection::Nearest(n) => Ok(self.majority_vote(n.iter().map(|&(i, _)| i))),
        }
    }

    /// Bitwise majority over the codes of `neurons`; a tied bit is 0.
    fn majority_vote(&self, neurons: impl Iterator<Item = usize>) -> BitVector {
        let mut votes = vec![0i64; self.output_len()];
        for i in neurons {
            for (v, b) in votes.iter_mut().zip(self.stored_codes[i].iter()) {
                *v += if b { 1 } else { -1 };
            }
        }
        BitVector::from_bools(&votes.iter().map(|&v| v > 0).collect::<Vec<_>>())
    }

    pub fn regress(&self, x: &BitVector) -> Result<f64> {
        let targets = match (&self.mode, &self.stored_targets) {
            (Mode::Regress, Some(t)) => t,
            _ => return Err(Error::State("regression on a classification model".into())),
        };
        let selection = self.select(x)?;
        let (mut num, mut den) = (0.0, 0.0);
        for &(i, d) in selection.neurons() {
            let m = self.membership.weight(d);
            num += m * targets[i];
            den += m;
        }
        if den > 0.0 {
            Ok(num / den)
        } else {
            // Gaussian weights can underflow far from every sample.
            let &(i, _) = selection.neurons().iter().min_by_key(|&&(i, d)| (d, i)).unwrap();
            Ok(targets[i])
        }
    }

    /// The normalized membership vector over all stored neurons.
    ///
    /// Classification puts all mass on the winning neuron in the covered
    /// case and spreads it uniformly over the `knn_k` nearest otherwise, so
    /// thresholding `mu . code_bit > 1/2` reproduces [`Cc1Model::predict`].
    /// Regression uses the membership weights of the selected neurons, so
    /// `mu . targets` equals [`Cc1Model::regress`].
    pub fn membership_vector(&self, x: &BitVector) -> Result<Vec<f64>> {
        let selection = self.select(x)?;
        let mut mu = vec![0.0; self.hidden_count()];
        match (self.mode, &selection) {
            (Mode::Classify, Selection::Covered(c)) => {
                let &(best, _) = c.iter().min_by_key(|&&(i, d)| (d, i)).unwrap();
                mu[best] = 1.0;
            }
            (Mode::Classify, Selection::Nearest(n)) => {
                let w = 1.0 / n.len() as f64;
                for &(i, _) in n {
                    mu[i] = w;
                }
            }
            (Mode::Regress, sel) => {
                let total: f64 = sel.neurons().iter().map(|&(_, d)| self.membership.weight(d)).sum();
                if total > 0.0 {
                    for &(i, d) in sel.neurons() {
                        mu[i] = self.membership.weight(d) / total;
                    }
                } else {
                    let &(i, _) = sel.neurons().iter().min_by_key(|&&(i, d)| (d, i)).unwrap();
                    mu[i] = 1.0;
                }
            }
        }
        Ok(mu)
    }

    /// Size of the covering set (0 when the kNN fallback is used).
    pub fn coverage_count(&self, x: &BitVector) -> Result<usize> {
        Ok(match self.select(x)? {
            Selection::Covered(c) => c.len(),
            Selection::Nearest(_) => 0,
        })
    }
}

pub fn predict_cc1(model: &Cc1Model, x: &BitVector) -> Result<BitVector> {
    model.predict(x)
}

pub fn regress_cc1(model: &Cc1Model, x: &BitVector) -> Result<f64> {
    model.regress(x)
}

pub fn membership_vector(model: &Cc1Model, x: &BitVector) -> Result<Vec<f64>> {
    model.membership_vector(x)
}
