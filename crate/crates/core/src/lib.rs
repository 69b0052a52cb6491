//! Corner-classification neural networks.
//!
//! [`cc4`] trains in one pass with a global Hamming radius of
//! generalization. [`cc1`] adds a second pass that fits a radius to each
//! sample and answers uncovered queries by k-nearest-neighbour vote, or by
//! kernel regression when trained on real-valued targets. Inputs are binary
//! patterns, built from real values with the thermometer codes in
//! [`encoding`]. [`datasets`] and [`experiments`] provide the shape-grid and
//! Mackey-Glass benchmarks.

pub mod bits;
pub mod cc1;
pub mod cc4;
pub mod datasets;
pub mod encoding;
pub mod error;
pub mod experiments;
pub mod rng;

pub use bits::BitVector;
pub use cc1::{Cc1Model, Membership, Mode};
pub use cc4::{Cc4Model, TrainingSample};
pub use encoding::{ClassCode, UnaryCoder};
pub use error::{Error, Result};
