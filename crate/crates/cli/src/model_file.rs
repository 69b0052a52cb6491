//! Versioned JSON persistence for trained networks.
//!
//! Weights, biases and radii are written as JSON integers. CC1 models store
//! their pass-one weights in the same `±1` form as CC4, so the stored
//! patterns can be read back from the signs.

use std::fs;
use std::path::Path;

use cornerclass::{BitVector, Cc1Model, Cc4Model, Membership, UnaryCoder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported model format_version {found} (expected {FORMAT_VERSION})")]
    Version { found: u64 },

    #[error("invalid model: {0}")]
    Invalid(#[from] cornerclass::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Cc4(Cc4Model),
    Cc1(Cc1Model),
}

impl Network {
    pub fn input_len(&self) -> usize {
        match self {
            Network::Cc4(m) => m.input_len(),
            Network::Cc1(m) => m.input_len(),
        }
    }

    pub fn output_len(&self) -> usize {
        match self {
            Network::Cc4(m) => m.output_len(),
            Network::Cc1(m) => m.output_len(),
        }
    }

    pub fn predict(&self, x: &BitVector) -> cornerclass::Result<BitVector> {
        match self {
            Network::Cc4(m) => m.predict(x),
            Network::Cc1(m) => m.predict(x),
        }
    }
}

/// Grid geometry a model was trained on, so `predict` can rebuild inputs
/// from coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoderParams {
    pub levels: usize,
    pub lo: f64,
    pub hi: f64,
}

impl From<&UnaryCoder> for CoderParams {
    fn from(c: &UnaryCoder) -> Self {
        Self {
            levels: c.levels(),
            lo: c.lo(),
            hi: c.hi(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub network: Network,
    pub coders: Vec<CoderParams>,
    pub grid: Option<GridInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Cc4,
    Cc1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Dims {
    input_len: usize,
    hidden: usize,
    output_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum MembershipDoc {
    InverseDistance,
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format_version: u32,
    kind: Kind,
    dims: Dims,
    hidden_weights: Vec<Vec<i8>>,
    output_weights: Vec<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias_weights: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radii: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    knn_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    membership: Option<MembershipDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    targets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    coders: Vec<CoderParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridInfo>,
}

fn signs(bits: &BitVector) -> Vec<i8> {
    bits.iter().map(|b| if b { 1 } else { -1 }).collect()
}

fn from_signs(row: &[i8]) -> Result<BitVector, ModelFileError> {
    if row.iter().any(|&w| w != 1 && w != -1) {
        return Err(cornerclass::Error::Format("weights must be +1 or -1".into()).into());
    }
    Ok(BitVector::from_bools(&row.iter().map(|&w| w == 1).collect::<Vec<_>>()))
}

fn rows(flat: &[i8], width: usize) -> Vec<Vec<i8>> {
    flat.chunks_exact(width).map(|r| r.to_vec()).collect()
}

fn missing(field: &str) -> ModelFileError {
    ModelFileError::Invalid(cornerclass::Error::Format(format!("missing field `{field}`")))
}

impl ModelDoc {
    fn from_model(model: &SavedModel) -> Self {
        let base = |kind, dims, hidden_weights, output_weights| ModelDoc {
            format_version: FORMAT_VERSION,
            kind,
            dims,
            hidden_weights,
            output_weights,
            radius: None,
            bias_weights: None,
            radii: None,
            knn_k: None,
            membership: None,
            targets: None,
            coders: model.coders.clone(),
            grid: model.grid,
        };
        match &model.network {
            Network::Cc4(m) => ModelDoc {
                radius: Some(m.radius()),
                bias_weights: Some(m.bias_weights().to_vec()),
                ..base(
                    Kind::Cc4,
                    Dims {
                        input_len: m.input_len(),
                        hidden: m.hidden_count(),
                        output_len: m.output_len(),
                    },
                    rows(m.hidden_weights(), m.input_len()),
                    rows(m.output_weights(), m.output_len()),
                )
            },
            Network::Cc1(m) => ModelDoc {
                radii: Some(m.radii().to_vec()),
                knn_k: Some(m.knn_k()),
                membership: Some(match m.membership() {
                    Membership::InverseDistance => MembershipDoc::InverseDistance,
                    Membership::Gaussian { sigma } => MembershipDoc::Gaussian { sigma },
                }),
                targets: m.stored_targets().map(|t| t.to_vec()),
                ..base(
                    Kind::Cc1,
                    Dims {
                        input_len: m.input_len(),
                        hidden: m.hidden_count(),
                        output_len: m.output_len(),
                    },
                    m.stored_inputs().iter().map(signs).collect(),
                    m.stored_codes().iter().map(signs).collect(),
                )
            },
        }
    }

    fn into_model(self) -> Result<SavedModel, ModelFileError> {
        let Dims {
            input_len,
            hidden,
            output_len,
        } = self.dims;
        let dim_err = |expected, found| {
            ModelFileError::Invalid(cornerclass::Error::Dimension { expected, found })
        };
        if self.hidden_weights.len() != hidden {
            return Err(dim_err(hidden, self.hidden_weights.len()));
        }
        if self.output_weights.len() != hidden {
            return Err(dim_err(hidden, self.output_weights.len()));
        }
        if let Some(r) = self.hidden_weights.iter().find(|r| r.len() != input_len) {
            return Err(dim_err(input_len, r.len()));
        }
        if let Some(r) = self.output_weights.iter().find(|r| r.len() != output_len) {
            return Err(dim_err(output_len, r.len()));
        }
        let network = match self.kind {
            Kind::Cc4 => Network::Cc4(Cc4Model::from_parts(
                input_len,
                output_len,
                self.radius.ok_or_else(|| missing("radius"))?,
                self.hidden_weights.concat(),
                self.bias_weights.ok_or_else(|| missing("bias_weights"))?,
                self.output_weights.concat(),
            )?),
            Kind::Cc1 => {
                let inputs = self
                    .hidden_weights
                    .iter()
                    .map(|r| from_signs(r))
                    .collect::<Result<Vec<_>, _>>()?;
                let codes = self
                    .output_weights
                    .iter()
                    .map(|r| from_signs(r))
                    .collect::<Result<Vec<_>, _>>()?;
                let membership = match self.membership.ok_or_else(|| missing("membership"))? {
                    MembershipDoc::InverseDistance => Membership::InverseDistance,
                    MembershipDoc::Gaussian { sigma } => Membership::Gaussian { sigma },
                };
                Network::Cc1(Cc1Model::from_parts(
                    inputs,
                    codes,
                    self.targets,
                    self.radii.ok_or_else(|| missing("radii"))?,
                    self.knn_k.ok_or_else(|| missing("knn_k"))?,
                    membership,
                )?)
            }
        };
        Ok(SavedModel {
            network,
            coders: self.coders,
            grid: self.grid,
        })
    }
}

/// Byte offset of a 1-based `(line, column)` position reported by serde_json.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn parse_error(text: &str, e: serde_json::Error) -> ModelFileError {
    ModelFileError::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    }
}

pub fn to_json(model: &SavedModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelDoc::from_model(model))
        .expect("model documents always serialize");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<SavedModel, ModelFileError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(text, e))?;
    let version = value
        .get("format_version")
        .ok_or_else(|| ModelFileError::Parse {
            offset: 0,
            message: "missing format_version".into(),
        })?;
    match version.as_u64() {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => return Err(ModelFileError::Version { found: v }),
        None => {
            return Err(ModelFileError::Parse {
                offset: 0,
                message: format!("format_version must be an integer, got {version}"),
            })
        }
    }
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| parse_error(text, e))?;
    doc.into_model()
}

pub fn save_model(model: &SavedModel, path: &Path) -> Result<(), ModelFileError> {
    fs::write(path, to_json(model)).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<SavedModel, ModelFileError> {
    let text = fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cornerclass::cc1::{train_cc1, train_cc1_regress};
    use cornerclass::cc4::train_cc4;
    use cornerclass::encoding::encode_class;
    use cornerclass::rng::SplitMix64;
    use cornerclass::TrainingSample;

    fn random_bits(rng: &mut SplitMix64, len: usize) -> BitVector {
        BitVector::from_bools(&(0..len).map(|_| rng.next_u64() & 1 == 1).collect::<Vec<_>>())
    }

    fn random_samples(seed: u64, n: usize, len: usize) -> Vec<TrainingSample> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|_| {
                let x = random_bits(&mut rng, len);
                TrainingSample::new(x, encode_class(rng.below(4), 2).unwrap())
            })
            .collect()
    }

    fn round_trip(model: SavedModel) -> SavedModel {
        let back = from_json(&to_json(&model)).unwrap();
        assert_eq!(back, model);
        back
    }

    #[test]
    fn cc4_round_trip_predicts_identically() {
        let samples = random_samples(1, 40, 24);
        let model = SavedModel {
            network: Network::Cc4(train_cc4(&samples, 5).unwrap()),
            coders: vec![],
            grid: None,
        };
        let back = round_trip(model.clone());
        let mut rng = SplitMix64::new(99);
        for _ in 0..1000 {
            let x = random_bits(&mut rng, 24);
            assert_eq!(back.network.predict(&x).unwrap(), model.network.predict(&x).unwrap());
        }
    }

    #[test]
    fn cc1_round_trip_predicts_identically() {
        let samples = random_samples(2, 30, 20);
        let model = SavedModel {
            network: Network::Cc1(train_cc1(&samples, 0.1).unwrap()),
            coders: vec![CoderParams { levels: 10, lo: 0.0, hi: 10.0 }],
            grid: Some(GridInfo { width: 10, height: 10 }),
        };
        let back = round_trip(model.clone());
        let mut rng = SplitMix64::new(7);
        for _ in 0..1000 {
            let x = random_bits(&mut rng, 20);
            assert_eq!(back.network.predict(&x).unwrap(), model.network.predict(&x).unwrap());
        }
    }

    #[test]
    fn regression_targets_survive_exactly() {
        let samples = random_samples(3, 10, 8);
        let targets: Vec<f64> = (0..10).map(|i| (i as f64).sqrt() / 3.0).collect();
        let m = train_cc1_regress(&samples, &targets, 0.3)
            .unwrap()
            .with_membership(Membership::Gaussian { sigma: 1.7 })
            .unwrap();
        let back = round_trip(SavedModel { network: Network::Cc1(m), coders: vec![], grid: None });
        match back.network {
            Network::Cc1(m) => assert_eq!(m.stored_targets().unwrap(), &targets[..]),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn weights_are_integer_literals() {
        let m = train_cc4(&random_samples(4, 3, 6), 2).unwrap();
        let json = to_json(&SavedModel { network: Network::Cc4(m), coders: vec![], grid: None });
        assert!(json.contains("\"format_version\": 1"));
        assert!(!json.contains("1.0"));
        assert!(json.contains("-1"));
    }

    #[test]
    fn truncated_file_reports_offset() {
        let m = train_cc4(&random_samples(5, 3, 6), 2).unwrap();
        let json = to_json(&SavedModel { network: Network::Cc4(m), coders: vec![], grid: None });
        let cut = &json[..json.len() / 2];
        match from_json(cut) {
            Err(ModelFileError::Parse { offset, .. }) => assert!(offset > 0 && offset <= cut.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bumped_version_is_rejected() {
        let m = train_cc4(&random_samples(6, 3, 6), 2).unwrap();
        let json = to_json(&SavedModel { network: Network::Cc4(m), coders: vec![], grid: None })
            .replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(from_json(&json), Err(ModelFileError::Version { found: 2 })));
    }

    #[test]
    fn tampered_bias_is_rejected() {
        let m = train_cc4(&[TrainingSample::new("0000".parse().unwrap(), encode_class(0, 1).unwrap())], 2).unwrap();
        let json = to_json(&SavedModel { network: Network::Cc4(m), coders: vec![], grid: None });
        let bad = json.replace("\"bias_weights\": [\n    3\n  ]", "\"bias_weights\": [\n    4\n  ]");
        assert_ne!(bad, json);
        assert!(matches!(from_json(&bad), Err(ModelFileError::Invalid(_))));
    }

    #[test]
    fn byte_offsets() {
        assert_eq!(byte_offset("ab\ncd", 2, 2), 4);
        assert_eq!(byte_offset("ab\ncd", 1, 1), 0);
    }
}
