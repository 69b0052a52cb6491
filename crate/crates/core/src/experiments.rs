//! Seeded experiment harnesses: CC4 error against radius, CC1 against
//! best-radius CC4 across training fractions, and Mackey-Glass one-step
//! prediction with a persistence baseline.
//!
//! Every report is a pure function of its inputs and seeds. Sweep points run
//! in parallel and rows are sorted by `(parameter, seed)` before return.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bits::BitVector;
use crate::cc1::{train_cc1, train_cc1_regress, Membership, DEFAULT_KNN_FRACTION};
use crate::cc4::{train_cc4, TrainingSample};
use crate::datasets::{
    coordinate_coder, generate_mg, make_windows, render_scene, scene_to_samples, LabelGrid,
    MinMax, SeriesConfig, ShapeScene,
};
use crate::encoding::{bits_for_classes, decode_class, encode_class, UnaryCoder};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const VERSION_TAG: &str = concat!("cornerclass-", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// `round(fraction * n)` distinct indices in ascending order.
///
/// Draws with a partial Fisher-Yates shuffle of `0..n`: for each slot `i`
/// the swap partner is `i + next_u64() % (n - i)` from a SplitMix64 stream
/// seeded with `spec.seed`.
pub fn seeded_split(n: usize, spec: SplitSpec) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Argument("cannot split an empty set".into()));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0) {
        return Err(Error::Argument(format!(
            "train fraction must lie in (0, 1], got {}",
            spec.train_fraction
        )));
    }
    let m = (spec.train_fraction * n as f64).round() as usize;
    if m == 0 {
        return Err(Error::Argument(format!(
            "fraction {} of {n} selects no samples",
            spec.train_fraction
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(spec.seed);
    for i in 0..m {
        let j = i + rng.below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx.sort_unstable();
    Ok(idx)
}

pub fn classification_error(predicted: &[u64], truth: &[u64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Argument("no labels to compare".into()));
    }
    let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / truth.len() as f64)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// RMSE divided by the population standard deviation of `truth`.
pub fn nrmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Argument("no values to compare".into()));
    }
    let sd = std_dev(truth);
    if sd == 0.0 {
        return Err(Error::Degenerate("truth series is constant".into()));
    }
    let mse = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / truth.len() as f64;
    Ok(mse.sqrt() / sd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: f64,
    pub seed: u64,
    pub error: f64,
    pub coverage_mean: f64,
    /// Values for the report's `extra_columns`, in order.
    pub extra: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub experiment: String,
    pub parameter_name: String,
    pub extra_columns: Vec<String>,
    /// Echoed as `# key: value` lines.
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    fn new(experiment: &str, parameter_name: &str, extra_columns: &[&str]) -> Self {
        Self {
            experiment: experiment.into(),
            parameter_name: parameter_name.into(),
            extra_columns: extra_columns.iter().map(|s| s.to_string()).collect(),
            metadata: vec![
                ("experiment".into(), experiment.into()),
                ("version".into(), VERSION_TAG.into()),
            ],
            rows: Vec::new(),
        }
    }

    pub fn push_metadata(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            a.parameter
                .total_cmp(&b.parameter)
                .then(a.seed.cmp(&b.seed))
        });
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let pos = self.extra_columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.extra[pos]).collect())
    }

    /// `#`-prefixed metadata lines, a header, then one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}").expect("string write");
        }
        let mut w = csv_writer();
        let mut header = vec![
            self.parameter_name.clone(),
            "seed".into(),
            "error".into(),
            "coverage_mean".into(),
        ];
        header.extend(self.extra_columns.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![
                row.parameter.to_string(),
                row.seed.to_string(),
                row.error.to_string(),
                row.coverage_mean.to_string(),
            ];
            rec.extend(row.extra.iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        out.push_str(&finish_csv(w));
        out
    }
}

pub(crate) fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// A rendered scene with one encoded sample per cell.
#[derive(Debug, Clone)]
pub struct GridData {
    pub grid: LabelGrid,
    pub samples: Vec<TrainingSample>,
    pub output_bits: usize,
}

impl GridData {
    /// Thermometer-codes each coordinate with one level per cell and uses
    /// the smallest class code that fits the largest label.
    pub fn from_scene(scene: &ShapeScene) -> Result<Self> {
        let grid = render_scene(scene)?;
        let max_label = *grid.labels().iter().max().expect("grid is non-empty");
        let output_bits = bits_for_classes(max_label as usize + 1);
        let samples = scene_to_samples(
            &grid,
            &coordinate_coder(grid.width)?,
            &coordinate_coder(grid.height)?,
            output_bits,
        )?;
        Ok(Self {
            grid,
            samples,
            output_bits,
        })
    }

    pub fn input_len(&self) -> usize {
        self.samples[0].input.len()
    }

    pub fn truth(&self) -> &[u64] {
        self.grid.labels()
    }

    pub fn subset(&self, indices: &[usize]) -> Vec<TrainingSample> {
        indices.iter().map(|&i| self.samples[i].clone()).collect()
    }

    /// Misclassification fraction over every cell and the mean coverage
    /// reported by `classify`.
    pub fn evaluate<F>(&self, classify: F) -> Result<(f64, f64)>
    where
        F: Fn(&BitVector) -> Result<(BitVector, usize)>,
    {
        let mut predicted = Vec::with_capacity(self.samples.len());
        let mut coverage = 0usize;
        for s in &self.samples {
            let (bits, cov) = classify(&s.input)?;
            predicted.push(decode_class(&bits));
            coverage += cov;
        }
        let error = classification_error(&predicted, self.truth())?;
        Ok((error, coverage as f64 / self.samples.len() as f64))
    }
}

fn cc4_grid_error(data: &GridData, train: &[TrainingSample], r: u32) -> Result<(f64, f64)> {
    let model = train_cc4(train, r)?;
    data.evaluate(|x| Ok((model.predict(x)?, model.coverage_count(x)?)))
}

fn cc1_grid_error(data: &GridData, train: &[TrainingSample], knn_fraction: f64) -> Result<(f64, f64)> {
    let model = train_cc1(train, knn_fraction)?;
    data.evaluate(|x| Ok((model.predict(x)?, model.coverage_count(x)?)))
}

/// Bitwise majority of the training codes (ties to 0): what CC4 outputs
/// everywhere once every hidden neuron fires.
pub fn majority_code(train: &[TrainingSample]) -> Result<BitVector> {
    let k = train
        .first()
        .ok_or_else(|| Error::Argument("training set is empty".into()))?
        .output
        .width();
    let mut votes = vec![0i64; k];
    for s in train {
        for (v, b) in votes.iter_mut().zip(s.output.bits().iter()) {
            *v += if b { 1 } else { -1 };
        }
    }
    Ok(BitVector::from_bools(&votes.iter().map(|&v| v > 0).collect::<Vec<_>>()))
}

/// Error of the constant classifier that always answers [`majority_code`].
pub fn majority_baseline_error(data: &GridData, train: &[TrainingSample]) -> Result<f64> {
    let label = decode_class(&majority_code(train)?);
    let predicted = vec![label; data.samples.len()];
    classification_error(&predicted, data.truth())
}

fn check_radii(r_values: &[u32], input_len: usize) -> Result<()> {
    if r_values.is_empty() {
        return Err(Error::Argument("no radius values given".into()));
    }
    match r_values.iter().find(|&&r| r as usize > input_len) {
        Some(r) => Err(Error::Argument(format!(
            "radius {r} exceeds input length {input_len}"
        ))),
        None => Ok(()),
    }
}

/// CC4 trained on one split for each radius, evaluated on every cell.
/// Rows: `r, seed, error, coverage_mean`.
pub fn run_radius_sweep(data: &GridData, split: SplitSpec, r_values: &[u32]) -> Result<SweepReport> {
    check_radii(r_values, data.input_len())?;
    let train = data.subset(&seeded_split(data.samples.len(), split)?);
    let rows = r_values
        .par_iter()
        .map(|&r| {
            let (error, coverage_mean) = cc4_grid_error(data, &train, r)?;
            Ok(SweepRow {
                parameter: r as f64,
                seed: split.seed,
                error,
                coverage_mean,
                extra: vec![],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = SweepReport::new("radius-sweep", "r", &[]);
    report.push_metadata("train_fraction", split.train_fraction);
    report.push_metadata("train_size", train.len());
    report.push_metadata("cells", data.samples.len());
    report.rows = rows;
    report.sort_rows();
    Ok(report)
}

/// [`run_radius_sweep`] repeated over several split seeds, rows merged.
pub fn run_radius_sweep_seeds(
    data: &GridData,
    train_fraction: f64,
    seeds: &[u64],
    r_values: &[u32],
) -> Result<SweepReport> {
    let (first, rest) = seeds
        .split_first()
        .ok_or_else(|| Error::Argument("radius sweep needs at least one seed".into()))?;
    let mut report = run_radius_sweep(data, SplitSpec { train_fraction, seed: *first }, r_values)?;
    for &seed in rest {
        let more = run_radius_sweep(data, SplitSpec { train_fraction, seed }, r_values)?;
        report.rows.extend(more.rows);
    }
    report.sort_rows();
    Ok(report)
}

/// CC1 against best-radius CC4 for each `(fraction, seed)`.
///
/// The CC4 radius is chosen by lowest error on the full evaluation grid
/// (ties to the smaller radius), so the CC4 column is an oracle-selected
/// lower envelope. Columns: `fraction, seed, error` (CC1), `coverage_mean`
/// (CC1 covering-set size), then `cc4_best_error, cc4_best_r,
/// cc4_coverage_mean`.
pub fn run_fraction_sweep(
    data: &GridData,
    fractions: &[f64],
    seeds: &[u64],
    r_values: &[u32],
    knn_fraction: f64,
) -> Result<SweepReport> {
    check_radii(r_values, data.input_len())?;
    if fractions.is_empty() || seeds.is_empty() {
        return Err(Error::Argument("fraction sweep needs fractions and seeds".into()));
    }
    let points: Vec<(f64, u64)> = fractions
        .iter()
        .flat_map(|&f| seeds.iter().map(move |&s| (f, s)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(fraction, seed)| {
            let split = SplitSpec {
                train_fraction: fraction,
                seed,
            };
            let train = data.subset(&seeded_split(data.samples.len(), split)?);
            let (cc1_error, cc1_cov) = cc1_grid_error(data, &train, knn_fraction)?;
            let mut best: Option<(f64, u32, f64)> = None;
            for &r in r_values {
                let (e, cov) = cc4_grid_error(data, &train, r)?;
                if best.is_none_or(|(be, br, _)| e < be || (e == be && r < br)) {
                    best = Some((e, r, cov));
                }
            }
            let (be, br, bcov) = best.expect("r_values is non-empty");
            Ok(SweepRow {
                parameter: fraction,
                seed,
                error: cc1_error,
                coverage_mean: cc1_cov,
                extra: vec![be, br as f64, bcov],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = SweepReport::new(
        "fraction-sweep",
        "fraction",
        &["cc4_best_error", "cc4_best_r", "cc4_coverage_mean"],
    );
    report.push_metadata("knn_fraction", knn_fraction);
    report.push_metadata("cells", data.samples.len());
    report.rows = rows;
    report.sort_rows();
    Ok(report)
}

/// `(r, mean error, population std)` over seeds, ordered by `r`.
pub fn aggregate_by_parameter(report: &SweepReport, values: impl Fn(&SweepRow) -> f64) -> Vec<(f64, f64, f64)> {
    let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
    for row in &report.rows {
        match out.last_mut() {
            Some((p, v)) if *p == row.parameter => v.push(values(row)),
            _ => out.push((row.parameter, vec![values(row)])),
        }
    }
    out.into_iter()
        .map(|(p, v)| (p, mean(&v), std_dev(&v)))
        .collect()
}

/// Mean CC1 and mean best-radius CC4 error per fraction.
pub fn fraction_means(report: &SweepReport) -> Vec<(f64, f64, f64)> {
    let cc1 = aggregate_by_parameter(report, |r| r.error);
    let cc4 = aggregate_by_parameter(report, |r| r.extra[0]);
    cc1.into_iter()
        .zip(cc4)
        .map(|((f, c1, _), (_, c4, _))| (f, c1, c4))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgPredictParams {
    /// Window size (past values per prediction).
    pub k: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Unary levels per window value.
    pub levels: usize,
    pub knn_fraction: f64,
    pub membership: Membership,
}

impl Default for MgPredictParams {
    fn default() -> Self {
        Self {
            k: 5,
            n_train: 500,
            n_test: 500,
            levels: 32,
            knn_fraction: DEFAULT_KNN_FRACTION,
            membership: Membership::InverseDistance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MgPrediction {
    pub report: SweepReport,
    /// Index of each test target in the sampled series.
    pub t: Vec<usize>,
    pub truth: Vec<f64>,
    pub predicted: Vec<f64>,
    pub persistence: Vec<f64>,
    pub nrmse: f64,
    pub persistence_nrmse: f64,
}

impl MgPrediction {
    /// CSV with columns `t,truth,predicted`.
    pub fn trace_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(["t", "truth", "predicted"]).expect("in-memory write");
        for ((t, y), p) in self.t.iter().zip(&self.truth).zip(&self.predicted) {
            w.serialize((t, y, p)).expect("in-memory write");
        }
        finish_csv(w)
    }
}

/// Encodes a window as the concatenation of each value's thermometer code,
/// clamping normalized values into `[0, 1]`.
fn encode_window(values: &[f64], norm: &MinMax, coder: &UnaryCoder) -> Result<BitVector> {
    let mut bits = Vec::with_capacity(values.len() * coder.levels());
    for &v in values {
        let code = coder.encode(norm.forward(v).clamp(0.0, 1.0))?;
        bits.extend(code.iter());
    }
    Ok(BitVector::from_bools(&bits))
}

/// One-step-ahead Mackey-Glass prediction with CC1 in regression mode.
///
/// The series is generated with exactly `n_train + n_test + k` retained
/// points. Normalization is fitted on the values the training windows see.
/// Each training window's code is its target's unary level, which drives
/// the adaptive radii; regression averages the raw normalized targets.
pub fn run_mg_prediction(config: &SeriesConfig, params: &MgPredictParams) -> Result<MgPrediction> {
    let MgPredictParams {
        k,
        n_train,
        n_test,
        levels,
        knn_fraction,
        membership,
    } = *params;
    if k == 0 || n_train == 0 || levels == 0 {
        return Err(Error::Argument("k, n_train and levels must be positive".into()));
    }
    if n_test < 100 {
        return Err(Error::Argument(format!(
            "need at least 100 test windows, got {n_test}"
        )));
    }
    let cfg = SeriesConfig {
        n_samples: n_train + n_test + k,
        ..*config
    };
    let series = generate_mg(&cfg)?;
    let windows = make_windows(&series, k)?;
    if windows.len() < n_train + n_test {
        return Err(Error::Argument("series too short for the requested split".into()));
    }
    let norm = MinMax::fit(&series[..n_train + k])?;
    let coder = UnaryCoder::new(levels, 0.0, 1.0)?;
    let code_bits = bits_for_classes(levels + 1);

    let (train_w, test_w) = windows.split_at(n_train);
    let mut samples = Vec::with_capacity(n_train);
    let mut targets = Vec::with_capacity(n_train);
    for w in train_w {
        let target = norm.forward(w.target).clamp(0.0, 1.0);
        let label = coder.level(target)? as u64;
        samples.push(TrainingSample::new(
            encode_window(&w.inputs, &norm, &coder)?,
            encode_class(label, code_bits)?,
        ));
        targets.push(target);
    }
    let model = train_cc1_regress(&samples, &targets, knn_fraction)?.with_membership(membership)?;

    let test_w = &test_w[..n_test];
    let mut predicted = Vec::with_capacity(n_test);
    let mut coverage = 0usize;
    for w in test_w {
        let x = encode_window(&w.inputs, &norm, &coder)?;
        predicted.push(norm.inverse(model.regress(&x)?));
        coverage += model.coverage_count(&x)?;
    }
    let truth: Vec<f64> = test_w.iter().map(|w| w.target).collect();
    let persistence: Vec<f64> = test_w.iter().map(|w| w.last()).collect();
    let nrmse_cc1 = nrmse(&predicted, &truth)?;
    let nrmse_persistence = nrmse(&persistence, &truth)?;

    let mut report = SweepReport::new("mg-predict", "k", &["persistence_nrmse"]);
    for (key, v) in [
        ("A", cfg.a),
        ("B", cfg.b),
        ("C", cfg.c),
        ("x0", cfg.x0),
        ("knn_fraction", knn_fraction),
    ] {
        report.push_metadata(key, v);
    }
    for (key, v) in [
        ("D", cfg.delay),
        ("burn_in", cfg.burn_in),
        ("stride", cfg.stride),
        ("n_train", n_train),
        ("n_test", n_test),
        ("levels", levels),
        ("knn_k", model.knn_k()),
    ] {
        report.push_metadata(key, v);
    }
    report.push_metadata("membership", format!("{membership:?}"));
    report.push_metadata("nrmse", nrmse_cc1);
    report.push_metadata("persistence_nrmse", nrmse_persistence);
    report.rows.push(SweepRow {
        parameter: k as f64,
        seed: 0,
        error: nrmse_cc1,
        coverage_mean: coverage as f64 / n_test as f64,
        extra: vec![nrmse_persistence],
    });

    Ok(MgPrediction {
        report,
        t: (0..n_test).map(|i| n_train + k + i).collect(),
        truth,
        predicted,
        persistence,
        nrmse: nrmse_cc1,
        persistence_nrmse: nrmse_persistence,
    })
}
