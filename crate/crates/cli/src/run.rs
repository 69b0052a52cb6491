//! Executes a resolved [`RunConfig`] and writes its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use cornerclass::cc1::train_cc1;
use cornerclass::cc4::train_cc4;
use cornerclass::datasets::{coordinate_coder, generate_mg, render_scene, series_to_csv};
use cornerclass::encoding::{decode_class, ClassCode};
use cornerclass::experiments::{
    aggregate_by_parameter, fraction_means, run_fraction_sweep, run_mg_prediction, run_radius_sweep_seeds,
    seeded_split, GridData, SplitSpec, SweepReport,
};
use cornerclass::{BitVector, TrainingSample, UnaryCoder};

use crate::config::{Experiment, NetworkChoice, RunConfig, TrainSpec};
use crate::model_file::{load_model, save_model, CoderParams, GridInfo, Network, SavedModel};
use crate::CliError;

/// Runs the experiment and returns a one-line summary.
pub fn execute(cfg: &RunConfig) -> Result<String, CliError> {
    let out = &cfg.out;
    match &cfg.experiment {
        Experiment::SceneGen { scene } => {
            let grid = render_scene(&scene.scene())?;
            write(out, &grid.to_csv())?;
            Ok(format!(
                "scene-gen: {}x{} grid, {} labels -> {}",
                grid.width,
                grid.height,
                grid.distinct_labels().len(),
                out.display()
            ))
        }
        Experiment::MgGen { series } => {
            let values = generate_mg(series)?;
            write(out, &series_to_csv(&values))?;
            Ok(format!("mg-gen: {} samples -> {}", values.len(), out.display()))
        }
        Experiment::Train(spec) => train(spec, cfg.seed, out),
        Experiment::Predict { model, data } => predict(model, data.as_deref(), out),
        Experiment::RadiusSweep {
            scene,
            fraction,
            seeds,
            r_values,
        } => {
            let data = GridData::from_scene(&scene.scene())?;
            let mut report = run_radius_sweep_seeds(&data, *fraction, seeds, r_values)?;
            echo_config(&mut report, cfg);
            let stats = aggregate_by_parameter(&report, |r| r.error);
            let plot = plot_csv(["r", "error_mean", "error_std"], stats.iter().map(|&(p, m, s)| [p, m, s]));
            write(out, &report.to_csv())?;
            let plot_path = sibling(out, "plot");
            write(&plot_path, &plot)?;
            let (best_r, best_err, _) = stats
                .iter()
                .copied()
                .fold((f64::NAN, f64::INFINITY, 0.0), |b, s| if s.1 < b.1 { s } else { b });
            Ok(format!(
                "radius-sweep: {} rows, best mean error {best_err:.4} at r={best_r} -> {}, {}",
                report.rows.len(),
                out.display(),
                plot_path.display()
            ))
        }
        Experiment::FractionSweep {
            scene,
            fractions,
            seeds,
            r_values,
            knn_fraction,
        } => {
            let data = GridData::from_scene(&scene.scene())?;
            let mut report = run_fraction_sweep(&data, fractions, seeds, r_values, *knn_fraction)?;
            echo_config(&mut report, cfg);
            let means = fraction_means(&report);
            let plot = plot_csv(
                ["fraction", "cc1_error", "cc4_best_error"],
                means.iter().map(|&(f, a, b)| [f, a, b]),
            );
            write(out, &report.to_csv())?;
            let plot_path = sibling(out, "plot");
            write(&plot_path, &plot)?;
            Ok(format!(
                "fraction-sweep: {} rows over {} fractions x {} seeds -> {}, {}",
                report.rows.len(),
                fractions.len(),
                seeds.len(),
                out.display(),
                plot_path.display()
            ))
        }
        Experiment::MgPredict { series, params } => {
            let mut pred = run_mg_prediction(series, params)?;
            echo_config(&mut pred.report, cfg);
            write(out, &pred.trace_csv())?;
            let report_path = sibling(out, "report");
            write(&report_path, &pred.report.to_csv())?;
            Ok(format!(
                "mg-predict: k={} nrmse {:.6} (persistence {:.6}) -> {}, {}",
                params.k,
                pred.nrmse,
                pred.persistence_nrmse,
                out.display(),
                report_path.display()
            ))
        }
    }
}

fn echo_config(report: &mut SweepReport, cfg: &RunConfig) {
    report.push_metadata("seed", cfg.seed);
    report.push_metadata("config", format!("{:?}", cfg.experiment));
}

/// `dir/name.csv` -> `dir/name.<tag>.csv`.
pub fn sibling(out: &Path, tag: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{tag}.csv"))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn plot_csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [f64; N]>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Reads the named bit-string columns of a CSV file. Lines starting with
/// `#` are skipped.
fn read_bit_columns(path: &Path, columns: &[&str]) -> Result<Vec<Vec<BitVector>>, CliError> {
    let fail = |why: String| CliError::Runtime(format!("{}: {why}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;
    let headers = reader.headers().map_err(|e| fail(e.to_string()))?.clone();
    let idx = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| fail(format!("missing column `{c}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        let row = idx
            .iter()
            .map(|&i| {
                record
                    .get(i)
                    .unwrap_or("")
                    .parse::<BitVector>()
                    .map_err(|e| fail(format!("record {}: {e}", line + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(fail("no records".into()));
    }
    Ok(rows)
}

fn train(spec: &TrainSpec, seed: u64, out: &Path) -> Result<String, CliError> {
    let (samples, coders, grid, source) = match &spec.data {
        Some(path) => {
            let rows = read_bit_columns(path, &["input", "output"])?;
            let samples: Vec<TrainingSample> = rows
                .into_iter()
                .map(|mut r| {
                    let output = r.pop().expect("two columns");
                    let input = r.pop().expect("two columns");
                    TrainingSample::new(input, ClassCode::from_bits(output))
                })
                .collect();
            (samples, vec![], None, path.display().to_string())
        }
        None => {
            let data = GridData::from_scene(&spec.scene.scene())?;
            let split = SplitSpec {
                train_fraction: spec.fraction,
                seed,
            };
            let samples = data.subset(&seeded_split(data.samples.len(), split)?);
            let coders = vec![
                CoderParams::from(&coordinate_coder(data.grid.width)?),
                CoderParams::from(&coordinate_coder(data.grid.height)?),
            ];
            let grid = GridInfo {
                width: data.grid.width,
                height: data.grid.height,
            };
            (samples, coders, Some(grid), format!("{:?} scene, seed {seed}", spec.scene))
        }
    };
    let network = match spec.network {
        NetworkChoice::Cc4 => Network::Cc4(train_cc4(&samples, spec.radius)?),
        NetworkChoice::Cc1 => Network::Cc1(train_cc1(&samples, spec.knn_fraction)?.with_membership(spec.membership)?),
    };
    let mut recalled = 0usize;
    for s in &samples {
        if network.predict(&s.input)? == *s.output.bits() {
            recalled += 1;
        }
    }
    let model = SavedModel { network, coders, grid };
    save_model(&model, out)?;
    Ok(format!(
        "train: {:?} on {} samples ({source}), training recall {}/{} -> {}",
        spec.network,
        samples.len(),
        recalled,
        samples.len(),
        out.display()
    ))
}

fn predict(model_path: &Path, data: Option<&Path>, out: &Path) -> Result<String, CliError> {
    let model = load_model(model_path)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let count;
    match (data, model.grid) {
        (Some(path), _) => {
            let rows = read_bit_columns(path, &["input"])?;
            w.write_record(["input", "output", "label"]).expect("in-memory write");
            for row in &rows {
                let y = model.network.predict(&row[0])?;
                w.write_record([row[0].to_string(), y.to_string(), decode_class(&y).to_string()])
                    .expect("in-memory write");
            }
            count = rows.len();
        }
        (None, Some(grid)) => {
            let [cx, cy] = match model.coders.as_slice() {
                [a, b] => [a, b].map(|c| UnaryCoder::new(c.levels, c.lo, c.hi)),
                _ => {
                    return Err(CliError::Runtime(format!(
                        "{}: grid models need exactly two coders",
                        model_path.display()
                    )))
                }
            };
            let (cx, cy) = (cx?, cy?);
            w.write_record(["x", "y", "label"]).expect("in-memory write");
            for y in 0..grid.height {
                for x in 0..grid.width {
                    let input = cx.encode(x as f64)?.concat(&cy.encode(y as f64)?);
                    let label = decode_class(&model.network.predict(&input)?);
                    w.write_record([x.to_string(), y.to_string(), label.to_string()])
                        .expect("in-memory write");
                }
            }
            count = grid.width * grid.height;
        }
        (None, None) => {
            return Err(CliError::Config(
                "missing required field `data` (flag --data or config key `data`); the model has no grid".into(),
            ))
        }
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv");
    write(out, &text)?;
    Ok(format!("predict: {count} predictions -> {}", out.display()))
}
