//! Acceptance checks, one line of output per criterion. Exits non-zero if
//! any criterion fails.

use std::fs;
use std::panic;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cornerclass::cc1::train_cc1;
use cornerclass::cc4::train_cc4;
use cornerclass::datasets::{SeriesConfig, ShapeScene};
use cornerclass::encoding::encode_class;
use cornerclass::experiments::{
    fraction_means, run_fraction_sweep, run_mg_prediction, run_radius_sweep, GridData, MgPredictParams, SplitSpec,
};
use cornerclass::rng::SplitMix64;
use clap::Parser;
use cornerclass::{BitVector, TrainingSample, UnaryCoder};
use cornerclass_cli::config::{Cli, RunConfig};
use cornerclass_cli::run::execute;

type Outcome = Result<String, String>;

const MG_NRMSE_K5: f64 = 0.23841465640373383;
const MG_NRMSE_K6: f64 = 0.16171260816479965;
const MG_PERSISTENCE_K5: f64 = 0.5966500652236898;
const MG_PERSISTENCE_K6: f64 = 0.5945344164478237;
const FIXTURE_TOL: f64 = 1e-9;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn random_bools(rng: &mut SplitMix64, len: usize) -> Vec<bool> {
    (0..len).map(|_| rng.next_u64() & 1 == 1).collect()
}

fn oracle_hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn radius_lemma() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xA11CE);
    let trials = 20_000;
    let mut disagreements = 0;
    let mut fired = 0;
    for _ in 0..trials {
        let n = 8 + rng.below(57) as usize;
        let stored = random_bools(&mut rng, n);
        // Flip a random number of bits so distances cover the whole range.
        let flips = rng.below(n as u64 + 1) as usize;
        let mut query = stored.clone();
        for _ in 0..flips {
            let j = rng.below(n as u64) as usize;
            query[j] = !query[j];
        }
        let r = rng.below(n as u64 + 1) as u32;
        let sample = TrainingSample::new(BitVector::from_bools(&stored), encode_class(1, 1).unwrap());
        let model = train_cc4(&[sample], r).map_err(|e| e.to_string())?;
        let active = model
            .hidden_activations(&BitVector::from_bools(&query))
            .map_err(|e| e.to_string())?
            .get(0);
        let expected = oracle_hamming(&stored, &query) <= r as usize;
        fired += expected as usize;
        if active != expected {
            disagreements += 1;
        }
    }
    ensure(disagreements == 0, || format!("{disagreements} disagreements in {trials} triples"))?;
    within(start.elapsed(), 5.0)?;
    Ok(format!(
        "{trials} triples, 0 disagreements ({fired} inside radius), {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn all_zero_bias() -> Outcome {
    let mut checked = 0;
    for n in [1usize, 8, 33, 64, 100] {
        for r in 0..=n as u32 {
            let sample = TrainingSample::new(BitVector::zeros(n), encode_class(0, 2).unwrap());
            let model = train_cc4(&[sample], r).map_err(|e| e.to_string())?;
            let bias = model.bias_weights()[0];
            ensure(bias == r as i32 + 1, || format!("R={n} r={r}: bias {bias}"))?;
            checked += 1;
        }
    }
    Ok(format!("bias = r + 1 for {checked} (R, r) pairs"))
}

fn radius_curve_shape() -> Outcome {
    let start = Instant::now();
    let data = GridData::from_scene(&ShapeScene::default_scene()).map_err(|e| e.to_string())?;
    let split = SplitSpec {
        train_fraction: 0.15,
        seed: 0,
    };
    let r_values: Vec<u32> = (0..=16).collect();
    let report = run_radius_sweep(&data, split, &r_values).map_err(|e| e.to_string())?;
    let err: Vec<f64> = report.rows.iter().map(|r| r.error).collect();
    let (e0, e16) = (err[0], err[16]);
    let (r_star, e_star) = err
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &e)| (i, e))
        .unwrap();
    ensure(e_star <= e0 - 0.05 && e_star <= e16 - 0.05, || {
        format!("error(0)={e0:.4} error(16)={e16:.4} min error({r_star})={e_star:.4}")
    })?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "error(0)={e0:.4}, error({r_star})={e_star:.4}, error(16)={e16:.4}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn fraction_curve_shape() -> Outcome {
    let start = Instant::now();
    let data = GridData::from_scene(&ShapeScene::default_scene()).map_err(|e| e.to_string())?;
    let fractions: Vec<f64> = (1..=10).map(|i| i as f64 * 0.05).collect();
    let seeds: Vec<u64> = (0..10).collect();
    let r_values: Vec<u32> = (0..=16).collect();
    let report = run_fraction_sweep(&data, &fractions, &seeds, &r_values, 0.05).map_err(|e| e.to_string())?;
    let means = fraction_means(&report);
    ensure(means.len() == fractions.len(), || format!("{} fraction means", means.len()))?;
    for w in means.windows(2) {
        let ((f0, c1a, c4a), (f1, c1b, c4b)) = (w[0], w[1]);
        ensure(c1b <= c1a + 0.01, || format!("CC1 mean rises {c1a:.4} -> {c1b:.4} at {f0} -> {f1}"))?;
        ensure(c4b <= c4a + 0.01, || format!("CC4 mean rises {c4a:.4} -> {c4b:.4} at {f0} -> {f1}"))?;
    }
    let gaps: Vec<f64> = means.iter().map(|&(_, c1, c4)| c4 - c1).collect();
    for (&(f, _, _), &g) in means.iter().zip(&gaps) {
        ensure(g >= -0.02, || format!("gap {g:.4} at fraction {f}"))?;
    }
    let (g5, g50) = (gaps[0], gaps[gaps.len() - 1]);
    ensure(g50 < g5, || format!("gap at 50% ({g50:.4}) not below gap at 5% ({g5:.4})"))?;
    Ok(format!(
        "CC1 {:.4}->{:.4}, CC4 {:.4}->{:.4}, gap {g5:.4}->{g50:.4} (min {:.4}), {:.2}s",
        means[0].1,
        means[9].1,
        means[0].2,
        means[9].2,
        gaps.iter().cloned().fold(f64::INFINITY, f64::min),
        start.elapsed().as_secs_f64()
    ))
}

fn full_recall() -> Outcome {
    let data = GridData::from_scene(&ShapeScene::default_scene()).map_err(|e| e.to_string())?;
    let model = train_cc1(&data.samples, 0.05).map_err(|e| e.to_string())?;
    let (error, _) = data
        .evaluate(|x| Ok((model.predict(x)?, model.coverage_count(x)?)))
        .map_err(|e| e.to_string())?;
    ensure(error == 0.0, || format!("CC1 error {error}"))?;
    Ok(format!("CC1 error 0 on {} cells", data.samples.len()))
}

fn eight_classes() -> Outcome {
    let data = GridData::from_scene(&ShapeScene::eight_class_scene()).map_err(|e| e.to_string())?;
    let labels = data.grid.distinct_labels();
    ensure(labels.len() == 8, || format!("{} distinct labels", labels.len()))?;
    ensure(data.output_bits == 3, || format!("{} output bits", data.output_bits))?;
    let cc1 = train_cc1(&data.samples, 0.05).map_err(|e| e.to_string())?;
    let cc4 = train_cc4(&data.samples, 0).map_err(|e| e.to_string())?;
    let mut wrong = (0, 0);
    for s in &data.samples {
        wrong.0 += (cc1.predict(&s.input).map_err(|e| e.to_string())? != *s.output.bits()) as usize;
        wrong.1 += (cc4.predict(&s.input).map_err(|e| e.to_string())? != *s.output.bits()) as usize;
    }
    ensure(wrong == (0, 0), || format!("misrecalled CC1 {} / CC4 {}", wrong.0, wrong.1))?;
    Ok(format!("8 classes on 3 outputs, {} cells recalled by CC1 and CC4", data.samples.len()))
}

fn mackey_glass() -> Outcome {
    let start = Instant::now();
    let series = SeriesConfig::default();
    ensure(
        (series.a, series.b, series.c, series.delay, series.burn_in, series.stride) == (0.2, 0.1, 10.0, 30, 3000, 6),
        || format!("series defaults {series:?}"),
    )?;
    let p5 = MgPredictParams::default();
    ensure(p5.n_train == 500 && p5.n_test == 500 && p5.k == 5, || format!("params {p5:?}"))?;
    let r5 = run_mg_prediction(&series, &p5).map_err(|e| e.to_string())?;
    let r6 = run_mg_prediction(&series, &MgPredictParams { k: 6, ..p5 }).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    for (k, r) in [(5, &r5), (6, &r6)] {
        if r.nrmse > 0.7 * r.persistence_nrmse {
            failures.push(format!(
                "(a) k={k}: nrmse {:.4} not 30% below persistence {:.4}",
                r.nrmse, r.persistence_nrmse
            ));
        }
    }
    let rel = (r5.nrmse - r6.nrmse).abs() / r5.nrmse.max(r6.nrmse);
    if rel > 0.25 {
        failures.push(format!(
            "(b) k=5 nrmse {:.4} vs k=6 {:.4}: relative difference {:.1}% exceeds 25%",
            r5.nrmse,
            r6.nrmse,
            rel * 100.0
        ));
    }
    for (name, got, want) in [
        ("k=5 nrmse", r5.nrmse, MG_NRMSE_K5),
        ("k=6 nrmse", r6.nrmse, MG_NRMSE_K6),
        ("k=5 persistence", r5.persistence_nrmse, MG_PERSISTENCE_K5),
        ("k=6 persistence", r6.persistence_nrmse, MG_PERSISTENCE_K6),
    ] {
        if (got - want).abs() > FIXTURE_TOL {
            failures.push(format!("fixture {name}: {got} != {want}"));
        }
    }
    if elapsed.as_secs_f64() >= 60.0 {
        failures.push(format!("took {:.2}s, limit 60s", elapsed.as_secs_f64()));
    }
    let detail = format!(
        "nrmse k=5 {:.4} k=6 {:.4}, persistence {:.4}/{:.4}, relative difference {:.1}%, {:.2}s",
        r5.nrmse,
        r6.nrmse,
        r5.persistence_nrmse,
        r6.persistence_nrmse,
        rel * 100.0,
        elapsed.as_secs_f64()
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failures.join("; ")))
    }
}

fn thermometer_metric() -> Outcome {
    let levels = 64;
    let coder = UnaryCoder::new(levels, 0.0, levels as f64).map_err(|e| e.to_string())?;
    let codes: Vec<BitVector> = (0..=levels)
        .map(|a| coder.encode(a as f64))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for (a, code) in codes.iter().enumerate() {
        let expected: Vec<bool> = (0..levels).map(|j| j < a).collect();
        ensure(code.to_bools() == expected, || format!("code for level {a} is {code}"))?;
    }
    for a in 0..=levels {
        for b in 0..=levels {
            let d = codes[a].hamming(&codes[b]);
            ensure(d == a.abs_diff(b), || format!("hamming({a},{b}) = {d}"))?;
        }
    }
    Ok(format!("{} level pairs, L = {levels}", (levels + 1) * (levels + 1)))
}

fn knn_oracle() -> Outcome {
    let mut rng = SplitMix64::new(0x5EED);
    let (n, len, k) = (80usize, 40usize, 3usize);
    let raw: Vec<(Vec<bool>, Vec<bool>)> = (0..n)
        .map(|_| (random_bools(&mut rng, len), random_bools(&mut rng, k)))
        .collect();
    let samples: Vec<TrainingSample> = raw
        .iter()
        .map(|(x, y)| {
            let label = y.iter().fold(0u64, |acc, &b| acc << 1 | b as u64);
            TrainingSample::new(BitVector::from_bools(x), encode_class(label, k).unwrap())
        })
        .collect();
    let model = train_cc1(&samples, 0.1).map_err(|e| e.to_string())?;
    let knn_k = model.knn_k();
    ensure(knn_k == 8, || format!("knn_k {knn_k}"))?;
    let radii = model.radii();
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 1000 {
        attempts += 1;
        ensure(attempts < 1_000_000, || format!("only {checked} uncovered queries found"))?;
        let q = random_bools(&mut rng, len);
        let dist: Vec<usize> = raw.iter().map(|(x, _)| oracle_hamming(x, &q)).collect();
        if dist.iter().zip(radii).any(|(&d, &r)| d <= r as usize) {
            continue;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (dist[i], i));
        let expected: Vec<bool> = (0..k)
            .map(|j| 2 * order[..knn_k].iter().filter(|&&i| raw[i].1[j]).count() > knn_k)
            .collect();
        let got = model.predict(&BitVector::from_bools(&q)).map_err(|e| e.to_string())?;
        ensure(got.to_bools() == expected, || format!("query {checked}: got {got}, oracle {expected:?}"))?;
        checked += 1;
    }
    Ok(format!("{checked} uncovered queries match brute-force {knn_k}-NN vote"))
}

/// Runs one CLI invocation in-process, with `--out` and `--model` resolved
/// against `dir`.
fn cli(args: &[&str], dir: &Path) -> Result<(), String> {
    let mut full = vec!["cornerclass".to_string()];
    let mut path_next = false;
    for a in args {
        full.push(if path_next { dir.join(a).to_string_lossy().into_owned() } else { a.to_string() });
        path_next = matches!(*a, "--out" | "--model");
    }
    let parsed = Cli::try_parse_from(&full).map_err(|e| e.to_string())?;
    let cfg = RunConfig::resolve(parsed.command, None).map_err(|e| e.to_string())?;
    execute(&cfg).map(drop).map_err(|e| format!("{args:?} failed: {e}"))
}

fn cli_determinism() -> Outcome {
    let runs: &[&[&str]] = &[
        &["scene-gen", "--out", "scene.csv", "--scene", "eight-class"],
        &["mg-gen", "--out", "mg.csv", "--n-samples", "300"],
        &["train", "--out", "cc4.json", "--seed", "5", "--radius", "2"],
        &["train", "--out", "cc1.json", "--seed", "5", "--network", "cc1"],
        &["predict", "--out", "pred.csv", "--model", "cc1.json"],
        &["radius-sweep", "--out", "radius.csv", "--seeds", "1,2", "--r-values", "0,2,4"],
        &[
            "fraction-sweep",
            "--out",
            "fraction.csv",
            "--fractions",
            "0.1,0.3",
            "--seeds",
            "3,4",
            "--r-values",
            "0,1,2,3",
        ],
        &["mg-predict", "--out", "trace.csv", "--n-test", "150", "--n-train", "200"],
    ];
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    for dir in [a.path(), b.path()] {
        for args in runs {
            cli(args, dir)?;
        }
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for name in &names {
        let x = fs::read(a.path().join(name)).map_err(|e| e.to_string())?;
        let y = fs::read(b.path().join(name)).map_err(|e| format!("{name:?}: {e}"))?;
        ensure(x == y, || format!("{name:?} differs between runs"))?;
    }
    ensure(names.len() == 11, || format!("expected 11 artifacts, found {names:?}"))?;
    Ok(format!("{} runs, {} artifacts byte-identical", runs.len(), names.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("radius lemma", radius_lemma),
        ("all-zero bias", all_zero_bias),
        ("error vs radius has an interior minimum", radius_curve_shape),
        ("CC1 vs best-radius CC4 across fractions", fraction_curve_shape),
        ("full-grid CC1 recall", full_recall),
        ("eight classes on three outputs", eight_classes),
        ("Mackey-Glass prediction", mackey_glass),
        ("thermometer metric", thermometer_metric),
        ("kNN oracle equivalence", knn_oracle),
        ("CLI determinism", cli_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
