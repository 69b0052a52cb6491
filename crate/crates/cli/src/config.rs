//! Command-line flags, the optional TOML config file, and their merge into
//! a fully resolved [`RunConfig`].
//!
//! Precedence for every field: flag, then config file, then default. The
//! seed additionally falls back to `CORNERCLASS_SEED` before its default.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cornerclass::cc1::DEFAULT_KNN_FRACTION;
use cornerclass::datasets::{SeriesConfig, ShapeScene};
use cornerclass::experiments::MgPredictParams;
use cornerclass::Membership;
use serde::Deserialize;

use crate::CliError;

pub const SEED_ENV: &str = "CORNERCLASS_SEED";
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.15;
pub const DEFAULT_RADIUS: u32 = 3;
pub const DEFAULT_FRACTION_SEEDS: u64 = 10;

#[derive(Debug, Parser)]
#[command(name = "cornerclass", version, about = "Corner-classification network experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a shape scene as `x,y,label` CSV.
    SceneGen {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scene: SceneArgs,
    },
    /// Generate a Mackey-Glass series as `t,value` CSV.
    MgGen {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Train a CC4 or CC1 network and save it as JSON.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        net: NetworkArgs,
        /// Training fraction of the scene's cells.
        #[arg(long)]
        fraction: Option<f64>,
        /// CSV with `input,output` bit-string columns (overrides the scene).
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run a saved model on queries or on its training grid.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: Option<PathBuf>,
        /// CSV with an `input` bit-string column.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// CC4 error against radius of generalization.
    RadiusSweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        r_values: Option<Vec<u32>>,
    },
    /// CC1 against best-radius CC4 across training fractions.
    FractionSweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        r_values: Option<Vec<u32>>,
        #[arg(long)]
        knn_fraction: Option<f64>,
    },
    /// One-step-ahead Mackey-Glass prediction with CC1.
    MgPredict {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        series: SeriesArgs,
        #[command(flatten)]
        mg: MgArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML file with defaults for any flag (underscored key names).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneChoice {
    Default,
    EightClass,
}

impl SceneChoice {
    pub fn scene(self) -> ShapeScene {
        match self {
            SceneChoice::Default => ShapeScene::default_scene(),
            SceneChoice::EightClass => ShapeScene::eight_class_scene(),
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct SceneArgs {
    #[arg(long, value_enum)]
    pub scene: Option<SceneChoice>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkChoice {
    Cc4,
    Cc1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipChoice {
    InverseDistance,
    Gaussian,
}

#[derive(Debug, Args, Default)]
pub struct NetworkArgs {
    #[arg(long, value_enum)]
    pub network: Option<NetworkChoice>,
    /// CC4 radius of generalization.
    #[arg(long)]
    pub radius: Option<u32>,
    #[arg(long)]
    pub knn_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub membership: Option<MembershipChoice>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct SeriesArgs {
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Delay D of the recurrence.
    #[arg(long)]
    pub delay: Option<usize>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct MgArgs {
    /// Window size.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Unary levels per window value.
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub knn_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub membership: Option<MembershipChoice>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

/// Contents of `--config`. Every key is optional; unknown keys are errors.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub scene: Option<SceneChoice>,
    pub fraction: Option<f64>,
    pub fractions: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub r_values: Option<Vec<u32>>,
    pub network: Option<NetworkChoice>,
    pub radius: Option<u32>,
    pub knn_fraction: Option<f64>,
    pub membership: Option<MembershipChoice>,
    pub sigma: Option<f64>,
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub delay: Option<usize>,
    pub x0: Option<f64>,
    pub burn_in: Option<usize>,
    pub stride: Option<usize>,
    pub n_samples: Option<usize>,
    pub k: Option<usize>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub levels: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config: cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config: {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSpec {
    pub network: NetworkChoice,
    pub radius: u32,
    pub knn_fraction: f64,
    pub membership: Membership,
    pub scene: SceneChoice,
    pub fraction: f64,
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    SceneGen {
        scene: SceneChoice,
    },
    MgGen {
        series: SeriesConfig,
    },
    Train(TrainSpec),
    Predict {
        model: PathBuf,
        data: Option<PathBuf>,
    },
    RadiusSweep {
        scene: SceneChoice,
        fraction: f64,
        seeds: Vec<u64>,
        r_values: Vec<u32>,
    },
    FractionSweep {
        scene: SceneChoice,
        fractions: Vec<f64>,
        seeds: Vec<u64>,
        r_values: Vec<u32>,
        knn_fraction: f64,
    },
    MgPredict {
        series: SeriesConfig,
        params: MgPredictParams,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::SceneGen { .. } => "scene-gen",
            Experiment::MgGen { .. } => "mg-gen",
            Experiment::Train(_) => "train",
            Experiment::Predict { .. } => "predict",
            Experiment::RadiusSweep { .. } => "radius-sweep",
            Experiment::FractionSweep { .. } => "fraction-sweep",
            Experiment::MgPredict { .. } => "mg-predict",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub out: PathBuf,
}

fn invalid(field: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid `{field}`: {why}"))
}

fn check_fraction(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("{v} is not in (0, 1]")))
    }
}

fn check_positive(field: &str, v: usize) -> Result<usize, CliError> {
    if v > 0 {
        Ok(v)
    } else {
        Err(invalid(field, "must be positive"))
    }
}

fn required<T>(field: &str, v: Option<T>) -> Result<T, CliError> {
    v.ok_or_else(|| {
        CliError::Config(format!(
            "missing required field `{field}` (flag --{} or config key `{field}`)",
            field.replace('_', "-")
        ))
    })
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>, env: Option<&str>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid(SEED_ENV, format!("{v:?} is not an unsigned 64-bit integer"))),
        None => Ok(DEFAULT_SEED),
    }
}

fn resolve_series(args: &SeriesArgs, file: &FileConfig) -> Result<SeriesConfig, CliError> {
    let d = SeriesConfig::default();
    let series = SeriesConfig {
        a: args.a.or(file.a).unwrap_or(d.a),
        b: args.b.or(file.b).unwrap_or(d.b),
        c: args.c.or(file.c).unwrap_or(d.c),
        delay: check_positive("delay", args.delay.or(file.delay).unwrap_or(d.delay))?,
        x0: args.x0.or(file.x0).unwrap_or(d.x0),
        burn_in: args.burn_in.or(file.burn_in).unwrap_or(d.burn_in),
        stride: check_positive("stride", args.stride.or(file.stride).unwrap_or(d.stride))?,
        n_samples: file.n_samples.unwrap_or(d.n_samples),
    };
    for (field, v) in [("a", series.a), ("b", series.b), ("c", series.c), ("x0", series.x0)] {
        if !v.is_finite() {
            return Err(invalid(field, "must be finite"));
        }
    }
    Ok(series)
}

fn resolve_membership(
    choice: Option<MembershipChoice>,
    sigma: Option<f64>,
    input_len: usize,
) -> Result<Membership, CliError> {
    match choice.unwrap_or(MembershipChoice::InverseDistance) {
        MembershipChoice::InverseDistance => Ok(Membership::InverseDistance),
        MembershipChoice::Gaussian => match sigma {
            Some(s) if s > 0.0 && s.is_finite() => Ok(Membership::Gaussian { sigma: s }),
            Some(s) => Err(invalid("sigma", format!("{s} is not positive"))),
            None => Ok(Membership::default_gaussian(input_len)),
        },
    }
}

fn default_r_values() -> Vec<u32> {
    (0..=16).collect()
}

fn default_fractions() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.05).collect()
}

fn check_list<T>(field: &str, v: Vec<T>) -> Result<Vec<T>, CliError> {
    if v.is_empty() {
        Err(invalid(field, "list is empty"))
    } else {
        Ok(v)
    }
}

impl RunConfig {
    /// Resolves parsed flags against an optional config file and the
    /// environment's seed fallback.
    pub fn resolve(command: Command, env_seed: Option<&str>) -> Result<Self, CliError> {
        let common = match &command {
            Command::SceneGen { common, .. }
            | Command::MgGen { common, .. }
            | Command::Train { common, .. }
            | Command::Predict { common, .. }
            | Command::RadiusSweep { common, .. }
            | Command::FractionSweep { common, .. }
            | Command::MgPredict { common, .. } => common,
        };
        let file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let seed = resolve_seed(common.seed, file.seed, env_seed)?;
        let format = common.format.clone().or(file.format.clone()).unwrap_or_else(|| "csv".into());
        if format != "csv" {
            return Err(invalid("format", format!("{format:?} is not supported (only csv)")));
        }
        let out = required("out", common.out.clone().or(file.out.clone()))?;
        let scene_of = |s: &SceneArgs| s.scene.or(file.scene).unwrap_or(SceneChoice::Default);

        let experiment = match command {
            Command::SceneGen { scene, .. } => Experiment::SceneGen {
                scene: scene_of(&scene),
            },
            Command::MgGen {
                series, n_samples, ..
            } => {
                let mut series = resolve_series(&series, &file)?;
                series.n_samples =
                    check_positive("n_samples", n_samples.or(file.n_samples).unwrap_or(series.n_samples))?;
                Experiment::MgGen { series }
            }
            Command::Train {
                scene,
                net,
                fraction,
                data,
                ..
            } => {
                let scene = scene_of(&scene);
                Experiment::Train(TrainSpec {
                    network: net.network.or(file.network).unwrap_or(NetworkChoice::Cc4),
                    radius: net.radius.or(file.radius).unwrap_or(DEFAULT_RADIUS),
                    knn_fraction: check_fraction(
                        "knn_fraction",
                        net.knn_fraction.or(file.knn_fraction).unwrap_or(DEFAULT_KNN_FRACTION),
                    )?,
                    // Scene inputs are two 32-level coordinates.
                    membership: resolve_membership(
                        net.membership.or(file.membership),
                        net.sigma.or(file.sigma),
                        64,
                    )?,
                    scene,
                    fraction: check_fraction(
                        "fraction",
                        fraction.or(file.fraction).unwrap_or(DEFAULT_TRAIN_FRACTION),
                    )?,
                    data: data.or(file.data.clone()),
                })
            }
            Command::Predict { model, data, .. } => Experiment::Predict {
                model: required("model", model.or(file.model.clone()))?,
                data: data.or(file.data.clone()),
            },
            Command::RadiusSweep {
                scene,
                fraction,
                seeds,
                r_values,
                ..
            } => Experiment::RadiusSweep {
                scene: scene_of(&scene),
                fraction: check_fraction(
                    "fraction",
                    fraction.or(file.fraction).unwrap_or(DEFAULT_TRAIN_FRACTION),
                )?,
                seeds: check_list("seeds", seeds.or(file.seeds.clone()).unwrap_or_else(|| vec![seed]))?,
                r_values: check_list("r_values", r_values.or(file.r_values.clone()).unwrap_or_else(default_r_values))?,
            },
            Command::FractionSweep {
                scene,
                fractions,
                seeds,
                r_values,
                knn_fraction,
                ..
            } => {
                let fractions = check_list(
                    "fractions",
                    fractions.or(file.fractions.clone()).unwrap_or_else(default_fractions),
                )?;
                for &f in &fractions {
                    check_fraction("fractions", f)?;
                }
                Experiment::FractionSweep {
                    scene: scene_of(&scene),
                    fractions,
                    seeds: check_list(
                        "seeds",
                        seeds
                            .or(file.seeds.clone())
                            .unwrap_or_else(|| (seed..seed.saturating_add(DEFAULT_FRACTION_SEEDS)).collect()),
                    )?,
                    r_values: check_list(
                        "r_values",
                        r_values.or(file.r_values.clone()).unwrap_or_else(default_r_values),
                    )?,
                    knn_fraction: check_fraction(
                        "knn_fraction",
                        knn_fraction.or(file.knn_fraction).unwrap_or(DEFAULT_KNN_FRACTION),
                    )?,
                }
            }
            Command::MgPredict { series, mg, .. } => {
                let d = MgPredictParams::default();
                let k = check_positive("k", mg.k.or(file.k).unwrap_or(d.k))?;
                let levels = check_positive("levels", mg.levels.or(file.levels).unwrap_or(d.levels))?;
                let n_test = mg.n_test.or(file.n_test).unwrap_or(d.n_test);
                if n_test < 100 {
                    return Err(invalid("n_test", format!("{n_test} is below the minimum of 100")));
                }
                Experiment::MgPredict {
                    series: resolve_series(&series, &file)?,
                    params: MgPredictParams {
                        k,
                        n_train: check_positive("n_train", mg.n_train.or(file.n_train).unwrap_or(d.n_train))?,
                        n_test,
                        levels,
                        knn_fraction: check_fraction(
                            "knn_fraction",
                            mg.knn_fraction.or(file.knn_fraction).unwrap_or(d.knn_fraction),
                        )?,
                        membership: resolve_membership(
                            mg.membership.or(file.membership),
                            mg.sigma.or(file.sigma),
                            k * levels,
                        )?,
                    },
                }
            }
        };
        Ok(RunConfig {
            experiment,
            seed,
            out,
        })
    }
}
