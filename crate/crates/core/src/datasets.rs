//! Benchmark data: rasterized shape scenes for classification and the
//! Mackey-Glass delay recurrence for one-step-ahead prediction.

use std::collections::VecDeque;

use crate::cc4::TrainingSample;
use crate::encoding::{encode_class, UnaryCoder};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Cells with `(x - cx)^2 + (y - cy)^2 <= radius^2`.
    Disk { cx: i64, cy: i64, radius: i64 },
    /// Inclusive bounds.
    Rect { x0: usize, y0: usize, x1: usize, y1: usize },
}

impl Shape {
    fn contains(&self, x: usize, y: usize) -> bool {
        match *self {
            Shape::Disk { cx, cy, radius } => {
                let (dx, dy) = (x as i64 - cx, y as i64 - cy);
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Rect { x0, y0, x1, y1 } => (x0..=x1).contains(&x) && (y0..=y1).contains(&y),
        }
    }

    fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        let ok = match *self {
            Shape::Disk { cx, cy, radius } => {
                radius >= 0
                    && cx - radius >= 0
                    && cy - radius >= 0
                    && cx + radius < width as i64
                    && cy + radius < height as i64
            }
            Shape::Rect { x0, y0, x1, y1 } => x0 <= x1 && y0 <= y1 && x1 < width && y1 < height,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "{self:?} does not fit in a {width}x{height} grid"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeScene {
    pub width: usize,
    pub height: usize,
    /// Later shapes paint over earlier ones.
    pub shapes: Vec<(Shape, u64)>,
    pub background_label: u64,
}

impl ShapeScene {
    /// 32x32 grid with a disk and a rectangle of class 1 on background 0.
    pub fn default_scene() -> Self {
        Self {
            width: 32,
            height: 32,
            shapes: vec![
                (Shape::Disk { cx: 10, cy: 11, radius: 7 }, 1),
                (Shape::Rect { x0: 19, y0: 15, x1: 28, y1: 27 }, 1),
            ],
            background_label: 0,
        }
    }

    /// 32x32 grid with seven shapes labelled 1..=7 on background 0.
    pub fn eight_class_scene() -> Self {
        Self {
            width: 32,
            height: 32,
            shapes: vec![
                (Shape::Disk { cx: 7, cy: 7, radius: 5 }, 1),
                (Shape::Rect { x0: 15, y0: 2, x1: 29, y1: 9 }, 2),
                (Shape::Disk { cx: 24, cy: 20, radius: 6 }, 3),
                (Shape::Rect { x0: 2, y0: 15, x1: 10, y1: 29 }, 4),
                (Shape::Disk { cx: 16, cy: 23, radius: 4 }, 5),
                (Shape::Rect { x0: 12, y0: 12, x1: 17, y1: 16 }, 6),
                (Shape::Disk { cx: 27, cy: 28, radius: 3 }, 7),
            ],
            background_label: 0,
        }
    }
}

/// Row-major label raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    pub width: usize,
    pub height: usize,
    labels: Vec<u64>,
}

impl LabelGrid {
    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.labels[y * self.width + x]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn distinct_labels(&self) -> Vec<u64> {
        let mut l = self.labels.clone();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// `(x, y, label)` for every cell in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .map(move |(i, &l)| (i % self.width, i / self.width, l))
    }

    /// CSV with header `x,y,label`, row-major.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["x", "y", "label"]).expect("in-memory write");
        for (x, y, l) in self.cells() {
            w.serialize((x, y, l)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }
}

pub fn render_scene(scene: &ShapeScene) -> Result<LabelGrid> {
    if scene.width == 0 || scene.height == 0 {
        return Err(Error::Argument("scene dimensions must be positive".into()));
    }
    for (shape, _) in &scene.shapes {
        shape.check_bounds(scene.width, scene.height)?;
    }
    let mut labels = vec![scene.background_label; scene.width * scene.height];
    for y in 0..scene.height {
        for x in 0..scene.width {
            for (shape, label) in &scene.shapes {
                if shape.contains(x, y) {
                    labels[y * scene.width + x] = *label;
                }
            }
        }
    }
    Ok(LabelGrid {
        width: scene.width,
        height: scene.height,
        labels,
    })
}

/// Coordinate coder mapping integer coordinate `c` in `0..n` to level `c`.
pub fn coordinate_coder(n: usize) -> Result<UnaryCoder> {
    UnaryCoder::new(n, 0.0, n as f64)
}

/// One sample per cell in row-major order: input is `unary(x) ++ unary(y)`,
/// output the `k`-bit code of the cell's label.
pub fn scene_to_samples(
    grid: &LabelGrid,
    coder_x: &UnaryCoder,
    coder_y: &UnaryCoder,
    k: usize,
) -> Result<Vec<TrainingSample>> {
    let distinct = grid.distinct_labels();
    if k < 64 && distinct.len() > (1usize << k) {
        return Err(Error::Capacity {
            labels: distinct.len(),
            bits: k,
        });
    }
    if coder_x.levels() < grid.width || coder_y.levels() < grid.height {
        return Err(Error::Argument(format!(
            "coder levels {}x{} cannot separate a {}x{} grid",
            coder_x.levels(),
            coder_y.levels(),
            grid.width,
            grid.height
        )));
    }
    grid.cells()
        .map(|(x, y, label)| {
            let input = coder_x.encode(x as f64)?.concat(&coder_y.encode(y as f64)?);
            Ok(TrainingSample::new(input, encode_class(label, k)?))
        })
        .collect()
}

/// Mackey-Glass recurrence constants and sampling schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub delay: usize,
    pub x0: f64,
    pub burn_in: usize,
    pub stride: usize,
    pub n_samples: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            a: 0.2,
            b: 0.1,
            c: 10.0,
            delay: 30,
            x0: 0.9,
            burn_in: 3000,
            stride: 6,
            n_samples: 1000,
        }
    }
}

impl SeriesConfig {
    fn validate(&self) -> Result<()> {
        if self.delay == 0 {
            return Err(Error::Argument("delay must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::Argument("stride must be at least 1".into()));
        }
        for (name, v) in [("A", self.a), ("B", self.b), ("C", self.c), ("x0", self.x0)] {
            if !v.is_finite() {
                return Err(Error::Argument(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Resumable iterator over the discrete Mackey-Glass map
/// `x(t+1) = (1 - B) x(t) + A x(t-D) / (1 + x(t-D)^C)`,
/// with `x(t) = x0` for `t <= 0`.
#[derive(Debug, Clone)]
pub struct MackeyGlass {
    config: SeriesConfig,
    /// `x(t-D) ..= x(t)`.
    history: VecDeque<f64>,
    step: usize,
    burned_in: bool,
}

impl MackeyGlass {
    pub fn new(config: SeriesConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            history: std::iter::repeat_n(config.x0, config.delay + 1).collect(),
            config,
            step: 0,
            burned_in: false,
        })
    }

    /// Advances one raw step and returns `x(t+1)`.
    pub fn next_raw(&mut self) -> Result<f64> {
        let SeriesConfig { a, b, c, .. } = self.config;
        let current = *self.history.back().expect("history is never empty");
        let delayed = self.history.pop_front().expect("history is never empty");
        let next = (1.0 - b) * current + a * delayed / (1.0 + delayed.powf(c));
        self.step += 1;
        if !next.is_finite() {
            return Err(Error::Numeric { step: self.step });
        }
        self.history.push_back(next);
        Ok(next)
    }

    /// Next `n` retained points: the first call discards `burn_in` raw
    /// points, and every retained point is followed by `stride - 1` skipped
    /// ones.
    pub fn take_samples(&mut self, n: usize) -> Result<Vec<f64>> {
        if !self.burned_in {
            for _ in 0..self.config.burn_in {
                self.next_raw()?;
            }
            self.burned_in = true;
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let v = self.next_raw()?;
            for _ in 1..self.config.stride {
                self.next_raw()?;
            }
            out.push(v);
        }
        Ok(out)
    }

    pub fn raw_steps(&self) -> usize {
        self.step
    }
}

pub fn generate_mg(config: &SeriesConfig) -> Result<Vec<f64>> {
    MackeyGlass::new(*config)?.take_samples(config.n_samples)
}

/// CSV with header `t,value`.
pub fn series_to_csv(series: &[f64]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["t", "value"]).expect("in-memory write");
    for (t, v) in series.iter().enumerate() {
        w.serialize((t, v)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub inputs: Vec<f64>,
    pub target: f64,
}

impl Window {
    pub fn k(&self) -> usize {
        self.inputs.len()
    }

    /// Most recent input value (the persistence forecast).
    pub fn last(&self) -> f64 {
        *self.inputs.last().expect("windows are non-empty")
    }
}

/// `series[t-k+1..=t] -> series[t+1]` for every valid `t`.
pub fn make_windows(series: &[f64], k: usize) -> Result<Vec<Window>> {
    if k == 0 {
        return Err(Error::Argument("window size must be positive".into()));
    }
    if series.len() <= k {
        return Err(Error::Argument(format!(
            "series of length {} is too short for window size {k}",
            series.len()
        )));
    }
    Ok(series
        .windows(k + 1)
        .map(|w| Window {
            inputs: w[..k].to_vec(),
            target: w[k],
        })
        .collect())
}

/// Affine map between a series range and `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax {
    pub lo: f64,
    pub hi: f64,
}

impl MinMax {
    pub fn fit(series: &[f64]) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::Argument("cannot normalize an empty series".into()));
        }
        let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(Error::Degenerate(format!("series is constant at {lo}")));
        }
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn forward(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    #[inline]
    pub fn inverse(&self, v: f64) -> f64 {
        self.lo + v * (self.hi - self.lo)
    }
}

pub fn normalize_minmax(series: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    let mm = MinMax::fit(series)?;
    Ok((series.iter().map(|&v| mm.forward(v)).collect(), mm.lo, mm.hi))
}
