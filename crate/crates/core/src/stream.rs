//! Frame sources: the synthetic sinusoid, a delimited-text dataset reader
//! (with a preset for the UCI SML2010 files) and frame-loss injection.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pipeline::{TimedSample, DEFAULT_QUARTER_SECS};

/// Synthetic sinusoidal temperature with noise and random inter-arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct SinusConfig {
    pub n_frames: usize,
    pub value_min: f64,
    pub value_max: f64,
    /// Noise is uniform in `[-noise_half_width, noise_half_width]`.
    pub noise_half_width: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub period_hours: f64,
    pub seed: u64,
}

impl Default for SinusConfig {
    fn default() -> Self {
        Self {
            n_frames: 1_000_000,
            value_min: 10.0,
            value_max: 30.0,
            noise_half_width: 1.5,
            dt_min: 20.0,
            dt_max: 40.0,
            period_hours: 24.0,
            seed: 1,
        }
    }
}

impl SinusConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.value_min < self.value_max) {
            return bad(format!(
                "value range [{}, {}] is empty",
                self.value_min, self.value_max
            ));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max && self.dt_max.is_finite()) {
            return bad(format!(
                "inter-arrival range [{}, {}] must be positive and ordered",
                self.dt_min, self.dt_max
            ));
        }
        if !(self.noise_half_width >= 0.0 && self.noise_half_width.is_finite()) {
            return bad(format!("noise half width {} must be >= 0", self.noise_half_width));
        }
        if !(self.period_hours > 0.0 && self.period_hours.is_finite()) {
            return bad(format!("period {} h must be > 0", self.period_hours));
        }
        Ok(())
    }

    pub fn midline(&self) -> f64 {
        0.5 * (self.value_min + self.value_max)
    }

    pub fn amplitude(&self) -> f64 {
        0.5 * (self.value_max - self.value_min)
    }

    /// Noise-free signal at time `t` (s).
    pub fn signal(&self, t: f64) -> f64 {
        self.midline() + self.amplitude() * (2.0 * PI * t / (self.period_hours * 3600.0)).sin()
    }
}

/// Iterator over the frames of a [`SinusConfig`]; the first frame is at `t = 0`.
#[derive(Debug, Clone)]
pub struct SinusStream {
    cfg: SinusConfig,
    rng: ChaCha8Rng,
    emitted: usize,
    t: f64,
}

pub fn gen_sinus(cfg: SinusConfig) -> Result<SinusStream> {
    cfg.validate()?;
    Ok(SinusStream {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg,
        emitted: 0,
        t: 0.0,
    })
}

impl Iterator for SinusStream {
    type Item = TimedSample;

    fn next(&mut self) -> Option<TimedSample> {
        if self.emitted == self.cfg.n_frames {
            return None;
        }
        if self.emitted > 0 {
            self.t += if self.cfg.dt_min == self.cfg.dt_max {
                self.cfg.dt_min
            } else {
                self.rng.gen_range(self.cfg.dt_min..=self.cfg.dt_max)
            };
        }
        let h = self.cfg.noise_half_width;
        let noise = if h > 0.0 { self.rng.gen_range(-h..=h) } else { 0.0 };
        self.emitted += 1;
        Some(TimedSample::new(self.t, self.cfg.signal(self.t) + noise))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.cfg.n_frames - self.emitted;
        (left, Some(left))
    }
}

/// Frame tagged with the id of the sensor node that sent it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeFrame {
    pub node: u16,
    pub sample: TimedSample,
}

/// Spreads a stream over `nodes` sensor nodes in round-robin order. The
/// merged stream (ignoring ids) is the input stream itself.
pub fn interleave_nodes<I>(frames: I, nodes: u16) -> impl Iterator<Item = NodeFrame>
where
    I: IntoIterator<Item = TimedSample>,
{
    let nodes = nodes.max(1);
    frames.into_iter().enumerate().map(move |(i, sample)| NodeFrame {
        node: (i % usize::from(nodes)) as u16,
        sample,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Delimiter {
    /// Any run of spaces or tabs.
    Whitespace,
    Char(char),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeColumns {
    /// Row `i` is at `i * step`.
    Implicit,
    /// Separate date and time columns parsed with `chrono` format strings.
    DateTime {
        date_col: usize,
        time_col: usize,
        date_format: String,
        time_format: String,
    },
}

/// How to read one value series out of a delimited text file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub delimiter: Delimiter,
    pub time: TimeColumns,
    /// Zero-based column holding the value.
    pub value_col: usize,
    pub step_secs: f64,
    /// Keep only the first `n` data rows.
    pub take: Option<usize>,
    /// Required number of rows after `take`.
    pub expected_rows: Option<usize>,
}

/// Rows of the UCI SML2010 files used by the preset (28 days of quarters).
pub const SML2010_ROWS: usize = 2688;

impl DatasetSpec {
    /// UCI SML2010 layout (`NEW-DATA-1.T15.txt`): whitespace separated,
    /// `dd/mm/yyyy hh:mm` in the first two columns, indoor dining-room
    /// temperature in the third, one row every 15 minutes.
    pub fn sml2010(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            delimiter: Delimiter::Whitespace,
            time: TimeColumns::DateTime {
                date_col: 0,
                time_col: 1,
                date_format: "%d/%m/%Y".into(),
                time_format: "%H:%M".into(),
            },
            value_col: 2,
            step_secs: DEFAULT_QUARTER_SECS,
            take: Some(SML2010_ROWS),
            expected_rows: Some(SML2010_ROWS),
        }
    }
}

/// Reads a dataset into equally spaced samples at `t = i * step`.
///
/// Lines starting with `#` and blank lines are skipped anywhere; lines before
/// the first data row whose value column is not numeric are taken as headers.
pub fn read_dataset(spec: &DatasetSpec) -> Result<Vec<TimedSample>> {
    let text = fs::read_to_string(&spec.path).map_err(|e| ingestion(&spec.path, e.to_string()))?;
    parse_dataset(&text, spec)
}

/// [`read_dataset`] on text already in memory; `spec.path` is only used in
/// error messages.
pub fn parse_dataset(text: &str, spec: &DatasetSpec) -> Result<Vec<TimedSample>> {
    if !(spec.step_secs > 0.0 && spec.step_secs.is_finite()) {
        return Err(Error::InvalidConfig(format!("step {} must be > 0", spec.step_secs)));
    }
    let err = |line: usize, reason: String| ingestion(&spec.path, format!("line {line}: {reason}"));
    let mut values = Vec::new();
    let mut stamps: Vec<NaiveDateTime> = Vec::new();

    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if spec.take.is_some_and(|n| values.len() >= n) {
            break;
        }
        let fields: Vec<&str> = match &spec.delimiter {
            Delimiter::Whitespace => line.split_whitespace().collect(),
            Delimiter::Char(c) => line.split(*c).map(str::trim).collect(),
        };
        let field = |col: usize| {
            fields
                .get(col)
                .copied()
                .ok_or_else(|| err(lineno, format!("missing column {} ({} present)", col + 1, fields.len())))
        };
        let raw = field(spec.value_col)?;
        let value: f64 = match raw.parse() {
            Ok(v) => v,
            Err(_) if values.is_empty() => continue,
            Err(_) => return Err(err(lineno, format!("value '{raw}' is not a number"))),
        };
        if !value.is_finite() {
            return Err(err(lineno, format!("value '{raw}' is not finite")));
        }
        if let TimeColumns::DateTime {
            date_col,
            time_col,
            date_format,
            time_format,
        } = &spec.time
        {
            let stamp = format!("{} {}", field(*date_col)?, field(*time_col)?);
            let parsed = NaiveDateTime::parse_from_str(&stamp, &format!("{date_format} {time_format}"))
                .map_err(|e| err(lineno, format!("timestamp '{stamp}': {e}")))?;
            if let Some(prev) = stamps.last() {
                let gap = (parsed - *prev).num_seconds() as f64;
                if (gap - spec.step_secs).abs() > 0.5 {
                    return Err(err(
                        lineno,
                        format!("spacing violation: {gap} s after previous row, expected {} s", spec.step_secs),
                    ));
                }
            }
            stamps.push(parsed);
        }
        values.push(value);
    }

    if values.is_empty() {
        return Err(ingestion(&spec.path, "no data rows".into()));
    }
    if let Some(n) = spec.expected_rows {
        if values.len() != n {
            return Err(ingestion(
                &spec.path,
                format!("expected {n} rows, found {}", values.len()),
            ));
        }
    }
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(i, v)| TimedSample::new(i as f64 * spec.step_secs, v))
        .collect())
}

fn ingestion(path: &Path, reason: String) -> Error {
    Error::Ingestion {
        path: path.to_path_buf(),
        reason,
    }
}

/// A run of frames removed on purpose to create a long gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstGap {
    pub start_secs: f64,
    pub quarters: u32,
}

/// Random and burst frame loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub drop_prob: f64,
    pub burst: Option<BurstGap>,
    pub quarter_secs: f64,
    pub seed: u64,
}

impl Default for LossModel {
    fn default() -> Self {
        Self {
            drop_prob: 0.0,
            burst: None,
            quarter_secs: DEFAULT_QUARTER_SECS,
            seed: 0,
        }
    }
}

impl LossModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::InvalidConfig(format!(
                "drop probability {} outside [0, 1]",
                self.drop_prob
            )));
        }
        Ok(())
    }
}

/// Drops frames from a time-ordered stream. Never reorders.
pub fn inject_loss<I>(frames: I, model: LossModel) -> Result<impl Iterator<Item = TimedSample>>
where
    I: IntoIterator<Item = TimedSample>,
{
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let window = model
        .burst
        .map(|b| (b.start_secs, b.start_secs + f64::from(b.quarters) * model.quarter_secs));
    Ok(frames.into_iter().filter(move |s| {
        if window.is_some_and(|(a, b)| s.t >= a && s.t < b) {
            return false;
        }
        // drawn for every frame outside the burst so the pattern only
        // depends on the seed and the frame order
        let u: f64 = rng.gen();
        u >= model.drop_prob
    }))
}
