//! Experiment driver: runs a forecaster over a frame stream, pairs every
//! forecast with the quarter means it predicted and reports the errors.

use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::ann::{AnnModel, AnnTopology, LearnSchedule};
use crate::bayes::{BaselineInput, BayesForecaster};
use crate::error::{Error, Result};
use crate::metrics::{mae_by_horizon, smooth, HorizonErrors, Summary};
use crate::pipeline::{
    Forecast, QuarterAggregator, QuarterSink, SinkNode, TimedSample, TrainForecast,
    DEFAULT_MAX_GAP, DEFAULT_QUARTER_SECS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Lin,
    Mlp,
    Bayes,
}

impl ModelKind {
    /// Label used in reports and `summary.csv`.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Lin => "Lin",
            ModelKind::Mlp => "MLP",
            ModelKind::Bayes => "Baseline",
        }
    }

    /// Shipped learning schedule. Picked by [`grid_search`] on a seeded
    /// 10^5-frame sinus stream; not taken from any published setting.
    pub fn default_schedule(self) -> LearnSchedule {
        match self {
            ModelKind::Lin => LearnSchedule { eta0: 0.2, gamma: 0.5, epsilon: 0.0 },
            ModelKind::Mlp => LearnSchedule { eta0: 0.2, gamma: 0.25, epsilon: 0.0 },
            // unused by the baseline
            ModelKind::Bayes => LearnSchedule { eta0: 0.01, gamma: 0.0, epsilon: 0.0 },
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Lin => "lin",
            ModelKind::Mlp => "mlp",
            ModelKind::Bayes => "bayes",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lin" | "linear" | "perceptron" => Ok(ModelKind::Lin),
            "mlp" => Ok(ModelKind::Mlp),
            "bayes" | "baseline" => Ok(ModelKind::Bayes),
            other => Err(Error::InvalidConfig(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub p: usize,
    pub q: usize,
    pub h: usize,
    pub quarter_secs: f64,
    pub max_gap: u32,
    pub schedule: LearnSchedule,
    pub seed: u64,
    /// Events dropped before the per-horizon means; `None` drops 1.5 %.
    pub warmup_exclude: Option<usize>,
    pub smoothing: usize,
    pub bayes_input: BaselineInput,
    pub bayes_intercept: bool,
}

impl RunConfig {
    pub fn new(model: ModelKind) -> Self {
        Self {
            model,
            p: 8,
            q: 8,
            h: 8,
            quarter_secs: DEFAULT_QUARTER_SECS,
            max_gap: DEFAULT_MAX_GAP,
            schedule: model.default_schedule(),
            seed: 1,
            warmup_exclude: None,
            smoothing: 10,
            bayes_input: BaselineInput::Levels,
            bayes_intercept: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.q == 0 {
            return Err(Error::InvalidConfig("p and q must be >= 1".into()));
        }
        if self.model == ModelKind::Mlp && self.h == 0 {
            return Err(Error::InvalidConfig("MLP needs h >= 1".into()));
        }
        if self.smoothing == 0 {
            return Err(Error::InvalidConfig("smoothing window must be >= 1".into()));
        }
        self.schedule.validate()
    }

    pub fn topology(&self) -> Result<AnnTopology> {
        match self.model {
            ModelKind::Mlp => AnnTopology::mlp(self.p, self.h, self.q),
            _ => AnnTopology::perceptron(self.p, self.q),
        }
    }

    fn warmup_for(&self, events: usize) -> usize {
        self.warmup_exclude
            .unwrap_or_else(|| (events as f64 * 0.015).round() as usize)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::new(ModelKind::Lin)
    }
}

/// One emitted forecast with the mean of its origin quarter.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub quarter_index: i64,
    pub actual: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: &'static str,
    pub config: RunConfig,
    /// Absolute errors of every forecast whose `q` targets all materialized.
    pub errors: HorizonErrors,
    pub event_mae: Vec<f64>,
    pub smoothed: Vec<f64>,
    /// `None` when no forecast could be scored.
    pub summary: Option<Summary>,
    pub by_horizon: Option<Vec<f64>>,
    pub forecasts: Vec<ForecastRecord>,
    pub frames: u64,
    pub quarters: u64,
    pub resets: u64,
    pub late_frames: u64,
    /// Forecasts dropped because a target quarter fell in a gap.
    pub unscored: u64,
    pub updates: u64,
    /// The run stopped early on a non-finite model parameter.
    pub diverged: bool,
}

impl RunReport {
    /// Mean of the per-event MAE (MAE*), if any event was scored.
    pub fn mae_star(&self) -> Option<f64> {
        self.summary.map(|s| s.mean)
    }
}

/// Pairs forecasts with realized quarter means as they arrive.
#[derive(Debug)]
struct Scorer<S> {
    inner: S,
    q: usize,
    keep_forecasts: bool,
    pending: VecDeque<(Forecast, Vec<f64>)>,
    errors: HorizonErrors,
    forecasts: Vec<ForecastRecord>,
    quarters: u64,
    unscored: u64,
}

impl<S: QuarterSink<Output = Forecast>> Scorer<S> {
    fn new(inner: S, q: usize, keep_forecasts: bool) -> Self {
        Self {
            inner,
            q,
            keep_forecasts,
            pending: VecDeque::new(),
            errors: HorizonErrors::new(q),
            forecasts: Vec::new(),
            quarters: 0,
            unscored: 0,
        }
    }

    fn realize(&mut self, index: i64, mean: f64) -> Result<()> {
        let mut i = 0;
        while i < self.pending.len() {
            let (f, got) = &mut self.pending[i];
            let next = f.origin + got.len() as i64 + 1;
            if index == next {
                got.push(mean);
            } else if index > next {
                self.pending.remove(i);
                self.unscored += 1;
                continue;
            }
            if got.len() == self.q {
                let (f, got) = self.pending.remove(i).expect("index in range");
                self.errors.push(&f.values, &got)?;
                continue;
            }
            i += 1;
        }
        Ok(())
    }
}

impl<S: QuarterSink<Output = Forecast>> QuarterSink for Scorer<S> {
    type Output = ();

    fn quarter_completed(&mut self, index: i64, mean: f64) -> Result<Option<()>> {
        self.quarters += 1;
        self.realize(index, mean)?;
        if let Some(f) = self.inner.quarter_completed(index, mean)? {
            if self.keep_forecasts {
                self.forecasts.push(ForecastRecord {
                    quarter_index: index,
                    actual: mean,
                    values: f.values.clone(),
                });
            }
            self.pending.push_back((f, Vec::with_capacity(self.q)));
        }
        Ok(None)
    }

    fn reset(&mut self) {
        self.inner.reset();
    }
}

/// Sinks that can report how many weight updates they made.
trait Updates {
    fn updates(&self) -> u64;
}

impl Updates for TrainForecast<f32> {
    fn updates(&self) -> u64 {
        self.model().updates()
    }
}

impl Updates for BayesForecaster {
    fn updates(&self) -> u64 {
        BayesForecaster::updates(self)
    }
}

/// Runs one experiment and keeps every forecast for `forecasts.csv`.
pub fn run_experiment<I>(cfg: &RunConfig, source: I) -> Result<RunReport>
where
    I: IntoIterator<Item = TimedSample>,
{
    run_with(cfg, source, true)
}

/// Like [`run_experiment`] without the per-forecast records.
pub fn run_experiment_lean<I>(cfg: &RunConfig, source: I) -> Result<RunReport>
where
    I: IntoIterator<Item = TimedSample>,
{
    run_with(cfg, source, false)
}

fn run_with<I>(cfg: &RunConfig, source: I, keep_forecasts: bool) -> Result<RunReport>
where
    I: IntoIterator<Item = TimedSample>,
{
    cfg.validate()?;
    let aggregator = QuarterAggregator::new(cfg.quarter_secs, cfg.max_gap)?;
    match cfg.model {
        ModelKind::Bayes => {
            let sink = BayesForecaster::new(cfg.p, cfg.q, cfg.bayes_input, cfg.bayes_intercept)?;
            drive(cfg, aggregator, sink, source, keep_forecasts)
        }
        ModelKind::Lin | ModelKind::Mlp => {
            let model = AnnModel::<f32>::seeded(cfg.topology()?, cfg.seed);
            let sink = TrainForecast::new(model, cfg.schedule)?;
            drive(cfg, aggregator, sink, source, keep_forecasts)
        }
    }
}

fn drive<S, I>(
    cfg: &RunConfig,
    aggregator: QuarterAggregator,
    sink: S,
    source: I,
    keep_forecasts: bool,
) -> Result<RunReport>
where
    S: QuarterSink<Output = Forecast> + Updates,
    I: IntoIterator<Item = TimedSample>,
{
    let mut node = SinkNode::new(aggregator, Scorer::new(sink, cfg.q, keep_forecasts));
    let mut frames = 0;
    let mut diverged = false;
    for sample in source {
        frames += 1;
        match node.process_sample(sample) {
            Ok(_) | Err(Error::NonMonotonicTime { .. }) => {}
            Err(Error::ModelDiverged { .. }) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let aggregator = node.aggregator().clone();
    let scorer = node.into_sink();

    let event_mae = scorer.errors.event_mae();
    let summary = if event_mae.is_empty() {
        None
    } else {
        Some(Summary::from_values(&event_mae)?)
    };
    let smoothed = smooth(&event_mae, cfg.smoothing).unwrap_or_default();
    let by_horizon = mae_by_horizon(&scorer.errors, cfg.warmup_for(event_mae.len())).ok();
    Ok(RunReport {
        method: cfg.model.label(),
        config: cfg.clone(),
        updates: scorer.inner.updates(),
        errors: scorer.errors,
        event_mae,
        smoothed,
        summary,
        by_horizon,
        forecasts: scorer.forecasts,
        frames,
        quarters: scorer.quarters,
        resets: aggregator.resets(),
        late_frames: aggregator.dropped(),
        unscored: scorer.unscored,
        diverged,
    })
}

/// Grid of learning schedules.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpace {
    pub eta0: Vec<f64>,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
}

impl Default for GridSpace {
    fn default() -> Self {
        Self {
            eta0: vec![0.2, 0.1, 0.05, 0.01, 0.005],
            gamma: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            epsilon: vec![0.0, 1e-5, 1e-4, 1e-3],
        }
    }
}

impl GridSpace {
    /// Cartesian product in `eta0`, `gamma`, `epsilon` order.
    pub fn points(&self) -> Vec<LearnSchedule> {
        let mut out = Vec::with_capacity(self.eta0.len() * self.gamma.len() * self.epsilon.len());
        for &eta0 in &self.eta0 {
            for &gamma in &self.gamma {
                for &epsilon in &self.epsilon {
                    out.push(LearnSchedule { eta0, gamma, epsilon });
                }
            }
        }
        out
    }
}

impl FromStr for GridSpace {
    type Err = Error;

    /// `eta0=0.1,0.05;gamma=0;epsilon=0,1e-4`. Omitted axes keep their
    /// default values.
    fn from_str(s: &str) -> Result<Self> {
        let mut space = GridSpace::default();
        for part in s.split([';', '\n']).map(str::trim).filter(|p| !p.is_empty() && !p.starts_with('#')) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("grid axis '{part}' lacks '='")))?;
            let values = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidConfig(format!("bad grid value '{v}' for {key}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if values.is_empty() {
                return Err(Error::InvalidConfig(format!("grid axis {key} is empty")));
            }
            match key.trim() {
                "eta0" => space.eta0 = values,
                "gamma" => space.gamma = values,
                "epsilon" => space.epsilon = values,
                other => return Err(Error::InvalidConfig(format!("unknown grid axis '{other}'"))),
            }
        }
        Ok(space)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub schedule: LearnSchedule,
    /// `None` if the run diverged or scored nothing.
    pub mae_star: Option<f64>,
    pub diverged: bool,
}

/// Evaluates every schedule of `space` on a fresh stream from `factory` and
/// ranks by MAE*, best first. Diverged or unscored points go last. Ties keep
/// grid order, so the ranking is deterministic.
pub fn grid_search<F, I>(space: &GridSpace, base: &RunConfig, factory: F) -> Result<Vec<GridResult>>
where
    F: Fn() -> I + Sync,
    I: IntoIterator<Item = TimedSample>,
{
    let points = space.points();
    if points.is_empty() {
        return Err(Error::EmptySet("grid search space"));
    }
    let mut results = points
        .into_par_iter()
        .map(|schedule| {
            let cfg = RunConfig { schedule, ..base.clone() };
            let report = run_experiment_lean(&cfg, factory())?;
            Ok(GridResult {
                schedule,
                mae_star: if report.diverged { None } else { report.mae_star() },
                diverged: report.diverged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| {
        let key = |r: &GridResult| r.mae_star.unwrap_or(f64::INFINITY);
        a.diverged.cmp(&b.diverged).then(key(a).total_cmp(&key(b)))
    });
    Ok(results)
}

/// Writes `summary.csv` with one row per report.
pub fn write_summary(path: &Path, reports: &[&RunReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "min", "q1", "q2", "mean", "q3", "max"])?;
    for r in reports {
        let Some(s) = r.summary else { continue };
        w.write_record([
            r.method.to_string(),
            s.min.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.mean.to_string(),
            s.q3.to_string(),
            s.max.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `mae_star_trace.csv`; the smoothed value of event `i` is the mean
/// of events `i + 1 - window ..= i` and is empty for the first `window - 1`.
pub fn write_trace(path: &Path, report: &RunReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["event_index", "mae", "smoothed_mae"])?;
    let lag = report.config.smoothing - 1;
    for (i, m) in report.event_mae.iter().enumerate() {
        let s = if i >= lag {
            report.smoothed.get(i - lag).map(f64::to_string).unwrap_or_default()
        } else {
            String::new()
        };
        w.write_record([i.to_string(), m.to_string(), s])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_by_horizon(path: &Path, report: &RunReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["horizon", "mae"])?;
    for (z, m) in report.by_horizon.iter().flatten().enumerate() {
        w.write_record([(z + 1).to_string(), m.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_forecasts(path: &Path, report: &RunReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let q = report.config.q;
    let mut header = vec!["quarter_index".to_string(), "actual".to_string()];
    header.extend((1..=q).map(|z| format!("h{z}")));
    w.write_record(&header)?;
    for f in &report.forecasts {
        let mut row = vec![f.quarter_index.to_string(), f.actual.to_string()];
        row.extend(f.values.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes all four CSV files of one run into `dir` (created if missing).
pub fn write_outputs(dir: &Path, report: &RunReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_summary(&dir.join("summary.csv"), &[report])?;
    write_trace(&dir.join("mae_star_trace.csv"), report)?;
    write_by_horizon(&dir.join("mae_by_horizon.csv"), report)?;
    write_forecasts(&dir.join("forecasts.csv"), report)?;
    Ok(())
}
