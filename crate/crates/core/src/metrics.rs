//! Forecast error metrics.

use crate::error::{check_len, Error, Result};

/// Mean absolute error of one multi-step forecast.
pub fn mae(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    check_len("forecast vs realized", y.len(), y_hat.len())?;
    if y.is_empty() {
        return Err(Error::EmptySet("forecast horizon"));
    }
    let sum: f64 = y_hat.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / y.len() as f64)
}

/// Absolute errors of a sequence of forecast events, one row per event and
/// one column per step ahead.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HorizonErrors {
    q: usize,
    data: Vec<f64>,
}

impl HorizonErrors {
    pub fn new(q: usize) -> Self {
        Self { q, data: Vec::new() }
    }

    /// Builds from rows; every row must have `q` entries.
    pub fn from_rows<R: AsRef<[f64]>>(q: usize, rows: &[R]) -> Result<Self> {
        let mut e = Self::new(q);
        for r in rows {
            e.push_abs(r.as_ref())?;
        }
        Ok(e)
    }

    pub fn horizon(&self) -> usize {
        self.q
    }

    pub fn events(&self) -> usize {
        self.data.len().checked_div(self.q).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.q..(i + 1) * self.q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.q.max(1))
    }

    /// Appends `|y_hat - y|` for one event.
    pub fn push(&mut self, y_hat: &[f64], y: &[f64]) -> Result<()> {
        check_len("forecast horizon", self.q, y_hat.len())?;
        check_len("realized horizon", self.q, y.len())?;
        self.data.extend(y_hat.iter().zip(y).map(|(a, b)| (a - b).abs()));
        Ok(())
    }

    /// Appends a row of errors; the absolute value is taken.
    pub fn push_abs(&mut self, errors: &[f64]) -> Result<()> {
        check_len("error row", self.q, errors.len())?;
        self.data.extend(errors.iter().map(|e| e.abs()));
        Ok(())
    }

    /// Per-event MAE.
    pub fn event_mae(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum::<f64>() / self.q as f64).collect()
    }
}

/// Mean of the per-event MAE.
pub fn mae_star(errors: &HorizonErrors) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptySet("forecast events"));
    }
    let per_event = errors.event_mae();
    Ok(per_event.iter().sum::<f64>() / per_event.len() as f64)
}

/// Trailing moving average; output has `len - window + 1` values.
pub fn smooth(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidConfig("smoothing window must be >= 1".into()));
    }
    if window > series.len() {
        return Err(Error::InvalidInput(format!(
            "smoothing window {window} longer than series ({})",
            series.len()
        )));
    }
    let w = window as f64;
    let mut sum: f64 = series[..window].iter().sum();
    let mut out = Vec::with_capacity(series.len() - window + 1);
    out.push(sum / w);
    for i in window..series.len() {
        sum += series[i] - series[i - window];
        out.push(sum / w);
    }
    // the running sum drifts on long series, so resync occasionally
    if series.len() > 4096 {
        for (i, o) in out.iter_mut().enumerate().step_by(1024) {
            *o = series[i..i + window].iter().sum::<f64>() / w;
        }
    }
    Ok(out)
}

/// Column means after dropping the first `warmup_exclude` events.
pub fn mae_by_horizon(errors: &HorizonErrors, warmup_exclude: usize) -> Result<Vec<f64>> {
    let n = errors.events();
    if warmup_exclude >= n {
        return Err(Error::EmptySet("forecast events after warmup exclusion"));
    }
    let mut sums = vec![0.0; errors.horizon()];
    for row in errors.rows().skip(warmup_exclude) {
        for (s, e) in sums.iter_mut().zip(row) {
            *s += e;
        }
    }
    let kept = (n - warmup_exclude) as f64;
    Ok(sums.into_iter().map(|s| s / kept).collect())
}

/// Five-number summary plus mean. Quartiles interpolate linearly between
/// order statistics at position `(n - 1) * p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySet("summary input"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value {bad} in summary input")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self {
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            // summation error can put the mean a hair outside the range
            mean: mean.clamp(sorted[0], sorted[sorted.len() - 1]),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Linear-interpolation quantile of ascending data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
