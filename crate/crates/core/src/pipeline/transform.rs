//! First-order differencing and its inverse.

/// `d[i] = series[i + 1] - series[i]`; empty for fewer than two values.
pub fn difference(series: &[f64]) -> Vec<f64> {
    series.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Rebuilds a series from its origin and differences. The result has
/// `diffs.len() + 1` values and starts with `origin`.
pub fn dedifferentiate(origin: f64, diffs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(diffs.len() + 1);
    out.push(origin);
    out.extend(diffs.iter().scan(origin, |acc, d| {
        *acc += d;
        Some(*acc)
    }));
    out
}

/// Writes `origin + cumsum(steps)` into `out` (forecast dedifferentiation,
/// the origin itself is not written).
pub fn accumulate_into<I>(origin: f64, steps: I, out: &mut [f64])
where
    I: IntoIterator<Item = f64>,
{
    let mut acc = origin;
    for (o, s) in out.iter_mut().zip(steps) {
        acc += s;
        *o = acc;
    }
}
