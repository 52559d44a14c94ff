//! Quarter-mean aggregation of non-equidistant frames.
//!
//! Consecutive frames are joined by straight lines and integrated with the
//! trapezoid rule. A pair that straddles one or more quarter boundaries is
//! split at each boundary using the interpolated value there; every quarter
//! closed this way is handed to a [`QuarterSink`]. When more than `max_gap`
//! quarters separate two frames the aggregator and the sink are reset and
//! the frame starts a fresh stream.

use crate::error::{Error, Result};

/// One sensor frame: value (°C) and arrival time (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedSample {
    pub t: f64,
    pub v: f64,
}

impl TimedSample {
    pub fn new(t: f64, v: f64) -> Self {
        Self { t, v }
    }
}

/// Slope-intercept line `v = slope * t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn at(&self, t: f64) -> f64 {
        self.slope * t + self.intercept
    }
}

/// Line through `(t1, v1)` and `(t2, v2)`.
pub fn interpolate_line(t1: f64, v1: f64, t2: f64, v2: f64) -> Result<Line> {
    if !(t2 > t1) {
        return Err(Error::NonMonotonicTime {
            previous: t1,
            current: t2,
        });
    }
    let slope = (v2 - v1) / (t2 - t1);
    Ok(Line {
        slope,
        intercept: v1 - slope * t1,
    })
}

/// Trapezoid contribution of the segment `(t1, v1) -> (t2, v2)` to the mean
/// of a window of `quarter` seconds.
pub fn aggregate_segment(t1: f64, v1: f64, t2: f64, v2: f64, quarter: f64) -> Result<f64> {
    if t2 < t1 {
        return Err(Error::NonMonotonicTime {
            previous: t1,
            current: t2,
        });
    }
    Ok((t2 - t1) / quarter * 0.5 * (v1 + v2))
}

/// Receiver of completed quarter means.
pub trait QuarterSink {
    type Output;

    /// Called once per completed quarter, in increasing `index` order.
    fn quarter_completed(&mut self, index: i64, mean: f64) -> Result<Option<Self::Output>>;

    /// Drops all stream state after a gap larger than the aggregator allows.
    fn reset(&mut self);
}

/// What a frame did to the aggregator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameEffect {
    /// First frame of a stream (also right after a reset).
    Started,
    /// Frame continued the current stream.
    Continued,
    /// Gap too large: state was reset and the frame started a new stream.
    Reset,
}

#[derive(Debug, Clone)]
pub struct QuarterAggregator {
    quarter: f64,
    max_gap: i64,
    prev: Option<TimedSample>,
    prev_quarter: i64,
    acc: f64,
    dropped: u64,
    resets: u64,
}

pub const DEFAULT_QUARTER_SECS: f64 = 900.0;
pub const DEFAULT_MAX_GAP: u32 = 4;

impl Default for QuarterAggregator {
    fn default() -> Self {
        Self::new(DEFAULT_QUARTER_SECS, DEFAULT_MAX_GAP).expect("defaults are valid")
    }
}

impl QuarterAggregator {
    pub fn new(quarter_secs: f64, max_gap: u32) -> Result<Self> {
        if !(quarter_secs.is_finite() && quarter_secs > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "quarter length must be positive, got {quarter_secs}"
            )));
        }
        Ok(Self {
            quarter: quarter_secs,
            max_gap: i64::from(max_gap),
            prev: None,
            prev_quarter: 0,
            acc: 0.0,
            dropped: 0,
            resets: 0,
        })
    }

    pub fn quarter_secs(&self) -> f64 {
        self.quarter
    }

    pub fn max_gap(&self) -> u32 {
        self.max_gap as u32
    }

    /// Frames rejected for arriving out of order.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Resets triggered by gaps longer than `max_gap` quarters.
    pub fn resets(&self) -> u64 {
        self.resets
    }

    /// Partial mean accumulated for the quarter currently open.
    pub fn accumulator(&self) -> f64 {
        self.acc
    }

    pub fn previous(&self) -> Option<TimedSample> {
        self.prev
    }

    /// Index of the quarter holding the previous frame, if any.
    pub fn previous_quarter(&self) -> Option<i64> {
        self.prev.map(|_| self.prev_quarter)
    }

    pub fn quarter_of(&self, t: f64) -> i64 {
        (t / self.quarter).floor() as i64
    }

    /// Forgets the previous frame and the partial quarter.
    pub fn clear(&mut self) {
        self.prev = None;
        self.prev_quarter = 0;
        self.acc = 0.0;
    }

    /// Feeds one frame. Every quarter completed by it is delivered to `sink`
    /// and `on_output` receives whatever the sink produced for it.
    ///
    /// Late frames (`t` before the previous frame) are counted, rejected with
    /// [`Error::NonMonotonicTime`] and leave the state untouched.
    pub fn push<S: QuarterSink>(
        &mut self,
        sample: TimedSample,
        sink: &mut S,
        mut on_output: impl FnMut(S::Output),
    ) -> Result<FrameEffect> {
        if !(sample.t.is_finite() && sample.v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite frame (t={}, v={})",
                sample.t, sample.v
            )));
        }
        let TimedSample { t, v } = sample;
        let quarter_now = self.quarter_of(t);

        let effect = match self.prev {
            None => {
                self.start(sample);
                FrameEffect::Started
            }
            Some(prev) if t < prev.t => {
                self.dropped += 1;
                return Err(Error::NonMonotonicTime {
                    previous: prev.t,
                    current: t,
                });
            }
            Some(_) if quarter_now - self.prev_quarter > self.max_gap => {
                self.resets += 1;
                self.clear();
                sink.reset();
                self.start(sample);
                FrameEffect::Reset
            }
            Some(prev) => {
                let mut seg_t = prev.t;
                let mut seg_v = prev.v;
                let mut line = None;
                let mut closing = self.prev_quarter;
                loop {
                    let boundary = (closing + 1) as f64 * self.quarter;
                    if boundary > t {
                        break;
                    }
                    let line = match line {
                        Some(l) => l,
                        None => *line.insert(interpolate_line(prev.t, prev.v, t, v)?),
                    };
                    let v_boundary = if boundary == t { v } else { line.at(boundary) };
                    self.acc += aggregate_segment(seg_t, seg_v, boundary, v_boundary, self.quarter)?;
                    let mean = self.acc;
                    self.acc = 0.0;
                    seg_t = boundary;
                    seg_v = v_boundary;
                    if let Some(out) = sink.quarter_completed(closing, mean)? {
                        on_output(out);
                    }
                    closing += 1;
                }
                if seg_t < t {
                    self.acc += aggregate_segment(seg_t, seg_v, t, v, self.quarter)?;
                }
                FrameEffect::Continued
            }
        };
        self.prev = Some(sample);
        self.prev_quarter = quarter_now;
        Ok(effect)
    }

    fn start(&mut self, sample: TimedSample) {
        self.acc = sample.v * (sample.t.rem_euclid(self.quarter) / self.quarter);
    }
}
