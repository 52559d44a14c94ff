//! Sink-node stream processing: quarter aggregation feeding a quarter sink
//! (the on-line trainer, or the Bayesian baseline in the harness).

pub mod aggregate;
pub mod ring;
pub mod stage;
pub mod transform;

use num_traits::Float;

use crate::ann::{AnnModel, AnnTopology, LearnSchedule};
use crate::error::Result;

pub use aggregate::{
    aggregate_segment, interpolate_line, FrameEffect, Line, QuarterAggregator, QuarterSink,
    TimedSample, DEFAULT_MAX_GAP, DEFAULT_QUARTER_SECS,
};
pub use ring::DiffRing;
pub use stage::{Forecast, TrainForecast};
pub use transform::{accumulate_into, dedifferentiate, difference};

/// Aggregator plus the sink it feeds.
#[derive(Debug, Clone)]
pub struct SinkNode<S> {
    aggregator: QuarterAggregator,
    sink: S,
}

impl<S: QuarterSink> SinkNode<S> {
    pub fn new(aggregator: QuarterAggregator, sink: S) -> Self {
        Self { aggregator, sink }
    }

    pub fn aggregator(&self) -> &QuarterAggregator {
        &self.aggregator
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn sink_mut(&mut self) -> &mut S {
        &mut self.sink
    }

    pub fn into_sink(self) -> S {
        self.sink
    }

    /// Processes one frame and returns the last output produced by any
    /// quarter it completed.
    pub fn process_sample(&mut self, sample: TimedSample) -> Result<Option<S::Output>> {
        let mut last = None;
        self.aggregator.push(sample, &mut self.sink, |o| last = Some(o))?;
        Ok(last)
    }

    /// Like [`SinkNode::process_sample`] but hands every output to `each`.
    pub fn process_sample_with(
        &mut self,
        sample: TimedSample,
        each: impl FnMut(S::Output),
    ) -> Result<FrameEffect> {
        self.aggregator.push(sample, &mut self.sink, each)
    }
}

/// The on-device forecaster: aggregation, differencing ring and ANN.
pub type OnlineEngine<T = f32> = SinkNode<TrainForecast<T>>;

impl<T: Float> SinkNode<TrainForecast<T>> {
    pub fn with_model(
        model: AnnModel<T>,
        schedule: LearnSchedule,
        quarter_secs: f64,
        max_gap: u32,
    ) -> Result<Self> {
        Ok(Self::new(
            QuarterAggregator::new(quarter_secs, max_gap)?,
            TrainForecast::new(model, schedule)?,
        ))
    }

    /// Engine with a freshly seeded model and default quarter settings.
    pub fn seeded(topology: AnnTopology, schedule: LearnSchedule, seed: u64) -> Result<Self> {
        Self::with_model(
            AnnModel::seeded(topology, seed),
            schedule,
            DEFAULT_QUARTER_SECS,
            DEFAULT_MAX_GAP,
        )
    }

    pub fn model(&self) -> &AnnModel<T> {
        self.sink.model()
    }

    /// Persistent reals of model and ring (aggregator scalars excluded).
    pub fn memory_reals(&self) -> usize {
        self.sink.memory_reals()
    }

    pub fn memory_bytes(&self) -> usize {
        self.sink.memory_bytes()
    }
}
