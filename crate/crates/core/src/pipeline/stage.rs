use num_traits::Float;

use crate::ann::{AnnModel, LearnSchedule};
use crate::error::{Error, Result};
use crate::pipeline::aggregate::QuarterSink;
use crate::pipeline::ring::DiffRing;

/// Temperature-scale forecast for the `q` quarters following `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    /// Index of the quarter whose mean the forecast was produced from.
    pub origin: i64,
    pub values: Vec<f64>,
}

impl Forecast {
    pub fn horizon(&self) -> usize {
        self.values.len()
    }
}

/// Differencing, training and forecasting on completed quarter means.
///
/// Each quarter mean is turned into a difference with the previous one and
/// written into a `p + q` ring. Once `k >= p + q` the oldest `p + q`
/// differences form one training pair (so training lags `q` quarters behind
/// the stream); once `k >= p` the latest `p` differences are forecast and the
/// predicted differences are summed back onto the current mean.
#[derive(Debug, Clone)]
pub struct TrainForecast<T = f32> {
    model: AnnModel<T>,
    ring: DiffRing<T>,
    schedule: LearnSchedule,
}

impl<T: Float> TrainForecast<T> {
    pub fn new(model: AnnModel<T>, schedule: LearnSchedule) -> Result<Self> {
        schedule.validate()?;
        let topo = model.topology();
        Ok(Self {
            ring: DiffRing::new(topo.inputs() + topo.outputs()),
            model,
            schedule,
        })
    }

    pub fn model(&self) -> &AnnModel<T> {
        &self.model
    }

    pub fn ring(&self) -> &DiffRing<T> {
        &self.ring
    }

    pub fn schedule(&self) -> &LearnSchedule {
        &self.schedule
    }

    /// Reals of model plus ring buffer.
    pub fn memory_reals(&self) -> usize {
        self.model.memory_reals() + self.ring.memory_reals()
    }

    pub fn memory_bytes(&self) -> usize {
        self.memory_reals() * std::mem::size_of::<T>()
    }

    /// Handles one completed quarter mean.
    pub fn train_and_forecast(&mut self, origin: i64, mean: f64) -> Result<Option<Forecast>> {
        if !mean.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite quarter mean {mean}")));
        }
        let Some(prev) = self.ring.prev_mean() else {
            self.ring.set_prev_mean(mean);
            return Ok(None);
        };
        self.ring.set_prev_mean(mean);
        let diff = T::from(mean - prev).ok_or_else(|| {
            Error::InvalidInput(format!("difference {} not representable", mean - prev))
        })?;
        self.ring.push(diff);

        let topo = self.model.topology();
        let (p, q) = (topo.inputs() as u64, topo.outputs() as u64);
        let k = self.ring.count();

        if k >= p + q {
            self.ring.copy_window(k - p - q, self.model.input_mut());
            self.model.forward_loaded();
            let ring = &self.ring;
            self.model.backprop_by(|z| ring.get(k - q + z as u64));
            self.model.update(&self.schedule)?;
        }

        if k < p {
            return Ok(None);
        }
        self.ring.copy_window(k - p, self.model.input_mut());
        let predicted = self.model.forward_loaded();
        let mut values = vec![0.0; q as usize];
        crate::pipeline::transform::accumulate_into(
            mean,
            predicted.iter().map(|d| d.to_f64().unwrap_or(f64::NAN)),
            &mut values,
        );
        Ok(Some(Forecast { origin, values }))
    }

    /// Clears the ring and previous mean; model weights are kept.
    pub fn reset(&mut self) {
        self.ring.reset();
    }
}

impl<T: Float> QuarterSink for TrainForecast<T> {
    type Output = Forecast;

    fn quarter_completed(&mut self, index: i64, mean: f64) -> Result<Option<Forecast>> {
        self.train_and_forecast(index, mean)
    }

    fn reset(&mut self) {
        TrainForecast::reset(self);
    }
}
