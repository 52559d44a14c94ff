//! Fixed-memory on-line temperature forecasting for sensor sink nodes.
//!
//! Frames arriving at irregular times are folded into 15-minute quarter
//! means ([`pipeline::QuarterAggregator`]), differenced into a small ring
//! buffer and fed to a perceptron or one-hidden-layer network trained by
//! plain sequential back-propagation ([`pipeline::TrainForecast`]). A
//! recursive Bayesian linear regression ([`bayes`]) serves as the reference
//! model, and [`experiment`] scores all of them on synthetic or recorded
//! streams from [`stream`].

pub mod ann;
pub mod bayes;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod pipeline;
pub mod stream;

pub use ann::{AnnModel, AnnTopology, LearnSchedule};
pub use bayes::{bootstrap_fit, BaselineInput, BayesForecaster, BayesState};
pub use error::{Error, Result};
pub use experiment::{grid_search, run_experiment, GridSpace, ModelKind, RunConfig, RunReport};
pub use metrics::{mae, mae_by_horizon, mae_star, smooth, HorizonErrors, Summary};
pub use pipeline::{Forecast, OnlineEngine, QuarterAggregator, TimedSample, TrainForecast};
