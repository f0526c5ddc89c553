//! Solar irradiation forecasting with relocated learning.
//!
//! An 8-3-1 multilayer perceptron is trained on the stationarized global
//! horizontal irradiation of one site and applied, unchanged, at sites with
//! no measurement history. The crate also carries the persistence baseline,
//! the error statistics used to compare forecasters, a seeded synthetic
//! irradiation generator, and the chain that turns a horizontal forecast into
//! PV energy on a tilted plane.
//!
//! Data-parallel loops (series geometry, window evaluation, bootstrap
//! resampling) run on rayon when the `parallel` feature is enabled (default)
//! and fall back to plain iterators otherwise. Results are bit-identical in
//! both modes and for any thread count.

pub mod cli;
pub mod error;
pub mod forecast;
pub mod geometry;
pub mod metrics;
pub mod mlp;
pub mod par;
pub mod pv;
pub mod stationarize;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
pub use forecast::{ForecastRun, ModelSource, Predictor, PredictorChoice, WindowSet};
pub use geometry::{SiteConfig, SolarPosition};
pub use metrics::EvaluationReport;
pub use mlp::{MlpModel, Network, TrainConfig, TrainReport};
pub use pv::PvPlantConfig;
pub use stationarize::NormStats;
pub use synth::CloudParams;
pub use timeseries::{IrradiationSeries, StationarizedSeries, Step};
