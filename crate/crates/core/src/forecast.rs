//! Supervised windows, one-step-ahead forecasters and the relocation
//! experiment.
//!
//! A window holds the 8 most recent valid stationarized values before a
//! target. Windows never span a GAP, and hourly windows never span a masked
//! (night) hour, so each hourly run starts again every morning.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use chrono::{Datelike, NaiveDateTime};

use crate::error::{Error, Result};
use crate::geometry::SiteConfig;
use crate::metrics::{EvaluationReport, ReportLabels};
use crate::mlp::{Input, MlpModel, INPUTS};
use crate::par;
use crate::stationarize::{self, NormStats};
use crate::timeseries::{IrradiationSeries, StationarizedSeries, Step};

pub const WINDOW: usize = INPUTS;

/// Network input from a chronological history (oldest first): entry `k` is
/// the value `k` steps before the most recent one, normalized.
pub fn lag_vector(history: &[f64; WINDOW], norm: &NormStats) -> Input {
    let mut x = [0.0; WINDOW];
    for (k, v) in history.iter().rev().enumerate() {
        x[k] = norm.apply(*v);
    }
    x
}

/// Indices of every sample preceded by at least [`WINDOW`] consecutive valid
/// samples (and valid itself).
pub fn window_targets(st: &StationarizedSeries) -> Vec<usize> {
    let mut out = Vec::new();
    let mut run = 0usize;
    for (i, v) in st.values.iter().enumerate() {
        if v.is_some() {
            if run >= WINDOW {
                out.push(i);
            }
            run += 1;
        } else {
            run = 0;
        }
    }
    out
}

fn history_at(st: &StationarizedSeries, target: usize) -> [f64; WINDOW] {
    let mut h = [0.0; WINDOW];
    for (k, slot) in h.iter_mut().enumerate() {
        *slot = st.values[target - WINDOW + k].expect("window targets follow valid runs");
    }
    h
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowSet {
    pub inputs: Vec<Input>,
    pub targets: Vec<f64>,
    pub target_instants: Vec<NaiveDateTime>,
    /// Position of each target in the source series.
    pub target_indices: Vec<usize>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn pairs(&self) -> Vec<(Input, f64)> {
        self.inputs
            .iter()
            .copied()
            .zip(self.targets.iter().copied())
            .collect()
    }

    /// Window count per (year, month) of the target instant.
    pub fn per_month_counts(&self) -> BTreeMap<(i32, u32), usize> {
        let mut counts = BTreeMap::new();
        for t in &self.target_instants {
            *counts.entry((t.year(), t.month())).or_insert(0) += 1;
        }
        counts
    }
}

pub fn make_windows(st: &StationarizedSeries, norm: &NormStats) -> WindowSet {
    let mut set = WindowSet::default();
    for i in window_targets(st) {
        set.inputs.push(lag_vector(&history_at(st, i), norm));
        set.targets.push(norm.apply(st.values[i].unwrap()));
        set.target_instants.push(st.timestamp(i));
        set.target_indices.push(i);
    }
    set
}

/// Forward pass, inverse normalization, retrend, clamp at zero.
pub fn predict_next(
    model: &MlpModel,
    history: &[f64; WINDOW],
    instant: &NaiveDateTime,
    site: &SiteConfig,
) -> Result<f64> {
    let x = lag_vector(history, &model.norm);
    let ratio = model.norm.invert(model.forward(&x)?);
    let value = stationarize::retrend(ratio, site, instant, model.step)?;
    Ok(value.max(0.0))
}

/// The previous raw value, or `None` if there is none or it is a GAP.
pub fn persistence_next(series: &IrradiationSeries, instant: &NaiveDateTime) -> Option<f64> {
    let i = series.index_of(instant)?;
    if i == 0 {
        return None;
    }
    series.values()[i - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Predictor {
    /// MLP trained on the evaluated site.
    AnnLocal,
    /// MLP trained on another site.
    AnnRelocated,
    Persistence,
}

impl Predictor {
    pub fn label(self) -> &'static str {
        match self {
            Predictor::AnnLocal => "ann_local",
            Predictor::AnnRelocated => "ann_relocated",
            Predictor::Persistence => "persistence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorChoice {
    Ann,
    Persistence,
}

impl std::str::FromStr for PredictorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ann" => Ok(PredictorChoice::Ann),
            "persistence" => Ok(PredictorChoice::Persistence),
            other => Err(Error::InvalidArgument(format!(
                "unknown predictor `{other}` (expected ann or persistence)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ModelSource<'a> {
    TrainedHere(&'a MlpModel),
    TrainedElsewhere(&'a MlpModel),
}

impl<'a> ModelSource<'a> {
    pub fn model(&self) -> &'a MlpModel {
        match self {
            ModelSource::TrainedHere(m) | ModelSource::TrainedElsewhere(m) => m,
        }
    }

    fn predictor(&self) -> Predictor {
        match self {
            ModelSource::TrainedHere(_) => Predictor::AnnLocal,
            ModelSource::TrainedElsewhere(_) => Predictor::AnnRelocated,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRun {
    pub predictions: Vec<(NaiveDateTime, f64)>,
    pub measurements: Vec<(NaiveDateTime, f64)>,
    pub predictor: Predictor,
    pub site: SiteConfig,
    pub step: Step,
}

impl ForecastRun {
    fn new(
        predictions: Vec<(NaiveDateTime, f64)>,
        measurements: Vec<(NaiveDateTime, f64)>,
        predictor: Predictor,
        site: SiteConfig,
        step: Step,
    ) -> Self {
        assert_eq!(predictions.len(), measurements.len());
        assert!(predictions
            .iter()
            .zip(&measurements)
            .all(|(p, m)| p.0 == m.0 && p.1 >= 0.0 && m.1 >= 0.0));
        ForecastRun {
            predictions,
            measurements,
            predictor,
            site,
            step,
        }
    }

    pub fn predicted_values(&self) -> Vec<f64> {
        self.predictions.iter().map(|p| p.1).collect()
    }

    pub fn measured_values(&self) -> Vec<f64> {
        self.measurements.iter().map(|m| m.1).collect()
    }

    pub fn period(&self) -> String {
        match (self.predictions.first(), self.predictions.last()) {
            (Some(a), Some(b)) => format!(
                "{}..{}",
                self.step.format_timestamp(&a.0),
                self.step.format_timestamp(&b.0)
            ),
            _ => String::new(),
        }
    }

    pub fn report(&self, seed: u64) -> Result<EvaluationReport> {
        EvaluationReport::compute(
            ReportLabels {
                site: self.site.name.clone(),
                period: self.period(),
                predictor: self.predictor.label().into(),
                step: self.step.as_str().into(),
            },
            &self.measured_values(),
            &self.predicted_values(),
            seed,
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub predictors: Vec<PredictorChoice>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            predictors: vec![PredictorChoice::Ann, PredictorChoice::Persistence],
        }
    }
}

/// Evaluates the requested predictors on `eval`, one step ahead.
///
/// Every predictor is scored on the same instants: the targets of all
/// windows that can be formed from the evaluation series. The MLP always
/// uses its own frozen normalization, whichever site it is applied to.
pub fn run_experiment(
    source: Option<ModelSource<'_>>,
    eval: &IrradiationSeries,
    cfg: &ExperimentConfig,
) -> Result<Vec<ForecastRun>> {
    if let Some(src) = &source {
        if src.model().step != eval.step {
            return Err(Error::InvalidArgument(format!(
                "model was trained on a {} series but the evaluation series is {}",
                src.model().step,
                eval.step
            )));
        }
    }
    let st = stationarize::detrend(eval)?;
    let targets = window_targets(&st);
    if targets.is_empty() {
        return Err(Error::EmptyWindows);
    }
    let raw = eval.values();
    let measurements: Vec<(NaiveDateTime, f64)> = targets
        .iter()
        .map(|&i| (eval.timestamp(i), raw[i].expect("targets are valid samples")))
        .collect();

    let mut runs = Vec::new();
    for choice in &cfg.predictors {
        let run = match choice {
            PredictorChoice::Ann => {
                let src = source.ok_or_else(|| {
                    Error::InvalidArgument("the ann predictor needs a model".into())
                })?;
                let model = src.model();
                let preds = par::try_map_range(targets.len(), |k| {
                    let i = targets[k];
                    let t = eval.timestamp(i);
                    predict_next(model, &history_at(&st, i), &t, &eval.site).map(|p| (t, p))
                })?;
                ForecastRun::new(
                    preds,
                    measurements.clone(),
                    src.predictor(),
                    eval.site.clone(),
                    eval.step,
                )
            }
            PredictorChoice::Persistence => {
                let preds = targets
                    .iter()
                    .map(|&i| {
                        let t = eval.timestamp(i);
                        let p = persistence_next(eval, &t)
                            .expect("the step before a window target is valid");
                        (t, p)
                    })
                    .collect();
                ForecastRun::new(
                    preds,
                    measurements.clone(),
                    Predictor::Persistence,
                    eval.site.clone(),
                    eval.step,
                )
            }
        };
        runs.push(run);
    }
    Ok(runs)
}

pub const FORECAST_HEADER: [&str; 4] = [
    "timestamp",
    "measured_wh_m2",
    "predicted_wh_m2",
    "predictor",
];

pub fn write_forecasts(runs: &[ForecastRun], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(FORECAST_HEADER).map_err(err)?;
    for run in runs {
        for (p, m) in run.predictions.iter().zip(&run.measurements) {
            w.write_record([
                run.step.format_timestamp(&p.0),
                m.1.to_string(),
                p.1.to_string(),
                run.predictor.label().to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
