//! Batch command-line harness: `synth`, `train`, `evaluate`, `pv` and
//! `stationarize`.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or validation
//! errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::forecast::{self, ExperimentConfig, ModelSource, PredictorChoice};
use crate::geometry::{self, SiteConfig};
use crate::metrics::{self, EvaluationReport, ReportLabels};
use crate::mlp::{self, TrainConfig};
use crate::pv::{self, PvPlantConfig};
use crate::stationarize;
use crate::synth::{self, CloudParams};
use crate::timeseries::{self, IrradiationSeries, Step};

#[derive(Debug, Parser)]
#[command(name = "solar-relocate", version, about = "Relocated-learning solar irradiation forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic irradiation series.
    Synth(SynthArgs),
    /// Train the 8-3-1 network on the first part of a series.
    Train(TrainArgs),
    /// Score forecasters on a series (relocated or local model, persistence).
    Evaluate(EvaluateArgs),
    /// Forecast PV energy of a tilted plant from a horizontal series.
    Pv(PvArgs),
    /// Dump the stationarized series.
    Stationarize(StationarizeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Site config (JSON).
    #[arg(long)]
    pub site: PathBuf,
    #[arg(long)]
    pub years: u32,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// First day (YYYY-MM-DD).
    #[arg(long, default_value = "2001-01-01")]
    pub start: NaiveDate,
    #[arg(long, default_value_t = 0.9)]
    pub phi: f64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.7)]
    pub mean_attenuation: f64,
    /// Write daily totals instead of hourly values.
    #[arg(long, value_parser = parse_step, default_value = "hourly")]
    pub step: Step,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long)]
    pub site: PathBuf,
    #[arg(long, value_parser = parse_step)]
    pub step: Step,
    #[arg(long)]
    pub seed: u64,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch loss CSV; defaults to `<out>.training.csv`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Chronological share of the series used for training.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().momentum)]
    pub momentum: f64,
    #[arg(long, default_value_t = TrainConfig::default().max_epochs)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().patience)]
    pub patience: usize,
    #[arg(long, default_value_t = TrainConfig::default().validation_fraction)]
    pub validation_fraction: f64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long)]
    pub site: PathBuf,
    /// Comma-separated: ann, persistence.
    #[arg(long, value_delimiter = ',', default_value = "ann,persistence", value_parser = parse_predictor)]
    pub predictors: Vec<PredictorChoice>,
    /// Report CSV; the report is always printed to stdout as well.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-timestamp forecast CSV.
    #[arg(long)]
    pub forecasts: Option<PathBuf>,
    /// Bootstrap seed for the nRMSE interval.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PvArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long)]
    pub site: PathBuf,
    #[arg(long)]
    pub plant: PathBuf,
    /// PV forecast CSV (`timestamp,predicted_wh,measured_wh`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct StationarizeArgs {
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long)]
    pub site: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_step(s: &str) -> Result<Step, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_predictor(s: &str) -> Result<PredictorChoice, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failed command: message for stderr plus exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_validation() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T> = Result<T, CliError>;

/// Runs one parsed command; returns what it prints on stdout.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Pv(a) => cmd_pv(&a),
        Command::Stationarize(a) => cmd_stationarize(&a),
    }
}

fn load_series(path: &Path, site: &SiteConfig, step: Option<Step>) -> CliResult<IrradiationSeries> {
    let step = match step {
        Some(s) => s,
        None => timeseries::detect_step(path)?,
    };
    Ok(timeseries::load_csv(path, site, step)?)
}

pub fn cmd_synth(a: &SynthArgs) -> CliResult<String> {
    let site = SiteConfig::load(&a.site)?;
    let cloud = CloudParams {
        phi: a.phi,
        sigma: a.sigma,
        mean_attenuation: a.mean_attenuation,
    };
    let hourly = synth::generate(&site, a.start, a.years, cloud, a.seed)?;
    let series = match a.step {
        Step::Hourly => hourly,
        Step::Daily => synth::aggregate_daily(&hourly)?,
    };
    timeseries::write_csv(&series, &a.out)?;
    Ok(format!(
        "wrote {} {} values for {} to {}\n",
        series.len(),
        series.step,
        site.name,
        a.out.display()
    ))
}

fn summary_table(reports: &[EvaluationReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14} {:>12} {:>10} {:>8} {:>7} {:>7}",
        "predictor", "RMSE(Wh/m2)", "nRMSE(%)", "±IC95", "CC", "n"
    );
    for r in reports {
        let cc = r.cc.map(|c| format!("{c:.3}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<14} {:>12.1} {:>10.2} {:>8.2} {:>7} {:>7}",
            r.predictor, r.rmse, r.nrmse_pct, r.nrmse_ci95_halfwidth, cc, r.n
        );
    }
    s
}

fn reports_csv(reports: &[EvaluationReport]) -> String {
    let mut s = metrics::REPORT_HEADER.join(",");
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_record().join(","));
        s.push('\n');
    }
    s
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<String> {
    let site = SiteConfig::load(&a.site)?;
    let series = load_series(&a.series, &site, Some(a.step))?;
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        momentum: a.momentum,
        max_epochs: a.max_epochs,
        patience: a.patience,
        validation_fraction: a.validation_fraction,
        seed: a.seed,
    };
    cfg.validate()?;
    let (train_part, test_part) = timeseries::split_train_test(&series, a.train_fraction)?;
    let st = stationarize::detrend(&train_part)?;
    let norm = stationarize::fit_minmax(&st)?;
    let windows = forecast::make_windows(&st, &norm);
    for ((y, m), n) in windows.per_month_counts() {
        log::info!("training windows {y}-{m:02}: {n}");
    }
    let (model, report) = mlp::train(&windows.pairs(), &cfg, norm, &site.name, a.step)?;
    mlp::save(&model, &a.out)?;

    let report_path = a
        .report
        .clone()
        .unwrap_or_else(|| a.out.with_extension("training.csv"));
    let mut csv = String::from("epoch,train_mse,val_mse\n");
    for (e, (t, v)) in report.train_loss.iter().zip(&report.val_loss).enumerate() {
        let _ = writeln!(csv, "{},{},{}", e + 1, t, v);
    }
    fs::write(&report_path, csv).map_err(|e| Error::Io {
        path: report_path.clone(),
        source: e,
    })?;

    let runs = forecast::run_experiment(
        Some(ModelSource::TrainedHere(&model)),
        &test_part,
        &ExperimentConfig::default(),
    )?;
    let reports = runs
        .iter()
        .map(|r| r.report(a.seed))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "trained on {} windows ({} {} values), best epoch {} of {}",
        windows.len(),
        train_part.len(),
        a.step,
        report.best_epoch,
        report.stopped_epoch
    );
    let _ = writeln!(
        out,
        "held-out {:.0}% ({} values):",
        100.0 * (1.0 - a.train_fraction),
        test_part.len()
    );
    out.push_str(&summary_table(&reports));
    Ok(out)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<String> {
    if a.predictors.is_empty() {
        return Err(usage("--predictors must name at least one predictor"));
    }
    let wants_ann = a.predictors.contains(&PredictorChoice::Ann);
    if wants_ann && a.model.is_none() {
        return Err(usage("--model is required when the ann predictor is requested"));
    }
    let site = SiteConfig::load(&a.site)?;
    let model = match (&a.model, wants_ann) {
        (Some(p), true) => Some(mlp::load(p)?),
        _ => None,
    };
    let series = load_series(&a.series, &site, model.as_ref().map(|m| m.step))?;
    let source = model.as_ref().map(|m| {
        if m.training_site == site.name {
            ModelSource::TrainedHere(m)
        } else {
            ModelSource::TrainedElsewhere(m)
        }
    });
    let runs = forecast::run_experiment(
        source,
        &series,
        &ExperimentConfig {
            predictors: a.predictors.clone(),
        },
    )?;
    let reports = runs
        .iter()
        .map(|r| r.report(a.seed))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(p) = &a.report {
        metrics::write_reports(&reports, p)?;
    }
    if let Some(p) = &a.forecasts {
        forecast::write_forecasts(&runs, p)?;
    }
    Ok(reports_csv(&reports))
}

pub fn cmd_pv(a: &PvArgs) -> CliResult<String> {
    let site = SiteConfig::load(&a.site)?;
    let plant = PvPlantConfig::load(&a.plant)?;
    let model = mlp::load(&a.model)?;
    if model.step != Step::Hourly {
        return Err(usage("pv needs a model trained on an hourly series"));
    }
    let series = load_series(&a.series, &site, Some(Step::Hourly))?;
    let st = stationarize::detrend(&series)?;
    let targets = forecast::window_targets(&st);
    if targets.is_empty() {
        return Err(Error::EmptyWindows.into());
    }
    let raw = series.values();
    let energy = |ghi: f64, i: usize| {
        let mid = geometry::hour_midpoint(&series.timestamp(i));
        pv::pv_energy(pv::transpose(ghi, &site, &mid, &plant), &plant)
    };
    let rows = crate::par::try_map_range(targets.len(), |k| {
        let i = targets[k];
        let t = series.timestamp(i);
        let mut history = [0.0; forecast::WINDOW];
        for (j, h) in history.iter_mut().enumerate() {
            *h = st.values[i - forecast::WINDOW + j].unwrap();
        }
        let predicted = pv::forecast_pv_energy(&model, &history, &t, &site, &plant)?;
        let measured = energy(raw[i].unwrap(), i);
        let persisted = energy(raw[i - 1].unwrap(), i);
        Ok::<_, Error>((t, predicted, measured, persisted))
    })?;

    if let Some(p) = &a.out {
        let mut csv = String::from("timestamp,predicted_wh,measured_wh\n");
        for (t, pred, meas, _) in &rows {
            let _ = writeln!(csv, "{},{},{}", Step::Hourly.format_timestamp(t), pred, meas);
        }
        fs::write(p, csv).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
    }

    // Night and grazing-sun hours carry no energy on either side; score the
    // hours where the plant produces something.
    let lit: Vec<_> = rows.iter().filter(|r| r.2 > 0.0).collect();
    let measured: Vec<f64> = lit.iter().map(|r| r.2).collect();
    let period = format!(
        "{}..{}",
        Step::Hourly.format_timestamp(&rows[0].0),
        Step::Hourly.format_timestamp(&rows[rows.len() - 1].0)
    );
    let mut reports = Vec::new();
    for (label, pick) in [("pv_ann", 1usize), ("pv_persistence", 3)] {
        let predicted: Vec<f64> = lit
            .iter()
            .map(|r| if pick == 1 { r.1 } else { r.3 })
            .collect();
        reports.push(EvaluationReport::compute(
            ReportLabels {
                site: site.name.clone(),
                period: period.clone(),
                predictor: label.into(),
                step: "hourly_energy_wh".into(),
            },
            &measured,
            &predicted,
            a.seed,
        )?);
    }
    if let Some(p) = &a.report {
        metrics::write_reports(&reports, p)?;
    }
    let plant_json = serde_json::to_string(&plant).expect("plant serializes");
    Ok(format!("plant: {plant_json}\n{}", reports_csv(&reports)))
}

pub fn cmd_stationarize(a: &StationarizeArgs) -> CliResult<String> {
    let site = SiteConfig::load(&a.site)?;
    let series = load_series(&a.series, &site, None)?;
    let st = stationarize::detrend(&series)?;
    timeseries::write_stationarized_csv(&st, &a.out)?;
    let masked = st.daylight.iter().filter(|d| !**d).count();
    Ok(format!(
        "wrote {} {} ratios ({} masked) to {}\n",
        st.len(),
        st.step,
        masked,
        a.out.display()
    ))
}
