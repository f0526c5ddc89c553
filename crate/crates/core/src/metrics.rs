//! Forecast error statistics: RMSE, nRMSE with a bootstrap 95 % half-width,
//! and Pearson correlation.

use std::fs::File;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const MIN_BOOTSTRAP_SAMPLES: usize = 30;

fn check_pair(measured: &[f64], predicted: &[f64]) -> Result<()> {
    if measured.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: measured.len(),
            right: predicted.len(),
        });
    }
    if measured.len() < 2 {
        return Err(Error::TooFewSamples {
            got: measured.len(),
            need: 2,
        });
    }
    if let Some(v) = measured.iter().chain(predicted).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("metric input {v}")));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn rmse_unchecked(measured: &[f64], predicted: &[f64]) -> f64 {
    let sq: f64 = measured
        .iter()
        .zip(predicted)
        .map(|(m, p)| (p - m) * (p - m))
        .sum();
    (sq / measured.len() as f64).sqrt()
}

pub fn rmse(measured: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(measured, predicted)?;
    Ok(rmse_unchecked(measured, predicted))
}

/// 100·RMSE / mean(measured).
pub fn nrmse(measured: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(measured, predicted)?;
    let m = mean(measured);
    if m <= 0.0 {
        return Err(Error::NonPositiveMean(m));
    }
    Ok(100.0 * rmse_unchecked(measured, predicted) / m)
}

/// Half-width of the 2.5–97.5 percentile interval of nRMSE over
/// [`BOOTSTRAP_RESAMPLES`] resamples of (measured, predicted) index pairs.
///
/// Resample `b` draws from its own ChaCha stream `b` under `seed`, so the
/// result does not depend on how resamples are spread over threads.
pub fn nrmse_ci95(measured: &[f64], predicted: &[f64], seed: u64) -> Result<f64> {
    check_pair(measured, predicted)?;
    let n = measured.len();
    if n < MIN_BOOTSTRAP_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            need: MIN_BOOTSTRAP_SAMPLES,
        });
    }
    let m = mean(measured);
    if m <= 0.0 {
        return Err(Error::NonPositiveMean(m));
    }
    let mut stats = par::map_range(BOOTSTRAP_RESAMPLES, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let mut sq = 0.0;
        let mut sum_m = 0.0;
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let e = predicted[i] - measured[i];
            sq += e * e;
            sum_m += measured[i];
        }
        // A resample of only zero measurements has no defined nRMSE; count
        // it as zero error so the statistic stays finite.
        if sum_m > 0.0 {
            100.0 * (sq / n as f64).sqrt() / (sum_m / n as f64)
        } else {
            0.0
        }
    });
    stats.sort_by(f64::total_cmp);
    Ok((percentile(&stats, 97.5) - percentile(&stats, 2.5)) / 2.0)
}

/// Linear-interpolation percentile of sorted data.
fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let pos = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Pearson correlation coefficient, clamped to `[-1, 1]`.
pub fn correlation(measured: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(measured, predicted)?;
    let mx = mean(measured);
    let my = mean(predicted);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in measured.iter().zip(predicted) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("measured"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("predicted"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub site: String,
    pub period: String,
    pub predictor: String,
    pub step: String,
    pub rmse: f64,
    pub nrmse_pct: f64,
    pub nrmse_ci95_halfwidth: f64,
    /// `None` when either side has zero variance.
    pub cc: Option<f64>,
    pub n: usize,
}

pub const REPORT_HEADER: [&str; 9] = [
    "site",
    "period",
    "predictor",
    "step",
    "rmse_wh_m2",
    "nrmse_pct",
    "nrmse_ic95_pct",
    "cc",
    "n",
];

/// Labels attached to a report row.
#[derive(Debug, Clone)]
pub struct ReportLabels {
    pub site: String,
    pub period: String,
    pub predictor: String,
    pub step: String,
}

impl EvaluationReport {
    /// Computes every statistic. The bootstrap half-width is left at 0 when
    /// there are fewer than [`MIN_BOOTSTRAP_SAMPLES`] pairs.
    pub fn compute(
        labels: ReportLabels,
        measured: &[f64],
        predicted: &[f64],
        seed: u64,
    ) -> Result<Self> {
        let rmse = rmse(measured, predicted)?;
        let nrmse_pct = nrmse(measured, predicted)?;
        let nrmse_ci95_halfwidth = if measured.len() >= MIN_BOOTSTRAP_SAMPLES {
            nrmse_ci95(measured, predicted, seed)?
        } else {
            0.0
        };
        let cc = match correlation(measured, predicted) {
            Ok(r) => Some(r),
            Err(Error::ZeroVariance(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(EvaluationReport {
            site: labels.site,
            period: labels.period,
            predictor: labels.predictor,
            step: labels.step,
            rmse,
            nrmse_pct,
            nrmse_ci95_halfwidth,
            cc,
            n: measured.len(),
        })
    }

    pub fn csv_record(&self) -> [String; 9] {
        [
            self.site.clone(),
            self.period.clone(),
            self.predictor.clone(),
            self.step.clone(),
            self.rmse.to_string(),
            self.nrmse_pct.to_string(),
            self.nrmse_ci95_halfwidth.to_string(),
            self.cc.map(|c| c.to_string()).unwrap_or_default(),
            self.n.to_string(),
        ]
    }
}

pub fn write_reports(reports: &[EvaluationReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    w.write_record(REPORT_HEADER).map_err(err)?;
    for r in reports {
        w.write_record(r.csv_record()).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_cases() {
        let m = [3.0, 4.0];
        assert_eq!(rmse(&m, &m).unwrap(), 0.0);
        assert!((rmse(&m, &[0.0, 0.0]).unwrap() - 3.5355339059327378).abs() < 1e-12);
        let m: Vec<f64> = (0..50).map(|i| i as f64 * 3.0).collect();
        let p: Vec<f64> = m.iter().map(|v| v + 10.0).collect();
        assert!((rmse(&m, &p).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rmse_errors() {
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(rmse(&[1.0], &[1.0]), Err(Error::TooFewSamples { .. })));
        assert!(matches!(rmse(&[1.0, f64::NAN], &[1.0, 2.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn nrmse_cases() {
        let m = [100.0; 10];
        assert_eq!(nrmse(&m, &m).unwrap(), 0.0);
        assert!((nrmse(&m, &[90.0; 10]).unwrap() - 10.0).abs() < 1e-12);
        assert!(matches!(nrmse(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::NonPositiveMean(_))));
    }

    #[test]
    fn correlation_cases() {
        let m = [1.0, 2.0, 3.0];
        assert!((correlation(&m, &m).unwrap() - 1.0).abs() < 1e-12);
        assert!((correlation(&m, &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        let p: Vec<f64> = m.iter().map(|v| 2.5 * v - 7.0).collect();
        assert!((correlation(&m, &p).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(correlation(&m, &[1.0; 3]), Err(Error::ZeroVariance("predicted"))));
    }

    #[test]
    fn bootstrap_needs_thirty_pairs() {
        let m = [1.0; 29];
        assert!(matches!(nrmse_ci95(&m, &m, 0), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn bootstrap_perfect_and_deterministic() {
        let m: Vec<f64> = (0..100).map(|i| 50.0 + (i as f64 * 0.7).sin() * 20.0).collect();
        assert_eq!(nrmse_ci95(&m, &m, 3).unwrap(), 0.0);
        let p: Vec<f64> = m.iter().enumerate().map(|(i, v)| v + (i as f64).cos() * 5.0).collect();
        let a = nrmse_ci95(&m, &p, 3).unwrap();
        assert_eq!(a, nrmse_ci95(&m, &p, 3).unwrap());
        assert!(a > 0.0);
        assert_ne!(a, nrmse_ci95(&m, &p, 4).unwrap());
    }

    #[test]
    fn percentile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 50.0), 2.0);
        assert_eq!(percentile(&v, 12.5), 0.5);
    }

    #[test]
    fn report_row_layout() {
        let m: Vec<f64> = (1..=40).map(|i| i as f64).collect();
        let p: Vec<f64> = m.iter().map(|v| v + 1.0).collect();
        let labels = ReportLabels {
            site: "bastia".into(),
            period: "x".into(),
            predictor: "persistence".into(),
            step: "daily".into(),
        };
        let r = EvaluationReport::compute(labels, &m, &p, 0).unwrap();
        assert_eq!(r.rmse, 1.0);
        assert_eq!(r.n, 40);
        let rec = r.csv_record();
        assert_eq!(rec[0], "bastia");
        assert_eq!(rec[4], "1");
    }
}
