//! Irradiation series at hourly or daily step, with explicit gaps.
//!
//! A series is a start instant plus one optional value per step; `None` is a
//! GAP. Timestamps are never stored per row, so the "exactly one step apart"
//! invariant holds by construction once a series exists.
//!
//! CSV contract: header `timestamp,ghi_wh_m2`; timestamps `YYYY-MM-DDTHH:MM`
//! (hourly, start of the hour) or `YYYY-MM-DD` (daily); a GAP is an empty
//! value field.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SiteConfig;

pub const HOURLY_FORMAT: &str = "%Y-%m-%dT%H:%M";
pub const DAILY_FORMAT: &str = "%Y-%m-%d";
pub const CSV_HEADER: [&str; 2] = ["timestamp", "ghi_wh_m2"];

/// Physical sanity bound for one hourly value, Wh/m².
pub const HOURLY_MAX_WH_M2: f64 = 1413.0;
/// Physical sanity bound for one daily value, Wh/m².
pub const DAILY_MAX_WH_M2: f64 = 12000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Hourly,
    Daily,
}

impl Step {
    pub fn duration(self) -> Duration {
        match self {
            Step::Hourly => Duration::hours(1),
            Step::Daily => Duration::days(1),
        }
    }

    pub fn upper_bound(self) -> f64 {
        match self {
            Step::Hourly => HOURLY_MAX_WH_M2,
            Step::Daily => DAILY_MAX_WH_M2,
        }
    }

    pub fn format_timestamp(self, t: &NaiveDateTime) -> String {
        match self {
            Step::Hourly => t.format(HOURLY_FORMAT).to_string(),
            Step::Daily => t.format(DAILY_FORMAT).to_string(),
        }
    }

    pub fn parse_timestamp(self, s: &str) -> std::result::Result<NaiveDateTime, String> {
        match self {
            Step::Hourly => {
                let t = NaiveDateTime::parse_from_str(s, HOURLY_FORMAT)
                    .map_err(|e| format!("expected YYYY-MM-DDTHH:MM ({e})"))?;
                if t.minute() != 0 {
                    return Err("hourly timestamps must fall on the hour".into());
                }
                Ok(t)
            }
            Step::Daily => NaiveDate::parse_from_str(s, DAILY_FORMAT)
                .map(|d| d.and_hms_opt(0, 0, 0).unwrap())
                .map_err(|e| format!("expected YYYY-MM-DD ({e})")),
        }
    }

    fn is_aligned(self, t: &NaiveDateTime) -> bool {
        match self {
            Step::Hourly => t.minute() == 0 && t.second() == 0 && t.nanosecond() == 0,
            Step::Daily => t.num_seconds_from_midnight() == 0 && t.nanosecond() == 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Step::Hourly => "hourly",
            Step::Daily => "daily",
        }
    }
}

impl std::fmt::Display for Step {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Step {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hourly" => Ok(Step::Hourly),
            "daily" => Ok(Step::Daily),
            other => Err(Error::InvalidArgument(format!(
                "unknown step `{other}` (expected hourly or daily)"
            ))),
        }
    }
}

/// Measured or synthetic global horizontal irradiation, Wh/m² per step.
#[derive(Debug, Clone, PartialEq)]
pub struct IrradiationSeries {
    pub site: SiteConfig,
    pub step: Step,
    pub start: NaiveDateTime,
    values: Vec<Option<f64>>,
}

impl IrradiationSeries {
    pub fn new(
        site: SiteConfig,
        step: Step,
        start: NaiveDateTime,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if !step.is_aligned(&start) {
            return Err(Error::InvalidArgument(format!(
                "start {start} is not aligned to the {step} step"
            )));
        }
        let upper = step.upper_bound();
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = *v {
                if !(0.0..=upper).contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "value {v} at index {i} outside [0, {upper}] Wh/m²"
                    )));
                }
            }
        }
        Ok(IrradiationSeries {
            site,
            step,
            start,
            values,
        })
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + self.step.duration() * i as i32
    }

    pub fn timestamps(&self) -> impl Iterator<Item = NaiveDateTime> + '_ {
        (0..self.len()).map(|i| self.timestamp(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDateTime, Option<f64>)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.timestamp(i), *v))
    }

    /// Position of `instant` in the series, if it is one of its timestamps.
    pub fn index_of(&self, instant: &NaiveDateTime) -> Option<usize> {
        let delta = *instant - self.start;
        let step = self.step.duration();
        let secs = delta.num_seconds();
        let step_secs = step.num_seconds();
        if secs < 0 || secs % step_secs != 0 || delta.subsec_nanos() != 0 {
            return None;
        }
        let i = (secs / step_secs) as usize;
        (i < self.len()).then_some(i)
    }

    pub fn get(&self, instant: &NaiveDateTime) -> Option<Option<f64>> {
        self.index_of(instant).map(|i| self.values[i])
    }

    /// Sub-series over `range`, keeping timestamps.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        IrradiationSeries {
            site: self.site.clone(),
            step: self.step,
            start: self.timestamp(range.start),
            values: self.values[range].to_vec(),
        }
    }

    pub fn gap_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// Dimensionless ratio series produced by detrending.
///
/// `values[i]` is `None` at GAPs and, for hourly series, where the sun is
/// below the daylight threshold (`daylight[i] == false`).
#[derive(Debug, Clone, PartialEq)]
pub struct StationarizedSeries {
    pub site: SiteConfig,
    pub step: Step,
    pub start: NaiveDateTime,
    pub values: Vec<Option<f64>>,
    pub daylight: Vec<bool>,
}

impl StationarizedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + self.step.duration() * i as i32
    }

    /// Unmasked, non-GAP values in chronological order.
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|v| *v)
    }
}

pub fn load_csv(path: impl AsRef<Path>, site: &SiteConfig, step: Step) -> Result<IrradiationSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(file);
    let parse_err = |line: u64, column: &str, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        reason,
    };

    let headers = reader.headers().map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(parse_err(
            1,
            "header",
            format!("expected `{}`", CSV_HEADER.join(",")),
        ));
    }

    let upper = step.upper_bound();
    let mut start: Option<NaiveDateTime> = None;
    let mut prev: Option<NaiveDateTime> = None;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(parse_err(
                line,
                "row",
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let t = step
            .parse_timestamp(&record[0])
            .map_err(|reason| parse_err(line, "timestamp", reason))?;
        let raw = &record[1];
        let value = if raw.is_empty() {
            None
        } else {
            let v: f64 = raw
                .parse()
                .map_err(|e| parse_err(line, "ghi_wh_m2", format!("`{raw}`: {e}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, "ghi_wh_m2", format!("`{raw}` is not finite")));
            }
            if !(0.0..=upper).contains(&v) {
                return Err(Error::Bound {
                    path: path.to_path_buf(),
                    line,
                    value: v,
                    lower: 0.0,
                    upper,
                });
            }
            Some(v)
        };
        if let Some(p) = prev {
            if t != p + step.duration() {
                return Err(Error::NonMonotone {
                    path: path.to_path_buf(),
                    line,
                    previous: p,
                    found: t,
                });
            }
        } else {
            start = Some(t);
        }
        prev = Some(t);
        values.push(value);
    }
    let start = start.ok_or_else(|| parse_err(2, "row", "no data rows".into()))?;
    IrradiationSeries::new(site.clone(), step, start, values)
}

/// Guess the step of a series CSV from the shape of its first timestamp.
pub fn detect_step(path: impl AsRef<Path>) -> Result<Step> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let _header = lines.next();
    let first = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 2,
                column: "row".into(),
                reason: "no data rows".into(),
            })
        }
    };
    let ts = first.split(',').next().unwrap_or("");
    Ok(if ts.contains('T') {
        Step::Hourly
    } else {
        Step::Daily
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_csv(series: &IrradiationSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(CSV_HEADER).map_err(csv_err(path))?;
    for (t, v) in series.iter() {
        w.write_record([series.step.format_timestamp(&t), fmt_opt(v)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Debug dump of a stationarized series: `timestamp,ratio,daylight`.
pub fn write_stationarized_csv(series: &StationarizedSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["timestamp", "ratio", "daylight"])
        .map_err(csv_err(path))?;
    for (i, (v, day)) in series.values.iter().zip(&series.daylight).enumerate() {
        let t = series.timestamp(i);
        w.write_record([
            series.step.format_timestamp(&t),
            fmt_opt(*v),
            (if *day { "1" } else { "0" }).to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Chronological split: the first ⌊fraction·N⌋ points, then the rest.
pub fn split_train_test(
    series: &IrradiationSeries,
    fraction: f64,
) -> Result<(IrradiationSeries, IrradiationSeries)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction {fraction} not in (0, 1)"
        )));
    }
    let n = series.len();
    if n < 10 {
        return Err(Error::SeriesTooShort { len: n, min: 10 });
    }
    // The epsilon absorbs products such as 0.29·100 = 28.999999999999996.
    let k = ((fraction * n as f64) + 1e-9).floor() as usize;
    Ok((series.slice(0..k), series.slice(k..n)))
}
