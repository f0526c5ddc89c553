//! Multiplicative detrending of irradiation series and min-max scaling.
//!
//! Daily values are divided by the daily extraterrestrial irradiation H0.
//! Hourly values are divided by the hourly extraterrestrial irradiation AND
//! by the sine of the solar altitude at the middle of the hour. Hours with the
//! sun below [`DAYLIGHT_THRESHOLD_DEG`] are masked.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, SiteConfig};
use crate::par;
use crate::timeseries::{IrradiationSeries, StationarizedSeries, Step};

/// Minimum solar altitude (at the hour midpoint) for an hourly value to be
/// stationarized.
pub const DAYLIGHT_THRESHOLD_DEG: f64 = 5.0;

/// Hourly divisor I0_h·sin h, or `None` if the hour is masked.
pub fn hourly_divisor(site: &SiteConfig, hour_start: &NaiveDateTime) -> Option<f64> {
    let mid = geometry::hour_midpoint(hour_start);
    let sin_h = geometry::solar_position(site, &mid).sin_altitude();
    if sin_h < DAYLIGHT_THRESHOLD_DEG.to_radians().sin() {
        return None;
    }
    Some(geometry::extraterrestrial_hourly(site, hour_start) * sin_h)
}

pub fn is_daylight(site: &SiteConfig, hour_start: &NaiveDateTime) -> bool {
    hourly_divisor(site, hour_start).is_some()
}

fn daily_divisor(site: &SiteConfig, day: &NaiveDateTime) -> Result<f64> {
    let h0 = geometry::extraterrestrial_daily(site, day.date());
    if h0 > 0.0 {
        Ok(h0)
    } else {
        Err(Error::UnsupportedSite {
            site: site.name.clone(),
            date: day.date(),
        })
    }
}

/// k(t) = H(t) / H0(t).
pub fn detrend_daily(series: &IrradiationSeries) -> Result<StationarizedSeries> {
    if series.step != Step::Daily {
        return Err(Error::InvalidArgument(
            "detrend_daily needs a daily series".into(),
        ));
    }
    let values = series.values();
    let ratios = par::try_map_range(series.len(), |i| {
        let h0 = daily_divisor(&series.site, &series.timestamp(i))?;
        Ok(values[i].map(|v| v / h0))
    })?;
    Ok(StationarizedSeries {
        site: series.site.clone(),
        step: Step::Daily,
        start: series.start,
        daylight: vec![true; ratios.len()],
        values: ratios,
    })
}

/// r(t) = I(t) / (I0_h(t) · sin h(t)), masked below the daylight threshold.
pub fn detrend_hourly(series: &IrradiationSeries) -> Result<StationarizedSeries> {
    if series.step != Step::Hourly {
        return Err(Error::InvalidArgument(
            "detrend_hourly needs an hourly series".into(),
        ));
    }
    let values = series.values();
    let out = par::map_range(series.len(), |i| {
        match hourly_divisor(&series.site, &series.timestamp(i)) {
            Some(d) => (values[i].map(|v| v / d), true),
            None => (None, false),
        }
    });
    let (values, daylight) = out.into_iter().unzip();
    Ok(StationarizedSeries {
        site: series.site.clone(),
        step: Step::Hourly,
        start: series.start,
        values,
        daylight,
    })
}

pub fn detrend(series: &IrradiationSeries) -> Result<StationarizedSeries> {
    match series.step {
        Step::Daily => detrend_daily(series),
        Step::Hourly => detrend_hourly(series),
    }
}

/// Inverse of the detrending at one instant: multiply back by the divisor.
pub fn retrend(value: f64, site: &SiteConfig, instant: &NaiveDateTime, step: Step) -> Result<f64> {
    match step {
        Step::Daily => Ok(value * daily_divisor(site, instant)?),
        Step::Hourly => hourly_divisor(site, instant)
            .map(|d| value * d)
            .ok_or(Error::MaskedInstant(*instant)),
    }
}

/// Min-max statistics of a training site's stationarized series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: f64,
    pub max: f64,
}

impl NormStats {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::NonFinite(format!("norm stats [{min}, {max}]")));
        }
        if min >= max {
            return Err(Error::InvalidArgument(format!(
                "norm stats need min < max, got [{min}, {max}]"
            )));
        }
        Ok(NormStats { min, max })
    }

    /// (v − min)/(max − min). Not clipped: values from another site may land
    /// outside `[0, 1]`.
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    pub fn invert(&self, u: f64) -> f64 {
        u * (self.max - self.min) + self.min
    }
}

pub fn fit_minmax(series: &StationarizedSeries) -> Result<NormStats> {
    let mut it = series.valid_values();
    let first = it.next().ok_or(Error::ConstantSeries)?;
    let (min, max) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if min < max {
        NormStats::new(min, max)
    } else {
        Err(Error::ConstantSeries)
    }
}

pub fn apply_minmax(value: f64, stats: &NormStats) -> f64 {
    stats.apply(value)
}

pub fn invert_minmax(value: f64, stats: &NormStats) -> f64 {
    stats.invert(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDate};
    use proptest::prelude::*;

    fn day(y: i32, m: u32, d: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, d)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    fn stationarized(values: Vec<Option<f64>>) -> StationarizedSeries {
        StationarizedSeries {
            site: SiteConfig::ajaccio(),
            step: Step::Daily,
            start: day(2001, 1, 1),
            daylight: vec![true; values.len()],
            values,
        }
    }

    #[test]
    fn identity_and_zero_daily() {
        let site = SiteConfig::ajaccio();
        let start = day(2001, 1, 1);
        let h0: Vec<Option<f64>> = (0..400)
            .map(|i| {
                let t = start + Duration::days(i);
                Some(geometry::extraterrestrial_daily(&site, t.date()))
            })
            .collect();
        let s = IrradiationSeries::new(site.clone(), Step::Daily, start, h0).unwrap();
        let st = detrend_daily(&s).unwrap();
        assert!(st.values.iter().all(|v| *v == Some(1.0)));

        let zeros = IrradiationSeries::new(site, Step::Daily, start, vec![Some(0.0), None]).unwrap();
        let st = detrend_daily(&zeros).unwrap();
        assert_eq!(st.values, vec![Some(0.0), None]);
    }

    #[test]
    fn polar_site_is_unsupported() {
        let polar = SiteConfig::new("polar", 80.0, 0.0, 0.0, 0.0).unwrap();
        let s = IrradiationSeries::new(polar, Step::Daily, day(2001, 12, 1), vec![Some(0.0); 30])
            .unwrap();
        assert!(matches!(detrend_daily(&s), Err(Error::UnsupportedSite { .. })));
    }

    #[test]
    fn wrong_step_rejected() {
        let s = IrradiationSeries::new(SiteConfig::ajaccio(), Step::Daily, day(2001, 1, 1), vec![Some(1.0)])
            .unwrap();
        assert!(detrend_hourly(&s).is_err());
    }

    #[test]
    fn hourly_masks_night_and_keeps_gaps() {
        let site = SiteConfig::ajaccio();
        let start = day(2001, 6, 15);
        let mut values: Vec<Option<f64>> = (0..24)
            .map(|h| {
                let t = start + Duration::hours(h);
                Some(hourly_divisor(&site, &t).unwrap_or(0.0))
            })
            .collect();
        values[12] = None;
        let s = IrradiationSeries::new(site, Step::Hourly, start, values).unwrap();
        let st = detrend_hourly(&s).unwrap();
        assert!(!st.daylight[0] && st.values[0].is_none());
        assert!(st.daylight[12] && st.values[12].is_none());
        for h in 0..24 {
            if st.daylight[h] && h != 12 {
                assert_eq!(st.values[h], Some(1.0));
            }
        }
    }

    #[test]
    fn retrend_masked_instant_fails() {
        let site = SiteConfig::ajaccio();
        let night = day(2001, 6, 15);
        assert!(matches!(
            retrend(0.5, &site, &night, Step::Hourly),
            Err(Error::MaskedInstant(_))
        ));
        let d = day(2001, 6, 15);
        assert_eq!(
            retrend(1.0, &site, &d, Step::Daily).unwrap(),
            geometry::extraterrestrial_daily(&site, d.date())
        );
    }

    #[test]
    fn minmax_basics() {
        let st = stationarized(vec![Some(0.2), Some(0.8), None, Some(0.5)]);
        let n = fit_minmax(&st).unwrap();
        assert_eq!((n.min, n.max), (0.2, 0.8));
        assert_eq!(n.apply(0.2), 0.0);
        assert_eq!(n.apply(0.8), 1.0);

        let n = NormStats::new(0.0, 1.0).unwrap();
        assert_eq!(n.apply(1.2), 1.2);

        assert!(matches!(
            fit_minmax(&stationarized(vec![Some(0.5); 4])),
            Err(Error::ConstantSeries)
        ));
        assert!(matches!(
            fit_minmax(&stationarized(vec![None, None])),
            Err(Error::ConstantSeries)
        ));
    }

    proptest! {
        #[test]
        fn minmax_round_trip(min in -5.0f64..5.0, span in 0.01f64..10.0, v in -20.0f64..20.0) {
            let n = NormStats::new(min, min + span).unwrap();
            prop_assert!((n.invert(n.apply(v)) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }

        #[test]
        fn minmax_strictly_monotone(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            prop_assume!(a < b);
            let n = NormStats::new(0.1, 0.9).unwrap();
            prop_assert!(n.apply(a) < n.apply(b));
        }

        #[test]
        fn retrend_inverts_detrend_hourly(offset in 0i64..(24 * 365), vals in proptest::collection::vec(0.0f64..1000.0, 48)) {
            let site = SiteConfig::bastia();
            let start = day(2003, 1, 1) + Duration::hours(offset);
            let s = IrradiationSeries::new(site.clone(), Step::Hourly, start,
                vals.iter().map(|v| Some(*v)).collect()).unwrap();
            let st = detrend_hourly(&s).unwrap();
            for i in 0..s.len() {
                let t = s.timestamp(i);
                if let Some(r) = st.values[i] {
                    let back = retrend(r, &site, &t, Step::Hourly).unwrap();
                    let orig = vals[i];
                    prop_assert!((back - orig).abs() <= 1e-9 * orig.abs().max(1e-300));
                } else {
                    prop_assert!(!st.daylight[i]);
                    prop_assert!(!is_daylight(&site, &t));
                }
            }
        }

        #[test]
        fn retrend_inverts_detrend_daily(offset in 0i64..3650, vals in proptest::collection::vec(0.0f64..9000.0, 30)) {
            let site = SiteConfig::corte();
            let start = day(1995, 1, 1) + Duration::days(offset);
            let s = IrradiationSeries::new(site.clone(), Step::Daily, start,
                vals.iter().map(|v| Some(*v)).collect()).unwrap();
            let st = detrend_daily(&s).unwrap();
            for i in 0..s.len() {
                let back = retrend(st.values[i].unwrap(), &site, &s.timestamp(i), Step::Daily).unwrap();
                prop_assert!((back - vals[i]).abs() <= 1e-9 * vals[i].abs().max(1e-300));
            }
        }
    }
}
