//! Seeded synthetic hourly irradiation: clear-sky curve times an AR(1)
//! cloud attenuation.

use chrono::{Months, NaiveDate, NaiveDateTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, SiteConfig};
use crate::par;
use crate::timeseries::{IrradiationSeries, Step};

pub const ATTENUATION_FLOOR: f64 = 0.05;
pub const ATTENUATION_CEIL: f64 = 1.0;

/// AR(1) attenuation a(t) = mean + x(t), x(t) = phi·x(t−1) + sigma·ε(t),
/// clipped to `[0.05, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudParams {
    pub phi: f64,
    pub sigma: f64,
    pub mean_attenuation: f64,
}

impl CloudParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| {
            Err(Error::InvalidConfig {
                field: field.into(),
                reason: reason.into(),
            })
        };
        if !(0.0..1.0).contains(&self.phi) {
            return bad("phi", "must be in [0, 1)");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma", "must be >= 0");
        }
        if !(self.mean_attenuation > 0.0 && self.mean_attenuation <= 1.0) {
            return bad("mean_attenuation", "must be in (0, 1]");
        }
        Ok(())
    }
}

/// Clear-sky irradiation of one hour, Wh/m²: Haurwitz GHI at the middle of
/// the hour times one hour.
pub fn clear_sky_hourly(site: &SiteConfig, hour_start: &NaiveDateTime) -> f64 {
    geometry::clear_sky_ghi(site, &geometry::hour_midpoint(hour_start))
}

/// Hourly series covering `n_years` calendar years from midnight of `start`.
pub fn generate(
    site: &SiteConfig,
    start: NaiveDate,
    n_years: u32,
    cloud: CloudParams,
    seed: u64,
) -> Result<IrradiationSeries> {
    if n_years == 0 {
        return Err(Error::InvalidConfig {
            field: "years".into(),
            reason: "must be at least 1".into(),
        });
    }
    cloud.validate()?;
    site.validate()?;
    let end = start
        .checked_add_months(Months::new(12 * n_years))
        .ok_or_else(|| Error::InvalidArgument("end date out of range".into()))?;
    let hours = (end - start).num_days() as usize * 24;
    let t0 = start.and_hms_opt(0, 0, 0).unwrap();
    let step = Step::Hourly.duration();

    let clear = par::map_range(hours, |i| clear_sky_hourly(site, &(t0 + step * i as i32)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 0.0;
    let values = clear
        .into_iter()
        .map(|c| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            x = cloud.phi * x + cloud.sigma * eps;
            let a = (cloud.mean_attenuation + x).clamp(ATTENUATION_FLOOR, ATTENUATION_CEIL);
            Some(c * a)
        })
        .collect();
    IrradiationSeries::new(site.clone(), Step::Hourly, t0, values)
}

/// Sums each run of 24 hourly values into a daily value. A day containing a
/// GAP becomes a GAP.
pub fn aggregate_daily(hourly: &IrradiationSeries) -> Result<IrradiationSeries> {
    if hourly.step != Step::Hourly {
        return Err(Error::InvalidArgument("aggregate_daily needs an hourly series".into()));
    }
    if hourly.start.time() != chrono::NaiveTime::MIN || !hourly.len().is_multiple_of(24) {
        return Err(Error::InvalidArgument(format!(
            "partial day: series starts at {} with {} hours",
            hourly.start,
            hourly.len()
        )));
    }
    let days = hourly
        .values()
        .chunks(24)
        .map(|day| day.iter().copied().sum::<Option<f64>>())
        .collect();
    IrradiationSeries::new(hourly.site.clone(), Step::Daily, hourly.start, days)
}
