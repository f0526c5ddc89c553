//! Solar geometry, extraterrestrial irradiation and the clear-sky model.
//!
//! All angles are radians unless a name says `_deg`. Instants are legal local
//! time at a fixed UTC offset (no daylight saving); they are converted to true
//! solar time through the offset, the longitude and the equation of time.

use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Solar constant, W/m².
pub const SOLAR_CONSTANT: f64 = 1367.0;

/// Upper bound on one hour of horizontal extraterrestrial irradiation, Wh/m²
/// (solar constant at maximum eccentricity).
pub const MAX_HOURLY_EXTRATERRESTRIAL: f64 = 1413.0;

/// Maximum of the declination formula, 23.45°.
pub const MAX_DECLINATION: f64 = 23.45 * PI / 180.0;

/// Share of clear-sky GHI treated as isotropic diffuse when transposing.
pub const CLEAR_SKY_DIFFUSE_FRACTION: f64 = 0.15;

/// Sub-steps per hour for extraterrestrial integration.
pub const HOURLY_SUBSTEPS: u32 = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    /// Legal time minus UTC, hours.
    pub utc_offset_h: f64,
}

impl SiteConfig {
    pub fn new(
        name: impl Into<String>,
        latitude_deg: f64,
        longitude_deg: f64,
        altitude_m: f64,
        utc_offset_h: f64,
    ) -> Result<Self> {
        let site = SiteConfig {
            name: name.into(),
            latitude_deg,
            longitude_deg,
            altitude_m,
            utc_offset_h,
        };
        site.validate()?;
        Ok(site)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| {
            Err(Error::InvalidConfig {
                field: field.to_string(),
                reason,
            })
        };
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return bad("latitude_deg", format!("{} not in [-90, 90]", self.latitude_deg));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return bad(
                "longitude_deg",
                format!("{} not in [-180, 180]", self.longitude_deg),
            );
        }
        if !(self.altitude_m >= 0.0 && self.altitude_m.is_finite()) {
            return bad("altitude_m", format!("{} must be >= 0", self.altitude_m));
        }
        if !(-14.0..=14.0).contains(&self.utc_offset_h) {
            return bad(
                "utc_offset_h",
                format!("{} not in [-14, 14]", self.utc_offset_h),
            );
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let site: SiteConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig {
            field: "site".into(),
            reason: e.to_string(),
        })?;
        site.validate()?;
        Ok(site)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn latitude_rad(&self) -> f64 {
        self.latitude_deg.to_radians()
    }

    /// Ajaccio, 41°55'N 8°48'E, seaside.
    pub fn ajaccio() -> Self {
        SiteConfig {
            name: "ajaccio".into(),
            latitude_deg: 41.0 + 55.0 / 60.0,
            longitude_deg: 8.0 + 48.0 / 60.0,
            altitude_m: 0.0,
            utc_offset_h: 1.0,
        }
    }

    /// Bastia, 42°33'N 9°29'E, seaside.
    pub fn bastia() -> Self {
        SiteConfig {
            name: "bastia".into(),
            latitude_deg: 42.0 + 33.0 / 60.0,
            longitude_deg: 9.0 + 29.0 / 60.0,
            altitude_m: 0.0,
            utc_offset_h: 1.0,
        }
    }

    /// Corte, 42°30'N 9°15'E, 486 m.
    pub fn corte() -> Self {
        SiteConfig {
            name: "corte".into(),
            latitude_deg: 42.5,
            longitude_deg: 9.25,
            altitude_m: 486.0,
            utc_offset_h: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarPosition {
    pub declination_rad: f64,
    /// Zero at true solar noon, positive in the afternoon.
    pub hour_angle_rad: f64,
    pub altitude_rad: f64,
    pub zenith_rad: f64,
}

impl SolarPosition {
    /// Position for a latitude, declination and hour angle.
    pub fn from_angles(latitude_rad: f64, declination_rad: f64, hour_angle_rad: f64) -> Self {
        let sin_h = sin_altitude(latitude_rad, declination_rad, hour_angle_rad);
        let altitude_rad = sin_h.asin();
        SolarPosition {
            declination_rad,
            hour_angle_rad,
            altitude_rad,
            zenith_rad: PI / 2.0 - altitude_rad,
        }
    }

    pub fn sin_altitude(&self) -> f64 {
        self.altitude_rad.sin()
    }
}

fn check_day(day_of_year: u32) -> Result<()> {
    if (1..=366).contains(&day_of_year) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "day of year {day_of_year} not in 1..=366"
        )))
    }
}

/// Cooper's declination, δ = 23.45°·sin(2π(284 + n)/365).
pub fn declination(day_of_year: u32) -> Result<f64> {
    check_day(day_of_year)?;
    Ok(declination_unchecked(day_of_year))
}

fn declination_unchecked(n: u32) -> f64 {
    MAX_DECLINATION * (2.0 * PI * (284.0 + n as f64) / 365.0).sin()
}

/// Sun-earth distance correction E0 = 1 + 0.033·cos(2πn/365).
pub fn eccentricity(day_of_year: u32) -> f64 {
    1.0 + 0.033 * (2.0 * PI * day_of_year as f64 / 365.0).cos()
}

/// Equation of time in minutes (Spencer's Fourier series).
pub fn equation_of_time_min(day_of_year: u32) -> f64 {
    let b = 2.0 * PI * (day_of_year as f64 - 1.0) / 365.0;
    229.18
        * (0.000075 + 0.001868 * b.cos()
            - 0.032077 * b.sin()
            - 0.014615 * (2.0 * b).cos()
            - 0.04089 * (2.0 * b).sin())
}

/// Shift (hours) to add to legal clock time to get true solar time.
fn solar_time_shift_h(site: &SiteConfig, day_of_year: u32) -> f64 {
    -site.utc_offset_h + site.longitude_deg / 15.0 + equation_of_time_min(day_of_year) / 60.0
}

fn clock_hours(instant: &NaiveDateTime) -> f64 {
    instant.num_seconds_from_midnight() as f64 / 3600.0
        + instant.nanosecond() as f64 / 3.6e12
}

/// True solar time in hours since the local calendar midnight; may fall
/// slightly outside `[0, 24)`.
pub fn solar_time_hours(site: &SiteConfig, instant: &NaiveDateTime) -> f64 {
    clock_hours(instant) + solar_time_shift_h(site, instant.ordinal())
}

/// Legal instant at which true solar time on `date` reads `solar_hours`.
pub fn solar_to_legal(site: &SiteConfig, date: NaiveDate, solar_hours: f64) -> NaiveDateTime {
    let legal_h = solar_hours - solar_time_shift_h(site, date.ordinal());
    let nanos = (legal_h * 3.6e12).round() as i64;
    date.and_hms_opt(0, 0, 0).unwrap() + Duration::nanoseconds(nanos)
}

pub fn solar_noon(site: &SiteConfig, date: NaiveDate) -> NaiveDateTime {
    solar_to_legal(site, date, 12.0)
}

pub fn hour_angle(solar_hours: f64) -> f64 {
    (solar_hours - 12.0) * 15f64.to_radians()
}

/// sin h = sin φ sin δ + cos φ cos δ cos ω
pub fn sin_altitude(latitude_rad: f64, declination_rad: f64, hour_angle_rad: f64) -> f64 {
    latitude_rad.sin() * declination_rad.sin()
        + latitude_rad.cos() * declination_rad.cos() * hour_angle_rad.cos()
}

pub fn solar_position(site: &SiteConfig, instant: &NaiveDateTime) -> SolarPosition {
    let n = instant.ordinal();
    SolarPosition::from_angles(
        site.latitude_rad(),
        declination_unchecked(n),
        hour_angle(solar_time_hours(site, instant)),
    )
}

/// Instantaneous extraterrestrial irradiance on a horizontal plane, W/m².
pub fn extraterrestrial_irradiance(site: &SiteConfig, instant: &NaiveDateTime) -> f64 {
    let s = solar_position(site, instant).sin_altitude();
    SOLAR_CONSTANT * eccentricity(instant.ordinal()) * s.max(0.0)
}

/// Horizontal extraterrestrial irradiation over `[hour_start, hour_start + 1h)`,
/// Wh/m², integrated with a one-minute midpoint rule so that sunrise and
/// sunset hours only count the minutes the sun is up.
pub fn extraterrestrial_hourly(site: &SiteConfig, hour_start: &NaiveDateTime) -> f64 {
    let n = hour_start.ordinal();
    let lat = site.latitude_rad();
    let decl = declination_unchecked(n);
    let a = lat.sin() * decl.sin();
    let b = lat.cos() * decl.cos();
    let start_h = solar_time_hours(site, hour_start);
    let dt_h = 1.0 / HOURLY_SUBSTEPS as f64;
    let sum: f64 = (0..HOURLY_SUBSTEPS)
        .map(|k| {
            let w = hour_angle(start_h + (k as f64 + 0.5) * dt_h);
            (a + b * w.cos()).max(0.0)
        })
        .sum();
    SOLAR_CONSTANT * eccentricity(n) * sum * dt_h
}

/// Sunset hour angle ωs, clamped to `[0, π]` for polar night and day.
pub fn sunset_hour_angle(latitude_rad: f64, declination_rad: f64) -> f64 {
    let c = -latitude_rad.tan() * declination_rad.tan();
    c.clamp(-1.0, 1.0).acos()
}

/// Daily horizontal extraterrestrial irradiation H0, Wh/m²:
/// (24/π)·Isc·E0·(cos φ cos δ sin ωs + ωs sin φ sin δ).
pub fn extraterrestrial_daily(site: &SiteConfig, day: NaiveDate) -> f64 {
    let n = day.ordinal();
    let lat = site.latitude_rad();
    let decl = declination_unchecked(n);
    let ws = sunset_hour_angle(lat, decl);
    let h0 = 24.0 / PI
        * SOLAR_CONSTANT
        * eccentricity(n)
        * (lat.cos() * decl.cos() * ws.sin() + ws * lat.sin() * decl.sin());
    h0.max(0.0)
}

/// Haurwitz clear-sky GHI for a given sine of solar altitude, W/m².
pub fn haurwitz(sin_altitude: f64) -> f64 {
    if sin_altitude <= 0.0 {
        0.0
    } else {
        1098.0 * sin_altitude * (-0.057 / sin_altitude).exp()
    }
}

pub fn clear_sky_ghi(site: &SiteConfig, instant: &NaiveDateTime) -> f64 {
    let pos = solar_position(site, instant);
    if pos.altitude_rad <= 0.0 {
        return 0.0;
    }
    haurwitz(pos.sin_altitude())
}

/// Cosine of the incidence angle on a plane of tilt β and azimuth γ
/// (0 = south, positive west).
pub fn incidence_cosine(
    latitude_rad: f64,
    declination_rad: f64,
    hour_angle_rad: f64,
    tilt_rad: f64,
    azimuth_rad: f64,
) -> f64 {
    let (sd, cd) = declination_rad.sin_cos();
    let (sp, cp) = latitude_rad.sin_cos();
    let (sb, cb) = tilt_rad.sin_cos();
    let (sg, cg) = azimuth_rad.sin_cos();
    let (sw, cw) = hour_angle_rad.sin_cos();
    sd * sp * cb - sd * cp * sb * cg + cd * cp * cb * cw + cd * sp * sb * cg * cw + cd * sb * sg * sw
}

/// Clear-sky irradiance on a tilted plane, W/m². Beam (85 % of clear-sky GHI)
/// is projected geometrically; diffuse (15 %) is isotropic. A horizontal plane
/// returns [`clear_sky_ghi`] unchanged.
pub fn clear_sky_tilted(
    site: &SiteConfig,
    instant: &NaiveDateTime,
    tilt_deg: f64,
    azimuth_deg: f64,
) -> f64 {
    if tilt_deg == 0.0 {
        return clear_sky_ghi(site, instant);
    }
    let pos = solar_position(site, instant);
    if pos.altitude_rad <= 0.0 {
        return 0.0;
    }
    let sin_h = pos.sin_altitude();
    let ghi = haurwitz(sin_h);
    let beam_h = (1.0 - CLEAR_SKY_DIFFUSE_FRACTION) * ghi;
    let diffuse_h = CLEAR_SKY_DIFFUSE_FRACTION * ghi;
    let tilt = tilt_deg.to_radians();
    let cos_inc = incidence_cosine(
        site.latitude_rad(),
        pos.declination_rad,
        pos.hour_angle_rad,
        tilt,
        azimuth_deg.to_radians(),
    );
    beam_h * cos_inc.max(0.0) / sin_h + diffuse_h * (1.0 + tilt.cos()) / 2.0
}

pub fn hour_midpoint(hour_start: &NaiveDateTime) -> NaiveDateTime {
    *hour_start + Duration::minutes(30)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn equator() -> SiteConfig {
        SiteConfig::new("eq", 0.0, 0.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn declination_reference_days() {
        assert!(declination(81).unwrap().abs() < 1e-6);
        assert!((declination(172).unwrap() - 0.40905).abs() < 0.01);
        assert!((declination(355).unwrap() + 0.409).abs() < 0.01);
    }

    #[test]
    fn declination_rejects_bad_days() {
        assert!(matches!(declination(0), Err(Error::InvalidArgument(_))));
        assert!(matches!(declination(367), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn site_validation_names_field() {
        let err = SiteConfig::new("x", 91.0, 0.0, 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "latitude_deg"));
        let err = SiteConfig::new("x", 0.0, 0.0, -1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "altitude_m"));
        let err = SiteConfig::new("x", 0.0, 181.0, 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "longitude_deg"));
    }

    #[test]
    fn noon_altitude_at_equinox() {
        // Day 81 has zero declination.
        let d = NaiveDate::from_yo_opt(2021, 81).unwrap();
        let eq = equator();
        let p = solar_position(&eq, &solar_noon(&eq, d));
        assert!((p.altitude_rad - PI / 2.0).abs() < 0.02);
        assert!((p.zenith_rad - (PI / 2.0 - p.altitude_rad)).abs() < 1e-15);

        let aj = SiteConfig::ajaccio();
        let p = solar_position(&aj, &solar_noon(&aj, d));
        assert!((p.altitude_rad - 0.8392).abs() < 0.02);
    }

    #[test]
    fn night_in_july() {
        let aj = SiteConfig::ajaccio();
        let t = solar_to_legal(&aj, date(2021, 7, 1), 2.0);
        assert!(solar_position(&aj, &t).altitude_rad < 0.0);
    }

    #[test]
    fn polar_night_is_dark() {
        let polar = SiteConfig::new("polar", 80.0, 0.0, 0.0, 0.0).unwrap();
        let d = date(2021, 12, 21);
        assert_eq!(extraterrestrial_daily(&polar, d), 0.0);
        for h in 0..24 {
            let t = d.and_hms_opt(h, 0, 0).unwrap();
            assert_eq!(extraterrestrial_hourly(&polar, &t), 0.0);
        }
    }

    #[test]
    fn equator_equinox_daily_closed_form() {
        // φ = 0, δ = 0: ωs = π/2, so H0 = (24/π)·Isc·E0.
        let d = NaiveDate::from_yo_opt(2021, 81).unwrap();
        let expected = 24.0 / PI * 1367.0 * (1.0 + 0.033 * (2.0 * PI * 81.0 / 365.0).cos());
        let got = extraterrestrial_daily(&equator(), d);
        assert!((got - expected).abs() / expected < 0.01, "{got} vs {expected}");
    }

    #[test]
    fn haurwitz_reference_values() {
        assert_eq!(haurwitz(0.0), 0.0);
        assert_eq!(haurwitz(-0.2), 0.0);
        assert!((haurwitz(1.0) - 1037.2).abs() < 0.1);
        assert!((haurwitz(0.5) - 489.8).abs() < 0.5);
    }

    #[test]
    fn clear_sky_is_zero_at_night() {
        let aj = SiteConfig::ajaccio();
        let t = solar_to_legal(&aj, date(2021, 1, 10), 0.5);
        assert_eq!(clear_sky_ghi(&aj, &t), 0.0);
        assert_eq!(clear_sky_tilted(&aj, &t, 80.0, 0.0), 0.0);
    }

    #[test]
    fn south_facing_noon_incidence() {
        // At solar noon a south-facing plane sees the sun at φ − δ − β.
        let (lat, decl, tilt) = (0.7, 0.3, 1.2);
        let c = incidence_cosine(lat, decl, 0.0, tilt, 0.0);
        assert!((c - (lat - decl - tilt).cos()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn declination_bounded_and_periodic(n in 1u32..=366) {
            let d = declination(n).unwrap();
            prop_assert!(d.abs() <= MAX_DECLINATION + 1e-15);
            if n + 365 <= 366 {
                prop_assert!((declination(n + 365).unwrap() - d).abs() < 1e-12);
            }
        }

        #[test]
        fn altitude_symmetric_about_noon(lat in -1.4f64..1.4, decl in -0.409f64..0.409, w in 0.0f64..PI) {
            let am = SolarPosition::from_angles(lat, decl, -w);
            let pm = SolarPosition::from_angles(lat, decl, w);
            prop_assert!((am.altitude_rad - pm.altitude_rad).abs() < 1e-6);
        }

        #[test]
        fn clear_sky_monotone_in_altitude(a in 0.001f64..1.5, b in 0.001f64..1.5) {
            prop_assume!(a < b);
            prop_assert!(haurwitz(a.sin()) < haurwitz(b.sin()));
        }

        #[test]
        fn hourly_extraterrestrial_is_bounded(
            lat in -89.0f64..89.0, lon in -180.0f64..180.0, ord in 1u32..=365, hour in 0u32..24
        ) {
            let site = SiteConfig::new("p", lat, lon, 0.0, (lon / 15.0).round()).unwrap();
            let t = NaiveDate::from_yo_opt(2021, ord).unwrap().and_hms_opt(hour, 0, 0).unwrap();
            let v = extraterrestrial_hourly(&site, &t);
            prop_assert!((0.0..=MAX_HOURLY_EXTRATERRESTRIAL).contains(&v));
        }
    }
}
