//! Independent reference computations for the integration suites.
//!
//! Nothing here calls the library's geometry, detrending or network code;
//! formulas are re-derived from scratch so they can serve as oracles.

#![allow(dead_code)]

use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use solar_relocate::SiteConfig;

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn at(y: i32, m: u32, d: u32, h: u32) -> NaiveDateTime {
    date(y, m, d).and_hms_opt(h, 0, 0).unwrap()
}

pub fn declination(n: u32) -> f64 {
    (23.45 * PI / 180.0) * (2.0 * PI * (284.0 + n as f64) / 365.0).sin()
}

pub fn e0(n: u32) -> f64 {
    1.0 + 0.033 * (2.0 * PI * n as f64 / 365.0).cos()
}

/// Spencer equation of time, minutes.
pub fn eot_minutes(n: u32) -> f64 {
    let b = 2.0 * PI * (n as f64 - 1.0) / 365.0;
    229.18
        * (0.000075 + 0.001868 * b.cos() - 0.032077 * b.sin() - 0.014615 * (2.0 * b).cos()
            - 0.04089 * (2.0 * b).sin())
}

/// Hour angle (rad) at a legal instant.
pub fn hour_angle(site: &SiteConfig, t: &NaiveDateTime) -> f64 {
    let clock = t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0
        + t.nanosecond() as f64 / 3.6e12;
    let utc = clock - site.utc_offset_h;
    let solar = utc + site.longitude_deg / 15.0 + eot_minutes(t.ordinal()) / 60.0;
    (solar - 12.0) * PI / 12.0
}

pub fn sin_h(site: &SiteConfig, t: &NaiveDateTime) -> f64 {
    let phi = site.latitude_deg * PI / 180.0;
    let d = declination(t.ordinal());
    phi.sin() * d.sin() + phi.cos() * d.cos() * hour_angle(site, t).cos()
}

/// 60 one-minute midpoint substeps of Isc·E0·max(0, sin h), Wh/m².
pub fn hourly_extraterrestrial(site: &SiteConfig, hour_start: &NaiveDateTime) -> f64 {
    let mut sum = 0.0;
    for k in 0..60 {
        let t = *hour_start + Duration::seconds(60 * k + 30);
        sum += 1367.0 * e0(t.ordinal()) * sin_h(site, &t).max(0.0) / 60.0;
    }
    sum
}

pub fn daily_extraterrestrial_by_hours(site: &SiteConfig, day: NaiveDate) -> f64 {
    (0..24)
        .map(|h| hourly_extraterrestrial(site, &day.and_hms_opt(h, 0, 0).unwrap()))
        .sum()
}

pub fn haurwitz(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        1098.0 * s * (-0.057 / s).exp()
    }
}

/// Cosine of incidence from explicit sun and plane-normal vectors in
/// east-north-up coordinates.
pub fn incidence_cosine(site: &SiteConfig, t: &NaiveDateTime, tilt_deg: f64, azimuth_deg: f64) -> f64 {
    let phi = site.latitude_deg.to_radians();
    let d = declination(t.ordinal());
    let w = hour_angle(site, t);
    let sun = [
        -d.cos() * w.sin(),
        phi.cos() * d.sin() - phi.sin() * d.cos() * w.cos(),
        phi.sin() * d.sin() + phi.cos() * d.cos() * w.cos(),
    ];
    let (b, g) = (tilt_deg.to_radians(), azimuth_deg.to_radians());
    let normal = [-b.sin() * g.sin(), -b.sin() * g.cos(), b.cos()];
    sun.iter().zip(normal).map(|(s, n)| s * n).sum()
}

/// Clear-sky tilted irradiance with an 85/15 beam/diffuse split.
pub fn clear_sky_tilted(site: &SiteConfig, t: &NaiveDateTime, tilt_deg: f64, azimuth_deg: f64) -> f64 {
    let s = sin_h(site, t);
    if s <= 0.0 {
        return 0.0;
    }
    let ghi = haurwitz(s);
    let beam_normal = 0.85 * ghi / s;
    beam_normal * incidence_cosine(site, t, tilt_deg, azimuth_deg).max(0.0)
        + 0.15 * ghi * (1.0 + tilt_deg.to_radians().cos()) / 2.0
}

/// Plain sample autocorrelation at `lag` (biased estimator).
pub fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let cov: f64 = (0..n - lag).map(|i| (x[i] - mean) * (x[i + lag] - mean)).sum();
    cov / var
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Prints and asserts one acceptance line.
pub fn criterion(id: &str, what: &str, pass: bool, detail: String) {
    println!("[{}] {id}: {what} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id} failed: {what} ({detail})");
}
