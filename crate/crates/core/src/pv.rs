//! Horizontal forecast → tilted-plane irradiation → PV energy.
//!
//! The tilted irradiation is the horizontal value scaled by the clear-sky
//! tilted/horizontal ratio at the same instant; energy is a constant
//! efficiency times irradiation times surface.

use std::fs;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{self, WINDOW};
use crate::geometry::{self, SiteConfig};
use crate::mlp::MlpModel;
use crate::timeseries::Step;

/// Below this clear-sky GHI (W/m²) the transposition ratio is taken as zero.
pub const MIN_CLEAR_SKY_GHI: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvPlantConfig {
    pub tilt_deg: f64,
    /// 0 = south, positive west.
    pub azimuth_deg: f64,
    pub efficiency: f64,
    pub surface_m2: f64,
    /// Informational only.
    pub nominal_power_kw: f64,
}

impl PvPlantConfig {
    /// The 80° south-facing frontage string of the Ajaccio laboratory:
    /// η = 13 %, S = 10.125 m², 1.175 kW.
    pub fn ajaccio_frontage() -> Self {
        PvPlantConfig {
            tilt_deg: 80.0,
            azimuth_deg: 0.0,
            efficiency: 0.13,
            surface_m2: 10.125,
            nominal_power_kw: 1.175,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| {
            Err(Error::InvalidConfig {
                field: field.into(),
                reason,
            })
        };
        if !(0.0..=90.0).contains(&self.tilt_deg) {
            return bad("tilt_deg", format!("{} not in [0, 90]", self.tilt_deg));
        }
        if !(-180.0..=180.0).contains(&self.azimuth_deg) {
            return bad("azimuth_deg", format!("{} not in [-180, 180]", self.azimuth_deg));
        }
        if !(self.efficiency > 0.0 && self.efficiency < 1.0) {
            return bad("efficiency", format!("{} not in (0, 1)", self.efficiency));
        }
        if !(self.surface_m2 > 0.0 && self.surface_m2.is_finite()) {
            return bad("surface_m2", format!("{} must be > 0", self.surface_m2));
        }
        if !(self.nominal_power_kw >= 0.0 && self.nominal_power_kw.is_finite()) {
            return bad(
                "nominal_power_kw",
                format!("{} must be >= 0", self.nominal_power_kw),
            );
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PvPlantConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig {
            field: "plant".into(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plant serialization cannot fail")
    }
}

/// Clear-sky tilted/horizontal ratio at `instant`; 1 for a horizontal plane.
pub fn transposition_ratio(site: &SiteConfig, instant: &NaiveDateTime, plant: &PvPlantConfig) -> f64 {
    if plant.tilt_deg == 0.0 {
        return 1.0;
    }
    let ghi = geometry::clear_sky_ghi(site, instant);
    if ghi < MIN_CLEAR_SKY_GHI {
        return 0.0;
    }
    geometry::clear_sky_tilted(site, instant, plant.tilt_deg, plant.azimuth_deg) / ghi
}

/// Horizontal irradiation (Wh/m²) to the plant plane.
pub fn transpose(
    ghi_forecast: f64,
    site: &SiteConfig,
    instant: &NaiveDateTime,
    plant: &PvPlantConfig,
) -> f64 {
    ghi_forecast * transposition_ratio(site, instant, plant)
}

/// E = η · I_β · S, in Wh.
pub fn pv_energy(tilted_irradiation: f64, plant: &PvPlantConfig) -> f64 {
    plant.efficiency * tilted_irradiation * plant.surface_m2
}

/// Hourly PV energy forecast (Wh) for the hour starting at `hour_start`.
/// The transposition ratio is taken at the middle of the hour.
pub fn forecast_pv_energy(
    model: &MlpModel,
    history: &[f64; WINDOW],
    hour_start: &NaiveDateTime,
    site: &SiteConfig,
    plant: &PvPlantConfig,
) -> Result<f64> {
    if model.step != Step::Hourly {
        return Err(Error::InvalidArgument(
            "PV energy forecasts need an hourly model".into(),
        ));
    }
    let ghi = forecast::predict_next(model, history, hour_start, site)?;
    let tilted = transpose(ghi, site, &geometry::hour_midpoint(hour_start), plant);
    Ok(pv_energy(tilted, plant))
}
