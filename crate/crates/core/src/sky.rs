//! Site geometry, sidereal time and Earth-rotation Doppler.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hypothesis declination of the transit scan, degrees.
pub const POINTING_DEC_DEG: f64 = -7.6;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const EARTH_EQUATORIAL_RADIUS_M: f64 = 6_378_137.0;
const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;
const MJD_J2000: f64 = 51_544.5;

/// Sidereal hours gained per solar day.
pub const SIDEREAL_RATE_H_PER_DAY: f64 = 24.065_709_824_419_08;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteGeometry {
    pub site_id: String,
    /// Geodetic latitude, degrees north.
    pub latitude: f64,
    /// Longitude, degrees east.
    pub longitude: f64,
    #[serde(default = "default_azimuth")]
    pub azimuth: f64,
    #[serde(default = "default_dec")]
    pub declination: f64,
    #[serde(default)]
    pub reference: bool,
}

fn default_azimuth() -> f64 {
    180.0
}

fn default_dec() -> f64 {
    POINTING_DEC_DEG
}

impl SiteGeometry {
    pub fn new(site_id: &str, latitude: f64, longitude: f64) -> Self {
        SiteGeometry {
            site_id: site_id.to_string(),
            latitude,
            longitude,
            azimuth: default_azimuth(),
            declination: default_dec(),
            reference: false,
        }
    }

    /// Forty Foot telescope, Green Bank (reference site).
    pub fn green_bank() -> Self {
        SiteGeometry {
            reference: true,
            ..SiteGeometry::new("GB", 38.4377, -79.8313)
        }
    }

    /// Plishner Sixty Foot telescope near Haswell, Colorado.
    pub fn haswell() -> Self {
        SiteGeometry::new("HA", 38.4506, -103.1638)
    }

    /// Twenty-six Foot telescope, Dunbarton, New Hampshire.
    pub fn dunbarton() -> Self {
        SiteGeometry::new("DU", 43.1034, -71.6034)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.latitude.abs() <= 90.0) {
            return Err(Error::invalid(format!("site {}: latitude out of range", self.site_id)));
        }
        if (self.azimuth - 180.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "site {}: only meridian (azimuth 180) pointing is supported",
                self.site_id
            )));
        }
        Ok(())
    }
}

/// Greenwich mean sidereal time in hours, `[0, 24)`.
pub fn gmst_hours(mjd: f64) -> f64 {
    let days = mjd - MJD_J2000;
    (18.697_374_558 + SIDEREAL_RATE_H_PER_DAY * days).rem_euclid(24.0)
}

/// Local sidereal time in hours.
pub fn lst_hours(mjd: f64, longitude_deg: f64) -> f64 {
    (gmst_hours(mjd) + longitude_deg / 15.0).rem_euclid(24.0)
}

/// RA of the meridian pointing direction of `site` at `mjd`, hours.
pub fn mjd_to_ra(mjd: f64, site: &SiteGeometry) -> f64 {
    lst_hours(mjd, site.longitude)
}

/// Recession velocity (m/s) of `site` from the direction `(ra_h, dec_deg)`
/// due to Earth rotation.
pub fn rotation_los_velocity(mjd: f64, site: &SiteGeometry, ra_h: f64, dec_deg: f64) -> f64 {
    let hour_angle = (lst_hours(mjd, site.longitude) - ra_h) * std::f64::consts::PI / 12.0;
    EARTH_EQUATORIAL_RADIUS_M
        * EARTH_ROTATION_RAD_S
        * site.latitude.to_radians().cos()
        * dec_deg.to_radians().cos()
        * hour_angle.sin()
}

/// Upper bound on the rotation velocity of any site, m/s.
pub fn max_rotation_speed() -> f64 {
    EARTH_EQUATORIAL_RADIUS_M * EARTH_ROTATION_RAD_S
}

/// Frequency measured at `site` translated to what `reference` would have
/// measured for a source at the reference pointing direction.
pub fn doppler_compensate(rf_freq: f64, mjd: f64, site: &SiteGeometry, reference: &SiteGeometry) -> f64 {
    rf_freq + doppler_correction(rf_freq, mjd, site, reference)
}

/// The additive correction applied by [`doppler_compensate`], Hz.
pub fn doppler_correction(rf_freq: f64, mjd: f64, site: &SiteGeometry, reference: &SiteGeometry) -> f64 {
    if site == reference {
        return 0.0;
    }
    let ra = mjd_to_ra(mjd, reference);
    let dec = reference.declination;
    let v_site = rotation_los_velocity(mjd, site, ra, dec);
    let v_ref = rotation_los_velocity(mjd, reference, ra, dec);
    rf_freq * (v_site - v_ref) / SPEED_OF_LIGHT
}

/// Inverse of [`doppler_compensate`]: the frequency `site` observes for a
/// signal the reference measures at `ref_freq`.
pub fn doppler_uncompensate(ref_freq: f64, mjd: f64, site: &SiteGeometry, reference: &SiteGeometry) -> f64 {
    if site == reference {
        return ref_freq;
    }
    let ra = mjd_to_ra(mjd, reference);
    let dec = reference.declination;
    let v_site = rotation_los_velocity(mjd, site, ra, dec);
    let v_ref = rotation_los_velocity(mjd, reference, ra, dec);
    ref_freq / (1.0 + (v_site - v_ref) / SPEED_OF_LIGHT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_right_ascensions() {
        let gb = SiteGeometry::green_bank();
        assert!((mjd_to_ra(58345.5380613, &gb) - 5.183775).abs() < 0.01);
        assert!((mjd_to_ra(58346.5382031, &gb) - 5.252898).abs() < 0.01);
    }

    #[test]
    fn fifteen_degrees_is_one_hour() {
        let a = SiteGeometry::new("A", 40.0, -80.0);
        let b = SiteGeometry::new("B", 40.0, -65.0);
        let mjd = 59123.4;
        let d = (mjd_to_ra(mjd, &b) - mjd_to_ra(mjd, &a)).rem_euclid(24.0);
        assert!((d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sidereal_slope() {
        let gb = SiteGeometry::green_bank();
        let mjd = 58500.1;
        let h = 1e-3;
        let d = (mjd_to_ra(mjd + h, &gb) - mjd_to_ra(mjd, &gb)).rem_euclid(24.0) / h;
        assert!((d / 24.0 - 24.065_709_82 / 24.0).abs() < 1e-6);
    }

    #[test]
    fn doppler_reference_is_zero() {
        let gb = SiteGeometry::green_bank();
        assert_eq!(doppler_correction(1420e6, 58345.5, &gb, &gb), 0.0);
    }

    #[test]
    fn doppler_bounded_by_equatorial_speed() {
        let gb = SiteGeometry::green_bank();
        let bound = 1420e6 * max_rotation_speed() / SPEED_OF_LIGHT;
        assert!((bound - 2203.0).abs() < 5.0);
        for lon in [-170.0, -103.0, -71.0, 0.0, 45.0, 120.0] {
            for lat in [-60.0, 0.0, 38.0, 89.0] {
                let site = SiteGeometry::new("X", lat, lon);
                for k in 0..24 {
                    let c = doppler_correction(1420e6, 58000.0 + k as f64 / 24.0, &site, &gb);
                    assert!(c.abs() <= bound + 1e-9);
                }
            }
        }
    }

    #[test]
    fn compensation_round_trip() {
        let gb = SiteGeometry::green_bank();
        let ha = SiteGeometry::haswell();
        let mjd = 58345.5380613;
        let f_ref = 1440.9286091e6;
        let observed = doppler_uncompensate(f_ref, mjd, &ha, &gb);
        assert!((observed - f_ref).abs() > 100.0);
        let back = doppler_compensate(observed, mjd, &ha, &gb);
        assert!((back - f_ref).abs() < 1e-3);
    }
}
