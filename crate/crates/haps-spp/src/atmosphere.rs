//! Ionospheric (Klobuchar) and tropospheric (Saastamoinen) delay models.
//!
//! Both act on satellite pseudoranges only. HAPS signals originate below the
//! ionosphere, so no code path in this crate ever applies [`klobuchar_delay`]
//! to a HAPS measurement; in simulation mode the HAPS tropospheric residual
//! is folded into the configured Gaussian error instead.

use thiserror::Error;

use crate::constants::SPEED_OF_LIGHT;
use crate::geodesy::GeodeticCoord;
use crate::rinex::IonoParameters;

#[derive(Debug, Error, PartialEq)]
pub enum AtmosphereError {
    #[error("elevation {0} rad below model validity floor")]
    ElevationBelowFloor(f64),
    #[error("elevation {0} rad outside (0, pi/2]")]
    ElevationOutOfRange(f64),
}

/// Per-measurement atmospheric corrections in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AtmosphericDelays {
    pub d_ion: f64,
    pub d_trop: f64,
}

/// Surface atmosphere used to derive pressure/temperature/humidity for the
/// troposphere model. Values are the defaults for every shipped scenario and
/// may be overridden per scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereConfig {
    /// Sea-level pressure (hPa).
    pub pressure_hpa: f64,
    /// Sea-level temperature (K).
    pub temperature_k: f64,
    /// Relative humidity in [0, 1].
    pub relative_humidity: f64,
}

impl Default for AtmosphereConfig {
    fn default() -> Self {
        Self { pressure_hpa: 1013.25, temperature_k: 291.15, relative_humidity: 0.5 }
    }
}

/// Saastamoinen validity floor: 5 degrees.
pub const TROPO_ELEVATION_FLOOR: f64 = 5.0 * std::f64::consts::PI / 180.0;

/// L1 ionospheric delay in meters from the broadcast Klobuchar coefficients.
///
/// The computation follows the standard single-frequency algorithm in
/// semicircle units: Earth-centred angle to the pierce point, geomagnetic
/// latitude, local time, obliquity factor, and a cosine approximation of the
/// daytime bulge with a 5 ns night-time floor.
pub fn klobuchar_delay(
    iono: &IonoParameters,
    user: &GeodeticCoord,
    elevation: f64,
    azimuth: f64,
    gps_sow: f64,
) -> Result<f64, AtmosphereError> {
    if elevation <= 0.0 || elevation > std::f64::consts::FRAC_PI_2 + 1e-12 {
        return Err(AtmosphereError::ElevationOutOfRange(elevation));
    }
    let el_sc = elevation / std::f64::consts::PI;

    // Earth-centred angle and pierce point, all in semicircles.
    let psi = 0.0137 / (el_sc + 0.11) - 0.022;
    let mut phi = user.latitude / std::f64::consts::PI + psi * azimuth.cos();
    phi = phi.clamp(-0.416, 0.416);
    let lam = user.longitude / std::f64::consts::PI
        + psi * azimuth.sin() / (phi * std::f64::consts::PI).cos();
    let phi_m = phi + 0.064 * ((lam - 1.617) * std::f64::consts::PI).cos();

    // Local time at the pierce point, seconds in [0, 86400).
    let t = (43_200.0 * lam + gps_sow).rem_euclid(86_400.0);

    // Obliquity factor.
    let f = 1.0 + 16.0 * (0.53 - el_sc).powi(3);

    let amp = (iono.alpha[0]
        + phi_m * (iono.alpha[1] + phi_m * (iono.alpha[2] + phi_m * iono.alpha[3])))
    .max(0.0);
    let per = (iono.beta[0]
        + phi_m * (iono.beta[1] + phi_m * (iono.beta[2] + phi_m * iono.beta[3])))
    .max(72_000.0);

    let x = 2.0 * std::f64::consts::PI * (t - 50_400.0) / per;
    let delay_s = if x.abs() < 1.57 {
        5e-9 + amp * (1.0 - x * x / 2.0 + x.powi(4) / 24.0)
    } else {
        5e-9
    };
    Ok(SPEED_OF_LIGHT * f * delay_s)
}

/// Total (hydrostatic + wet) tropospheric delay in meters by the Saastamoinen
/// model with a standard-atmosphere profile derived from site height.
pub fn saastamoinen_delay(
    user: &GeodeticCoord,
    elevation: f64,
    config: &AtmosphereConfig,
) -> Result<f64, AtmosphereError> {
    if elevation < TROPO_ELEVATION_FLOOR {
        return Err(AtmosphereError::ElevationBelowFloor(elevation));
    }
    // Standard atmosphere at site height; the pressure power law is valid in
    // the troposphere, so cap the height it sees.
    let hgt = user.height.clamp(0.0, 11_000.0);
    let pressure = config.pressure_hpa * (1.0 - 2.2557e-5 * hgt).powf(5.2568);
    let temperature = config.temperature_k - 6.5e-3 * hgt;
    let vapor = 6.108
        * config.relative_humidity
        * ((17.15 * temperature - 4684.0) / (temperature - 38.45)).exp();

    let zenith = std::f64::consts::FRAC_PI_2 - elevation;
    let dry = 0.0022768 * pressure
        / (1.0 - 0.00266 * (2.0 * user.latitude).cos() - 0.00028 * hgt / 1e3)
        / zenith.cos();
    let wet = 0.002277 * (1255.0 / temperature + 0.05) * vapor / zenith.cos();
    Ok(dry + wet)
}
