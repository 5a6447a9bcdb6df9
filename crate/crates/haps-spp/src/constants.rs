//! Physical and geodetic constants. These are fixed at compile time and are
//! never configurable: every module must agree on them for ranges, frames and
//! clock terms to be mutually consistent.

/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Earth rotation rate (rad/s).
pub const EARTH_ROTATION_RATE: f64 = 7.2921151467e-5;

/// Earth gravitational parameter used by the broadcast orbit model (m^3/s^2).
pub const EARTH_MU: f64 = 3.986005e14;

/// WGS-84 semi-major axis (m).
pub const WGS84_A: f64 = 6_378_137.0;

/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257223563;

/// WGS-84 semi-minor axis (m).
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);

/// WGS-84 first eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

/// Relativistic clock correction factor F = -2 sqrt(mu)/c^2 (s per sqrt(m)).
pub const RELATIVISTIC_CLOCK_F: f64 = -4.442807633e-10;

/// Seconds per GPS week.
pub const SECONDS_PER_WEEK: f64 = 604_800.0;
