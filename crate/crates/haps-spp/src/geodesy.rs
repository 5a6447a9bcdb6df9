//! Coordinate frames and Earth-rotation geometry.
//!
//! Everything downstream leans on three primitives: the WGS-84
//! geodetic/ECEF conversion pair, the ECEF-to-local rotation matrix, and the
//! Sagnac rotation that maps a source position at signal emission into the
//! ECEF frame at reception.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::constants::{EARTH_ROTATION_RATE, WGS84_A, WGS84_B, WGS84_E2};

#[derive(Debug, Error, PartialEq)]
pub enum GeodesyError {
    #[error("geodetic coordinates are undefined for the zero vector")]
    ZeroVector,
    #[error("receiver and source positions coincide")]
    CoincidentPoints,
    #[error("rotation interval {0} s outside [0, 1) s")]
    RotationIntervalOutOfRange(f64),
}

/// Position in the Earth-centered Earth-fixed frame (meters).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EcefVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn sub(&self, other: &EcefVector) -> EcefVector {
        EcefVector::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn add(&self, other: &EcefVector) -> EcefVector {
        EcefVector::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }

    pub fn scale(&self, s: f64) -> EcefVector {
        EcefVector::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn distance(&self, other: &EcefVector) -> f64 {
        self.sub(other).norm()
    }

    pub fn as_vector3(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector3(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Geodetic position on the WGS-84 ellipsoid: latitude and longitude in
/// radians, height in meters above the ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodeticCoord {
    pub latitude: f64,
    pub longitude: f64,
    pub height: f64,
}

impl GeodeticCoord {
    pub fn new(latitude: f64, longitude: f64, height: f64) -> Self {
        Self { latitude, longitude, height }
    }

    pub fn from_degrees(lat_deg: f64, lon_deg: f64, height: f64) -> Self {
        Self::new(lat_deg.to_radians(), lon_deg.to_radians(), height)
    }
}

/// Geodetic to ECEF via the prime-vertical radius of curvature.
pub fn geodetic_to_ecef(g: &GeodeticCoord) -> EcefVector {
    let (sin_lat, cos_lat) = g.latitude.sin_cos();
    let (sin_lon, cos_lon) = g.longitude.sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
    EcefVector::new(
        (n + g.height) * cos_lat * cos_lon,
        (n + g.height) * cos_lat * sin_lon,
        (n * (1.0 - WGS84_E2) + g.height) * sin_lat,
    )
}

/// ECEF to geodetic by iterating the latitude equation. Terminates on a
/// 1e-12 rad change or after 10 iterations, which is far below the 0.01 m
/// solver threshold for any position of interest.
pub fn ecef_to_geodetic(p: &EcefVector) -> Result<GeodeticCoord, GeodesyError> {
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    if rho == 0.0 && p.z == 0.0 {
        return Err(GeodesyError::ZeroVector);
    }
    if rho < 1e-9 {
        // On the polar axis the longitude is arbitrary; pick 0.
        let lat = if p.z >= 0.0 { std::f64::consts::FRAC_PI_2 } else { -std::f64::consts::FRAC_PI_2 };
        return Ok(GeodeticCoord::new(lat, 0.0, p.z.abs() - WGS84_B));
    }
    let lon = p.y.atan2(p.x);
    // Height from whichever trig factor is better conditioned; the
    // horizontal form loses precision near the poles.
    let height_at = |lat: f64, n: f64| {
        if lat.cos().abs() >= lat.sin().abs() {
            rho / lat.cos() - n
        } else {
            p.z / lat.sin() - n * (1.0 - WGS84_E2)
        }
    };
    let mut lat = p.z.atan2(rho * (1.0 - WGS84_E2));
    for _ in 0..10 {
        let sin_lat = lat.sin();
        let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
        let h = height_at(lat, n);
        let next = p.z.atan2(rho * (1.0 - WGS84_E2 * n / (n + h)));
        let delta = (next - lat).abs();
        lat = next;
        if delta < 1e-12 {
            break;
        }
    }
    let sin_lat = lat.sin();
    let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
    Ok(GeodeticCoord::new(lat, lon, height_at(lat, n)))
}

/// Rotation from ECEF into the local frame at `g`, rows ordered
/// (east, north, up):
///
/// ```text
/// [ -sin(lon)           cos(lon)          0        ]
/// [ -cos(lon)sin(lat)  -sin(lon)sin(lat)  cos(lat) ]
/// [  cos(lon)cos(lat)   sin(lon)cos(lat)  sin(lat) ]
/// ```
pub fn ecef_to_local_rotation(g: &GeodeticCoord) -> Matrix3<f64> {
    let (sin_lat, cos_lat) = g.latitude.sin_cos();
    let (sin_lon, cos_lon) = g.longitude.sin_cos();
    Matrix3::new(
        -sin_lon,
        cos_lon,
        0.0,
        -cos_lon * sin_lat,
        -sin_lon * sin_lat,
        cos_lat,
        cos_lon * cos_lat,
        sin_lon * cos_lat,
        sin_lat,
    )
}

/// Elevation and azimuth of `source` as seen from `receiver`.
///
/// The line-of-sight vector is expressed in the receiver's local frame via
/// [`ecef_to_local_rotation`]; elevation is in [-pi/2, pi/2], azimuth in
/// [0, 2*pi) measured clockwise from north.
pub fn elevation_azimuth(
    receiver: &EcefVector,
    source: &EcefVector,
) -> Result<(f64, f64), GeodesyError> {
    let los = source.sub(receiver);
    let range = los.norm();
    if range == 0.0 {
        return Err(GeodesyError::CoincidentPoints);
    }
    let g = ecef_to_geodetic(receiver)?;
    let local = ecef_to_local_rotation(&g) * los.as_vector3() / range;
    let elevation = local[2].clamp(-1.0, 1.0).asin();
    let mut azimuth = local[0].atan2(local[1]);
    if azimuth < 0.0 {
        azimuth += 2.0 * std::f64::consts::PI;
    }
    Ok((elevation, azimuth))
}

/// Rotate a source position from the ECEF frame at signal emission into the
/// frame at reception, `dt_rot` seconds later:
///
/// ```text
/// [  cos(w*dt)  sin(w*dt)  0 ] [x]
/// [ -sin(w*dt)  cos(w*dt)  0 ] [y]
/// [  0          0          1 ] [z]
/// ```
///
/// `dt_rot` must lie in [0, 1) s; GPS propagation times are ~0.07 s.
pub fn sagnac_rotate(p_tx: &EcefVector, dt_rot: f64) -> Result<EcefVector, GeodesyError> {
    if !(0.0..1.0).contains(&dt_rot) {
        return Err(GeodesyError::RotationIntervalOutOfRange(dt_rot));
    }
    let theta = EARTH_ROTATION_RATE * dt_rot;
    let (sin_t, cos_t) = theta.sin_cos();
    Ok(EcefVector::new(
        cos_t * p_tx.x + sin_t * p_tx.y,
        -sin_t * p_tx.x + cos_t * p_tx.y,
        p_tx.z,
    ))
}

/// Range to a source whose position is given at emission time, measured in
/// the reception-time frame: the fixed point of
/// `rho = |sagnac_rotate(p_tx, rho / c) - receiver|`.
///
/// Converges to machine precision in a couple of passes because the rotation
/// perturbs the range by parts in 1e6. This is the synthesis-side inverse of
/// the correction the solver applies.
pub fn reception_frame_range(p_tx: &EcefVector, receiver: &EcefVector) -> f64 {
    let mut rho = p_tx.distance(receiver);
    for _ in 0..3 {
        let dt = rho / crate::constants::SPEED_OF_LIGHT;
        let rotated = match sagnac_rotate(p_tx, dt) {
            Ok(p) => p,
            Err(_) => return rho,
        };
        rho = rotated.distance(receiver);
    }
    rho
}
