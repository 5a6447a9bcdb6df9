//! Broadcast ephemeris evaluation: satellite ECEF position at emission time
//! and satellite clock offset, per the standard GPS broadcast orbit model.

use thiserror::Error;

use crate::constants::{EARTH_MU, EARTH_ROTATION_RATE, RELATIVISTIC_CLOCK_F};
use crate::geodesy::EcefVector;
use crate::rinex::BroadcastEphemeris;
use crate::time::GpsTime;

/// Ephemerides older than this are considered stale (s).
pub const MAX_EPHEMERIS_AGE: f64 = 4.0 * 3600.0;

const KEPLER_TOLERANCE: f64 = 1e-12;
const KEPLER_MAX_ITER: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum EphemerisError {
    #[error("no ephemeris for prn {0}")]
    NoEphemeris(u8),
    #[error("stale ephemeris for prn {prn}: nearest toe is {age_s:.0} s away")]
    Stale { prn: u8, age_s: f64 },
    #[error("Kepler iteration did not converge")]
    KeplerDivergence,
}

/// A satellite's state at signal emission: ECEF position (before the Sagnac
/// rotation into the reception frame) and clock offset from GPS time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteState {
    pub prn: u8,
    pub position: EcefVector,
    pub clock_offset: f64,
}

/// Pick the ephemeris for `prn` with the smallest |t - toe|.
pub fn select_ephemeris<'a>(
    set: &'a [BroadcastEphemeris],
    prn: u8,
    t: &GpsTime,
) -> Result<&'a BroadcastEphemeris, EphemerisError> {
    let best = set
        .iter()
        .filter(|e| e.prn == prn)
        .min_by(|a, b| {
            let da = t.diff(&a.toe()).abs();
            let db = t.diff(&b.toe()).abs();
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
        .ok_or(EphemerisError::NoEphemeris(prn))?;
    let age = t.diff(&best.toe()).abs();
    if age > MAX_EPHEMERIS_AGE {
        return Err(EphemerisError::Stale { prn, age_s: age });
    }
    Ok(best)
}

/// Solve Kepler's equation M = E - e sin E by Newton iteration seeded at M.
fn eccentric_anomaly(m: f64, e: f64) -> Result<f64, EphemerisError> {
    let mut big_e = m;
    for _ in 0..KEPLER_MAX_ITER {
        let delta = (big_e - e * big_e.sin() - m) / (1.0 - e * big_e.cos());
        big_e -= delta;
        if delta.abs() < KEPLER_TOLERANCE {
            return Ok(big_e);
        }
    }
    Err(EphemerisError::KeplerDivergence)
}

/// ECEF position at transmission time `t_tx` from the broadcast Keplerian
/// elements: corrected mean motion, Kepler solve, argument-of-latitude /
/// radius / inclination harmonics, then rotation by the corrected longitude
/// of the ascending node.
pub fn satellite_position(
    eph: &BroadcastEphemeris,
    t_tx: &GpsTime,
) -> Result<EcefVector, EphemerisError> {
    let a = eph.sqrt_a * eph.sqrt_a;
    let tk = t_tx.diff(&eph.toe());
    let n = (EARTH_MU / (a * a * a)).sqrt() + eph.delta_n;
    let m = eph.m0 + n * tk;
    let big_e = eccentric_anomaly(m, eph.e)?;

    let (sin_e, cos_e) = big_e.sin_cos();
    let nu = ((1.0 - eph.e * eph.e).sqrt() * sin_e).atan2(cos_e - eph.e);
    let phi = nu + eph.omega;
    let (sin_2phi, cos_2phi) = (2.0 * phi).sin_cos();

    let u = phi + eph.cus * sin_2phi + eph.cuc * cos_2phi;
    let r = a * (1.0 - eph.e * cos_e) + eph.crs * sin_2phi + eph.crc * cos_2phi;
    let i = eph.i0 + eph.i_dot * tk + eph.cis * sin_2phi + eph.cic * cos_2phi;

    let x_orb = r * u.cos();
    let y_orb = r * u.sin();

    let node = eph.omega0 + (eph.omega_dot - EARTH_ROTATION_RATE) * tk
        - EARTH_ROTATION_RATE * eph.toe_sow;
    let (sin_node, cos_node) = node.sin_cos();
    let cos_i = i.cos();

    Ok(EcefVector::new(
        x_orb * cos_node - y_orb * cos_i * sin_node,
        x_orb * sin_node + y_orb * cos_i * cos_node,
        y_orb * i.sin(),
    ))
}

/// Satellite clock offset dT at `t`: the broadcast polynomial around toc plus
/// the relativistic eccentricity term F e sqrt(a) sin(E).
pub fn satellite_clock_offset(eph: &BroadcastEphemeris, t: &GpsTime) -> Result<f64, EphemerisError> {
    satellite_clock_offset_with(eph, t, true)
}

/// As [`satellite_clock_offset`], with the relativistic term selectable so
/// scenarios can A/B its ~10 m range impact.
pub fn satellite_clock_offset_with(
    eph: &BroadcastEphemeris,
    t: &GpsTime,
    relativistic: bool,
) -> Result<f64, EphemerisError> {
    let dt = t.diff(&eph.toc);
    let mut offset = eph.af0 + eph.af1 * dt + eph.af2 * dt * dt;
    if relativistic && eph.e > 0.0 {
        let a = eph.sqrt_a * eph.sqrt_a;
        let tk = t.diff(&eph.toe());
        let n = (EARTH_MU / (a * a * a)).sqrt() + eph.delta_n;
        let big_e = eccentric_anomaly(eph.m0 + n * tk, eph.e)?;
        offset += RELATIVISTIC_CLOCK_F * eph.e * eph.sqrt_a * big_e.sin();
    }
    Ok(offset)
}

/// Position and clock in one call.
pub fn satellite_state(
    eph: &BroadcastEphemeris,
    t_tx: &GpsTime,
    relativistic: bool,
) -> Result<SatelliteState, EphemerisError> {
    Ok(SatelliteState {
        prn: eph.prn,
        position: satellite_position(eph, t_tx)?,
        clock_offset: satellite_clock_offset_with(eph, t_tx, relativistic)?,
    })
}
