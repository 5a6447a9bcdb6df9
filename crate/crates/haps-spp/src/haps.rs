//! HAPS platform trajectories and pseudorange synthesis.
//!
//! Platforms are quasi-stationary: each traces a circle of configurable
//! radius in the local horizontal plane of its center point, nominally 20 km
//! above ground. HAPS pseudoranges carry no ionospheric term anywhere in
//! this crate; the signal never crosses the ionosphere.

use rand::Rng;

use crate::constants::SPEED_OF_LIGHT;
use crate::error_models::gaussian_error;
use crate::geodesy::{ecef_to_local_rotation, geodetic_to_ecef, EcefVector, GeodeticCoord};

/// Nominal platform altitude (m).
pub const DEFAULT_HAPS_HEIGHT: f64 = 20_000.0;

/// One stratospheric platform on a circular station-keeping trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct HapsPlatform {
    pub id: String,
    /// Circle center; height is the platform altitude.
    pub center: GeodeticCoord,
    /// Circle radius (m).
    pub radius: f64,
    /// Angular rate around the circle (rad/s).
    pub angular_rate: f64,
    /// Phase at t = 0 (rad).
    pub initial_phase: f64,
    /// Platform clock offset from GPS time (s); zero in this artifact.
    pub clock_offset: f64,
}

/// One synthesized HAPS pseudorange.
#[derive(Debug, Clone, PartialEq)]
pub struct HapsMeasurement {
    pub haps_id: String,
    pub pseudorange: f64,
    /// Platform position at signal emission.
    pub position: EcefVector,
}

/// Platform position at time `t` (seconds from scenario start): the center
/// displaced by `radius * (cos theta, sin theta)` in the center's local
/// horizontal (east, north) plane.
pub fn haps_position(platform: &HapsPlatform, t: f64) -> EcefVector {
    let center = geodetic_to_ecef(&platform.center);
    if platform.radius == 0.0 {
        return center;
    }
    let theta = platform.initial_phase + platform.angular_rate * t;
    let rotation = ecef_to_local_rotation(&platform.center);
    // Rows of the rotation are the local east/north/up axes in ECEF.
    let east = EcefVector::new(rotation[(0, 0)], rotation[(0, 1)], rotation[(0, 2)]);
    let north = EcefVector::new(rotation[(1, 0)], rotation[(1, 1)], rotation[(1, 2)]);
    center
        .add(&east.scale(platform.radius * theta.cos()))
        .add(&north.scale(platform.radius * theta.sin()))
}

/// Simulation-mode pseudorange: geometric range plus zero-mean Gaussian noise
/// standing in for the whole HAPS error budget (position, clock, troposphere,
/// multipath, receiver noise).
pub fn synth_pseudorange_sim<R: Rng>(
    platform: &HapsPlatform,
    receiver_truth: &EcefVector,
    t: f64,
    sigma: f64,
    rng: &mut R,
) -> HapsMeasurement {
    let position = haps_position(platform, t);
    let range = position.distance(receiver_truth);
    HapsMeasurement {
        haps_id: platform.id.clone(),
        pseudorange: range + gaussian_error(sigma, rng),
        position,
    }
}

/// Experiment-mode pseudorange: geometric range plus the receiver clock term
/// c * dt_rx plus Gaussian noise. The clock offset comes from the per-epoch
/// ground-truth estimate, mirroring how HAPS ranges are grafted onto real
/// GPS data.
pub fn synth_pseudorange_exp<R: Rng>(
    platform: &HapsPlatform,
    receiver_truth: &EcefVector,
    dt_rx: f64,
    t: f64,
    sigma: f64,
    rng: &mut R,
) -> HapsMeasurement {
    let mut m = synth_pseudorange_sim(platform, receiver_truth, t, sigma, rng);
    m.pseudorange += SPEED_OF_LIGHT * dt_rx;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_models::RngStream;
    use crate::geodesy::elevation_azimuth;
    use rand::SeedableRng;

    fn downtown() -> HapsPlatform {
        HapsPlatform {
            id: "downtown".into(),
            center: GeodeticCoord::from_degrees(45.4215, -75.6972, DEFAULT_HAPS_HEIGHT),
            radius: 2_000.0,
            angular_rate: 2.0 * std::f64::consts::PI / 600.0,
            initial_phase: 0.0,
            clock_offset: 0.0,
        }
    }

    #[test]
    fn zero_radius_stays_at_center() {
        let mut p = downtown();
        p.radius = 0.0;
        let center = geodetic_to_ecef(&p.center);
        for t in [0.0, 17.0, 431.5] {
            assert_eq!(haps_position(&p, t), center);
        }
    }

    #[test]
    fn opposite_phases_are_a_diameter_apart() {
        let p = downtown();
        // angular_rate * 300 = pi for the 600 s period.
        let a = haps_position(&p, 0.0);
        let b = haps_position(&p, 300.0);
        let d = a.distance(&b);
        assert!((d - 2.0 * p.radius).abs() / (2.0 * p.radius) < 1e-6, "diameter {d}");
    }

    #[test]
    fn displacement_lies_in_the_local_horizontal_plane() {
        let p = downtown();
        let center = geodetic_to_ecef(&p.center);
        let rotation = ecef_to_local_rotation(&p.center);
        let up = EcefVector::new(rotation[(2, 0)], rotation[(2, 1)], rotation[(2, 2)]);
        for k in 0..8 {
            let t = f64::from(k) * 77.0;
            let d = haps_position(&p, t).sub(&center);
            assert!((d.norm() - p.radius).abs() < 1e-6);
            let vertical = d.x * up.x + d.y * up.y + d.z * up.z;
            assert!(vertical.abs() < 1e-6, "out-of-plane component {vertical}");
        }
    }

    #[test]
    fn norm_excursion_bounded_by_curvature_terms() {
        // |pos| - |center| is r^2/(2|center|) from the tangent-plane offset
        // plus up to r*f from the geodetic-vs-geocentric deflection of the
        // vertical at mid latitudes.
        let p = downtown();
        let center_norm = geodetic_to_ecef(&p.center).norm();
        let bound = p.radius * p.radius / (2.0 * center_norm) + p.radius / 250.0;
        for k in 0..24 {
            let t = f64::from(k) * 25.0;
            let excursion = (haps_position(&p, t).norm() - center_norm).abs();
            assert!(excursion <= bound, "excursion {excursion} > bound {bound}");
        }
    }

    #[test]
    fn elevation_above_80_degrees_under_the_orbit() {
        let p = downtown();
        let receiver =
            geodetic_to_ecef(&GeodeticCoord::from_degrees(45.4215, -75.6972, 60.0));
        for k in 0..12 {
            let pos = haps_position(&p, f64::from(k) * 50.0);
            let (el, _) = elevation_azimuth(&receiver, &pos).unwrap();
            assert!(el.to_degrees() > 80.0, "elevation {}", el.to_degrees());
        }
    }

    #[test]
    fn noiseless_sim_pseudorange_is_geometric_range() {
        let p = downtown();
        let receiver = geodetic_to_ecef(&GeodeticCoord::from_degrees(45.40, -75.70, 80.0));
        let mut rng = RngStream::seed_from_u64(1);
        let m = synth_pseudorange_sim(&p, &receiver, 123.0, 0.0, &mut rng);
        assert_eq!(m.pseudorange, m.position.distance(&receiver));
        assert!(m.pseudorange > 0.0 && m.pseudorange < 1e6);
    }

    #[test]
    fn receiver_below_platform_sees_height_difference() {
        let mut p = downtown();
        p.radius = 0.0;
        let receiver = geodetic_to_ecef(&GeodeticCoord::from_degrees(45.4215, -75.6972, 0.0));
        let mut rng = RngStream::seed_from_u64(1);
        let m = synth_pseudorange_sim(&p, &receiver, 0.0, 0.0, &mut rng);
        assert!((m.pseudorange - DEFAULT_HAPS_HEIGHT).abs() < 1e-6);
    }

    #[test]
    fn sim_residual_std_matches_sigma() {
        let p = downtown();
        let receiver = geodetic_to_ecef(&GeodeticCoord::from_degrees(45.40, -75.70, 80.0));
        let mut rng = RngStream::seed_from_u64(42);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for k in 0..n {
            let t = f64::from(k);
            let m = synth_pseudorange_sim(&p, &receiver, t, 2.0, &mut rng);
            let r = m.pseudorange - m.position.distance(&receiver);
            sum += r;
            sum_sq += r * r;
        }
        let mean = sum / f64::from(n);
        let std = (sum_sq / f64::from(n) - mean * mean).sqrt();
        assert!((1.98..2.02).contains(&std), "std {std}");
    }

    #[test]
    fn experiment_mode_adds_clock_term() {
        let p = downtown();
        let receiver = geodetic_to_ecef(&GeodeticCoord::from_degrees(45.40, -75.70, 80.0));
        let mut rng = RngStream::seed_from_u64(9);
        let base = synth_pseudorange_sim(&p, &receiver, 5.0, 0.0, &mut rng);
        let mut rng = RngStream::seed_from_u64(9);
        let offset = synth_pseudorange_exp(&p, &receiver, 1e-6, 5.0, 0.0, &mut rng);
        assert!((offset.pseudorange - base.pseudorange - 299.792458).abs() < 1e-9);

        let mut rng = RngStream::seed_from_u64(10);
        let n = 100_000;
        let mut sum_sq = 0.0;
        for k in 0..n {
            let m = synth_pseudorange_exp(&p, &receiver, 2.5e-6, f64::from(k), 5.0, &mut rng);
            let r = m.pseudorange - m.position.distance(&receiver) - SPEED_OF_LIGHT * 2.5e-6;
            sum_sq += r * r;
        }
        let std = (sum_sq / f64::from(n)).sqrt();
        assert!((4.95..5.05).contains(&std), "std {std}");
    }
}
