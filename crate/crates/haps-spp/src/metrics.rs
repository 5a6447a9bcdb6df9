//! Covariance frame transform, dilution-of-precision metrics, 3D accuracy,
//! and empirical CDFs.

use nalgebra::{Matrix3, Matrix4};
use thiserror::Error;

use crate::geodesy::{ecef_to_local_rotation, EcefVector, GeodeticCoord};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("covariance matrix is not positive semi-definite")]
    NotPositiveSemiDefinite,
    #[error("empty sample set")]
    EmptySamples,
}

/// Per-epoch metrics row, the unit of every report this crate emits.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch_s: f64,
    pub hdop: f64,
    pub pdop: f64,
    pub vdop: f64,
    pub error_3d: f64,
    pub n_satellites: usize,
    pub n_haps: usize,
    pub converged: bool,
    pub clock_offset: f64,
}

/// Transform the position block of the 4x4 solution covariance into the
/// receiver's local (east, north, up) frame: extract the 3x3 block Q and
/// return R Q R' with R the ECEF-to-local rotation.
pub fn covariance_to_local(
    q: &Matrix4<f64>,
    receiver: &GeodeticCoord,
) -> Result<Matrix3<f64>, MetricsError> {
    let block = q.fixed_view::<3, 3>(0, 0).into_owned();
    let scale = block.norm().max(1e-300);
    if (block - block.transpose()).norm() > 1e-6 * scale {
        return Err(MetricsError::NotPositiveSemiDefinite);
    }
    let eigen = nalgebra::SymmetricEigen::new(block);
    if eigen.eigenvalues.iter().any(|&l| l < -1e-9 * scale) {
        return Err(MetricsError::NotPositiveSemiDefinite);
    }
    let r = ecef_to_local_rotation(receiver);
    Ok(r * block * r.transpose())
}

/// Horizontal dilution of precision: root sum of the two horizontal diagonal
/// entries of the local covariance.
pub fn hdop(local_cov: &Matrix3<f64>) -> f64 {
    (local_cov[(0, 0)] + local_cov[(1, 1)]).max(0.0).sqrt()
}

/// Position dilution of precision: root trace of the local covariance.
pub fn pdop(local_cov: &Matrix3<f64>) -> f64 {
    local_cov.trace().max(0.0).sqrt()
}

/// Vertical dilution of precision: root of the vertical diagonal entry.
pub fn vdop(local_cov: &Matrix3<f64>) -> f64 {
    local_cov[(2, 2)].max(0.0).sqrt()
}

/// Euclidean distance between estimate and truth.
pub fn error_3d(est: &EcefVector, truth: &EcefVector) -> f64 {
    est.distance(truth)
}

/// Empirical CDF over a sample set: sorted values v_(1..n) with cumulative
/// probabilities i/n.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSeries {
    values: Vec<f64>,
}

impl CdfSeries {
    pub fn new(mut samples: Vec<f64>) -> Result<Self, MetricsError> {
        if samples.is_empty() {
            return Err(MetricsError::EmptySamples);
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        Ok(Self { values: samples })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// (value, cumulative probability) points, probability ending at 1.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.values.len() as f64;
        self.values.iter().enumerate().map(move |(i, &v)| (v, (i + 1) as f64 / n))
    }

    /// Cumulative probability at `x`: fraction of samples <= x.
    pub fn probability_at(&self, x: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v <= x);
        idx as f64 / self.values.len() as f64
    }

    /// Quantile by linear interpolation between order statistics, clamped to
    /// the observed extremes.
    pub fn percentile(&self, q: f64) -> f64 {
        let n = self.values.len();
        if n == 1 {
            return self.values[0];
        }
        let q = q.clamp(0.0, 1.0);
        let pos = q * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        self.values[lo] * (1.0 - frac) + self.values[hi] * frac
    }

    pub fn median(&self) -> f64 {
        self.percentile(0.5)
    }
}

/// Compute the empirical CDF of a sample list.
pub fn cdf(samples: &[f64]) -> Result<CdfSeries, MetricsError> {
    CdfSeries::new(samples.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_models::{gaussian_error, RngStream};
    use rand::SeedableRng;

    #[test]
    fn identity_covariance_is_frame_invariant() {
        let q = Matrix4::identity();
        for (lat, lon) in [(0.0, 0.0), (45.4, -75.7), (-33.0, 151.0)] {
            let local =
                covariance_to_local(&q, &GeodeticCoord::from_degrees(lat, lon, 0.0)).unwrap();
            assert!((local - Matrix3::identity()).norm() < 1e-12);
        }
    }

    #[test]
    fn axes_permute_at_the_origin() {
        // ECEF diag(4, 1, 1) at (0, 0): the x axis is local up, so the local
        // covariance is diag(1, 1, 4).
        let mut q = Matrix4::identity();
        q[(0, 0)] = 4.0;
        let local = covariance_to_local(&q, &GeodeticCoord::new(0.0, 0.0, 0.0)).unwrap();
        let expected = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, 4.0));
        assert!((local - expected).norm() < 1e-12);
    }

    #[test]
    fn trace_preserved_under_transform() {
        let mut q = Matrix4::zeros();
        q[(0, 0)] = 2.5;
        q[(1, 1)] = 1.5;
        q[(2, 2)] = 0.7;
        q[(0, 1)] = 0.3;
        q[(1, 0)] = 0.3;
        q[(3, 3)] = 9.0;
        let g = GeodeticCoord::from_degrees(45.4215, -75.6972, 70.0);
        let local = covariance_to_local(&q, &g).unwrap();
        let trace_in = q[(0, 0)] + q[(1, 1)] + q[(2, 2)];
        assert!((local.trace() - trace_in).abs() < 1e-12);
    }

    #[test]
    fn non_psd_rejected() {
        let mut q = Matrix4::identity();
        q[(0, 0)] = -1.0;
        let g = GeodeticCoord::from_degrees(45.0, -75.0, 0.0);
        assert_eq!(covariance_to_local(&q, &g), Err(MetricsError::NotPositiveSemiDefinite));
    }

    #[test]
    fn dop_values() {
        let local = Matrix3::identity();
        assert!((hdop(&local) - 2.0f64.sqrt()).abs() < 1e-15);
        let local = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 4.0, 9.0));
        assert!((hdop(&local) - 5.0f64.sqrt()).abs() < 1e-15);
        assert!((pdop(&local) - 14.0f64.sqrt()).abs() < 1e-15);
        assert!((vdop(&local) - 3.0).abs() < 1e-15);
        assert!(hdop(&local) <= pdop(&local));
    }

    #[test]
    fn error_3d_basics() {
        let a = EcefVector::new(1.0, 2.0, 3.0);
        assert_eq!(error_3d(&a, &a), 0.0);
        let b = EcefVector::new(4.0, 6.0, 3.0);
        assert!((error_3d(&a, &b) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn cdf_trivials() {
        let s = cdf(&[5.0]).unwrap();
        assert_eq!(s.probability_at(5.0), 1.0);
        assert_eq!(s.probability_at(4.999), 0.0);

        let s = cdf(&[3.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(s.probability_at(2.0), 0.5);
        let pts: Vec<_> = s.points().collect();
        assert_eq!(pts, vec![(1.0, 0.25), (2.0, 0.5), (3.0, 0.75), (4.0, 1.0)]);
        assert!(cdf(&[]).is_err());
    }

    #[test]
    fn cdf_monotone_ends_at_one() {
        let mut rng = RngStream::seed_from_u64(3);
        let samples: Vec<f64> = (0..1000).map(|_| gaussian_error(4.0, &mut rng).abs()).collect();
        let s = cdf(&samples).unwrap();
        let pts: Vec<_> = s.points().collect();
        for w in pts.windows(2) {
            assert!(w[1].0 >= w[0].0);
            assert!(w[1].1 > w[0].1);
        }
        assert_eq!(pts.last().unwrap().1, 1.0);
    }

    #[test]
    fn folded_gaussian_95th_percentile() {
        let mut rng = RngStream::seed_from_u64(11);
        let samples: Vec<f64> =
            (0..100_000).map(|_| gaussian_error(1.0, &mut rng).abs()).collect();
        let s = cdf(&samples).unwrap();
        let p95 = s.percentile(0.95);
        assert!((p95 - 1.96).abs() < 0.03, "p95 {p95}");
    }
}
