//! Iterative single point positioning over combined satellite + HAPS
//! pseudoranges.
//!
//! The solve starts from the center of the Earth with zero receiver clock
//! offset and iterates unweighted least squares. Each iteration recomputes
//! source elevations from the current estimate, drops sources below the
//! elevation mask, re-estimates the atmospheric delays, applies the Sagnac
//! rotation with the corrected pseudorange as the transit-time estimate,
//! and solves
//!
//! ```text
//! b = p_c - rho,   H = [-u, 1],   dx = (H'H)^-1 H' b
//! ```
//!
//! updating position by dx(1:3) and reading the receiver clock from
//! dx(4)/c, until |dx(1:3)| falls below the configured threshold.
//!
//! Masking and atmospheric corrections only engage once the estimate's
//! geodetic height is within 100 km of the ellipsoid. Before that the loop
//! is in its bootstrap phase, where the linearized step is replaced by
//! Bancroft's closed-form solve (taking the root nearer the Earth's
//! surface). A plain Gauss-Newton step linearized at the Earth's center is
//! ill-conditioned for clustered low-altitude sources such as a group of
//! HAPS, and diverges toward the mirror solution above the platform plane;
//! the closed form lands in the correct basin in one step, after which the
//! masked least-squares iteration proceeds exactly as written above.

use nalgebra::{DMatrix, DVector, Matrix4};
use thiserror::Error;

use crate::atmosphere::{
    klobuchar_delay, saastamoinen_delay, AtmosphereConfig, AtmosphericDelays,
    TROPO_ELEVATION_FLOOR,
};
use crate::constants::SPEED_OF_LIGHT;
use crate::geodesy::{ecef_to_geodetic, elevation_azimuth, sagnac_rotate, EcefVector, GeodeticCoord};
use crate::rinex::IonoParameters;
use crate::time::GpsTime;

/// Estimate heights beyond this are treated as "not yet on the Earth" and
/// bypass masking and atmospheric corrections (m).
const BOOTSTRAP_HEIGHT_LIMIT: f64 = 1e5;

/// Condition-number limit on H'H before geometry is declared degenerate.
const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("insufficient sources: {available} available, at least 4 required")]
    InsufficientSources { available: usize },
    #[error("degenerate geometry: normal matrix condition exceeds 1e12")]
    DegenerateGeometry,
    #[error("no corrected measurements supplied")]
    NoMeasurements,
}

/// Identifies one ranging source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceId {
    Satellite(u8),
    Haps(u16),
}

impl SourceId {
    pub fn is_haps(&self) -> bool {
        matches!(self, SourceId::Haps(_))
    }
}

impl std::fmt::Display for SourceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceId::Satellite(prn) => write!(f, "G{prn:02}"),
            SourceId::Haps(i) => write!(f, "H{i:02}"),
        }
    }
}

/// One pseudorange from one source at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct RangingMeasurement {
    pub source: SourceId,
    /// Raw pseudorange (m).
    pub pseudorange: f64,
    /// Source position at signal emission.
    pub position: EcefVector,
    /// Satellite clock offset dT (s); zero for HAPS.
    pub clock_offset: f64,
}

/// Solver knobs; defaults follow the system parameters used throughout the
/// shipped scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub elevation_mask_deg: f64,
    pub convergence_threshold_m: f64,
    pub max_iterations: usize,
    pub correct_ionosphere: bool,
    pub correct_troposphere: bool,
    pub atmosphere: AtmosphereConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            elevation_mask_deg: 15.0,
            convergence_threshold_m: 0.01,
            max_iterations: 20,
            correct_ionosphere: true,
            correct_troposphere: true,
            atmosphere: AtmosphereConfig::default(),
        }
    }
}

/// Diagnostics for a source that survived masking in the final iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct UsedSource {
    pub source: SourceId,
    pub elevation: f64,
    pub azimuth: f64,
    /// Post-fit residual b - H dx (m).
    pub residual: f64,
    /// Unit line-of-sight, receiver to source, at the final linearization.
    pub unit_los: [f64; 3],
}

/// One iteration of the trace: which sources survived the mask decisions
/// (made at the pre-update estimate) and the estimate after the update.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub estimate: EcefVector,
    pub mask_active: bool,
    pub used: Vec<SourceId>,
    pub masked: Vec<SourceId>,
    pub dx_norm: f64,
}

/// Converged (or best-effort) epoch solution.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionSolution {
    pub position: EcefVector,
    /// Receiver clock offset (s).
    pub clock_offset: f64,
    /// (H'H)^-1 of the final iteration.
    pub covariance: Matrix4<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub sources: Vec<UsedSource>,
    pub n_satellites: usize,
    pub n_haps: usize,
    pub trace: Vec<IterationRecord>,
}

impl PositionSolution {
    pub fn geodetic(&self) -> Option<GeodeticCoord> {
        ecef_to_geodetic(&self.position).ok()
    }
}

/// Evaluate the atmospheric delay models a satellite signal sees at the
/// given receiver/geometry, honoring the configuration toggles. Elevations
/// below the troposphere model's floor are held at the floor so an
/// aggressive mask cannot push the model out of its domain. Both the solver
/// correction and simulation-mode synthesis call this, so the two sides use
/// bit-identical models.
pub fn modeled_delays(
    iono: Option<&IonoParameters>,
    receiver: &GeodeticCoord,
    elevation: f64,
    azimuth: f64,
    gps_sow: f64,
    cfg: &SolverConfig,
) -> AtmosphericDelays {
    let mut delays = AtmosphericDelays::default();
    if cfg.correct_troposphere {
        let el = elevation.max(TROPO_ELEVATION_FLOOR);
        if let Ok(d_trop) = saastamoinen_delay(receiver, el, &cfg.atmosphere) {
            delays.d_trop = d_trop;
        }
    }
    if cfg.correct_ionosphere {
        if let Some(iono) = iono {
            if let Ok(d_ion) =
                klobuchar_delay(iono, receiver, elevation.max(1e-6), azimuth, gps_sow)
            {
                delays.d_ion = d_ion;
            }
        }
    }
    delays
}

/// Corrected pseudorange per the measurement's source kind: satellites get
/// `p + c dT - d_trop - d_ion`; HAPS pseudoranges pass through unchanged
/// because their error budget is already folded into the synthesis noise and
/// their signal path never crosses the ionosphere.
pub fn correct_pseudorange(
    m: &RangingMeasurement,
    receiver: &GeodeticCoord,
    elevation: f64,
    azimuth: f64,
    iono: Option<&IonoParameters>,
    cfg: &SolverConfig,
    t: &GpsTime,
) -> f64 {
    if m.source.is_haps() {
        return m.pseudorange;
    }
    let delays = modeled_delays(iono, receiver, elevation, azimuth, t.sow, cfg);
    m.pseudorange + SPEED_OF_LIGHT * m.clock_offset - delays.d_trop - delays.d_ion
}

struct Row {
    source: SourceId,
    elevation: f64,
    azimuth: f64,
    unit_los: [f64; 3],
    b: f64,
    /// Sagnac-rotated source position backing this row.
    rotated: EcefVector,
    /// Corrected pseudorange backing this row.
    p_c: f64,
}

/// Bancroft's closed-form position/clock solve over rows of (source position
/// in the reception frame, corrected pseudorange). Returns the candidate
/// whose position lies nearer the Earth's surface, or `None` when the
/// normal matrix is singular or the quadratic has no real root.
fn bancroft(rows: &[(EcefVector, f64)]) -> Option<(EcefVector, f64)> {
    let n = rows.len();
    let lorentz = |a: &[f64; 4], b: &[f64; 4]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2] - a[3] * b[3];

    let mut b_mat = DMatrix::zeros(n, 4);
    let mut alpha = DVector::zeros(n);
    for (i, (pos, p_c)) in rows.iter().enumerate() {
        let row = [pos.x, pos.y, pos.z, *p_c];
        b_mat[(i, 0)] = row[0];
        b_mat[(i, 1)] = row[1];
        b_mat[(i, 2)] = row[2];
        b_mat[(i, 3)] = row[3];
        alpha[i] = 0.5 * lorentz(&row, &row);
    }
    // Pseudo-inverse through the SVD of B itself; forming B'B squares the
    // conditioning and the mixed position/range column scales make the
    // normal-equation inverse unusable in double precision.
    let svd = b_mat.svd(true, true);
    let s_max = svd.singular_values.max();
    if s_max <= 0.0 || !s_max.is_finite() {
        return None;
    }
    if svd.singular_values.min() <= s_max * 1e-13 {
        return None; // rank-deficient: no closed-form solution
    }
    let pinv = svd.pseudo_inverse(s_max * 1e-13).ok()?;

    let apply_m = |v: DVector<f64>| [v[0], v[1], v[2], -v[3]];
    let u = apply_m(&pinv * DVector::from_element(n, 1.0));
    let v = apply_m(&pinv * alpha);

    let e = lorentz(&u, &u);
    let f = lorentz(&u, &v) - 1.0;
    let g = lorentz(&v, &v);
    if e.abs() < 1e-30 {
        return None;
    }
    let disc = f * f - e * g;
    if disc < 0.0 || !disc.is_finite() {
        return None;
    }
    let roots = [(-f + disc.sqrt()) / e, (-f - disc.sqrt()) / e];
    let candidates = roots.map(|lambda| {
        (
            EcefVector::new(lambda * u[0] + v[0], lambda * u[1] + v[1], lambda * u[2] + v[2]),
            lambda * u[3] + v[3],
        )
    });

    const MEAN_EARTH_RADIUS: f64 = 6.371e6;
    let pick = if (candidates[0].0.norm() - MEAN_EARTH_RADIUS).abs()
        <= (candidates[1].0.norm() - MEAN_EARTH_RADIUS).abs()
    {
        0
    } else {
        1
    };
    if !candidates[pick].0.is_finite() || !candidates[pick].1.is_finite() {
        return None;
    }
    Some(candidates[pick])
}

/// Solve one epoch. `measurements` carry raw pseudoranges and emission-time
/// source positions; `iono` supplies Klobuchar coefficients when ionospheric
/// correction is enabled.
pub fn solve_epoch(
    measurements: &[RangingMeasurement],
    cfg: &SolverConfig,
    iono: Option<&IonoParameters>,
    t: &GpsTime,
) -> Result<PositionSolution, SolverError> {
    if measurements.is_empty() {
        return Err(SolverError::NoMeasurements);
    }
    if measurements.len() < 4 {
        return Err(SolverError::InsufficientSources { available: measurements.len() });
    }

    let mask_rad = cfg.elevation_mask_deg.to_radians();
    let mut estimate = EcefVector::new(0.0, 0.0, 0.0);
    let mut clock_offset = 0.0;
    let mut converged = false;
    let mut trace = Vec::new();
    let mut final_rows: Vec<Row> = Vec::new();
    let mut final_h: Option<DMatrix<f64>> = None;
    let mut final_dx = DVector::zeros(4);
    let mut iterations = 0;

    for _ in 0..cfg.max_iterations {
        iterations += 1;

        let receiver_geo = ecef_to_geodetic(&estimate).ok();
        let mask_active = receiver_geo
            .map(|g| g.height.abs() <= BOOTSTRAP_HEIGHT_LIMIT)
            .unwrap_or(false);

        let mut rows = Vec::with_capacity(measurements.len());
        let mut masked = Vec::new();
        for m in measurements {
            let (p_c, elevation, azimuth) = if mask_active {
                let geo = receiver_geo.expect("mask_active implies valid geodetic");
                let Ok((el, az)) = elevation_azimuth(&estimate, &m.position) else {
                    masked.push(m.source);
                    continue;
                };
                if el < mask_rad || el <= 0.0 {
                    masked.push(m.source);
                    continue;
                }
                (correct_pseudorange(m, &geo, el, az, iono, cfg, t), el, az)
            } else {
                // Bootstrap: no mask, no atmosphere; the clock term still
                // applies.
                let p_c = if m.source.is_haps() {
                    m.pseudorange
                } else {
                    m.pseudorange + SPEED_OF_LIGHT * m.clock_offset
                };
                (p_c, 0.0, 0.0)
            };

            let transit = p_c / SPEED_OF_LIGHT;
            let Ok(rotated) = sagnac_rotate(&m.position, transit.clamp(0.0, 0.999)) else {
                masked.push(m.source);
                continue;
            };
            let los = rotated.sub(&estimate);
            let range = los.norm();
            if range == 0.0 {
                masked.push(m.source);
                continue;
            }
            let u = los.scale(1.0 / range);
            rows.push(Row {
                source: m.source,
                elevation,
                azimuth,
                unit_los: [u.x, u.y, u.z],
                b: p_c - range,
                rotated,
                p_c,
            });
        }

        if rows.len() < 4 {
            return Err(SolverError::InsufficientSources { available: rows.len() });
        }

        let mut h = DMatrix::zeros(rows.len(), 4);
        let mut b = DVector::zeros(rows.len());
        for (i, row) in rows.iter().enumerate() {
            h[(i, 0)] = -row.unit_los[0];
            h[(i, 1)] = -row.unit_los[1];
            h[(i, 2)] = -row.unit_los[2];
            h[(i, 3)] = 1.0;
            b[i] = row.b;
        }

        let closed_form = if mask_active {
            None
        } else {
            let pairs: Vec<(EcefVector, f64)> =
                rows.iter().map(|r| (r.rotated, r.p_c)).collect();
            bancroft(&pairs)
        };

        let (dx, dx_norm) = if let Some((position, c_dt)) = closed_form {
            let step = position.sub(&estimate);
            let dx_norm = step.norm();
            estimate = position;
            clock_offset = c_dt / SPEED_OF_LIGHT;
            (DVector::from_vec(vec![step.x, step.y, step.z, c_dt]), dx_norm)
        } else {
            // Orthogonal factorization for conditioning; identical to the
            // normal equations in exact arithmetic.
            let svd = h.clone().svd(true, true);
            let s_max = svd.singular_values.max();
            let s_min = svd.singular_values.min();
            if s_min <= 0.0 || (s_max / s_min).powi(2) > CONDITION_LIMIT {
                return Err(SolverError::DegenerateGeometry);
            }
            let dx = svd.solve(&b, 0.0).map_err(|_| SolverError::DegenerateGeometry)?;
            estimate =
                EcefVector::new(estimate.x + dx[0], estimate.y + dx[1], estimate.z + dx[2]);
            clock_offset = dx[3] / SPEED_OF_LIGHT;
            let dx_norm = (dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2]).sqrt();
            (dx, dx_norm)
        };

        trace.push(IterationRecord {
            estimate,
            mask_active,
            used: rows.iter().map(|r| r.source).collect(),
            masked,
            dx_norm,
        });

        final_dx = dx;
        final_h = Some(h);
        final_rows = rows;

        // The closed-form bootstrap step never counts as convergence; the
        // least-squares refinement must confirm it.
        if mask_active && dx_norm < cfg.convergence_threshold_m {
            converged = true;
            break;
        }
    }

    let h = final_h.expect("at least one iteration ran");
    let hth = Matrix4::from_iterator((h.transpose() * &h).iter().copied());
    let covariance = hth.try_inverse().ok_or(SolverError::DegenerateGeometry)?;

    let residual_vec = {
        let mut b = DVector::zeros(final_rows.len());
        for (i, row) in final_rows.iter().enumerate() {
            b[i] = row.b;
        }
        b - &h * &final_dx
    };

    let sources: Vec<UsedSource> = final_rows
        .iter()
        .enumerate()
        .map(|(i, row)| UsedSource {
            source: row.source,
            elevation: row.elevation,
            azimuth: row.azimuth,
            residual: residual_vec[i],
            unit_los: row.unit_los,
        })
        .collect();
    let n_haps = sources.iter().filter(|s| s.source.is_haps()).count();
    let n_satellites = sources.len() - n_haps;

    Ok(PositionSolution {
        position: estimate,
        clock_offset,
        covariance,
        iterations,
        converged,
        sources,
        n_satellites,
        n_haps,
        trace,
    })
}

/// Receiver clock offset from the ground-truth position: the mean over
/// corrected satellite pseudoranges of `(p_c - rho(truth)) / c`, with rho
/// measured to the Sagnac-rotated source position as in the solver.
pub fn estimate_receiver_clock(
    truth: &EcefVector,
    corrected: &[(EcefVector, f64)],
) -> Result<f64, SolverError> {
    if corrected.is_empty() {
        return Err(SolverError::NoMeasurements);
    }
    let mut sum = 0.0;
    for (position, p_c) in corrected {
        let transit = (p_c / SPEED_OF_LIGHT).clamp(0.0, 0.999);
        let rotated = sagnac_rotate(position, transit).expect("transit clamped into range");
        sum += (p_c - rotated.distance(truth)) / SPEED_OF_LIGHT;
    }
    Ok(sum / corrected.len() as f64)
}
