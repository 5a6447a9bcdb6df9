//! Scenario execution: measurement assembly, the per-epoch solve, and
//! result aggregation.
//!
//! Assembly is sequential by construction (the satellite Gauss-Markov
//! processes are stateful across epochs); per-epoch randomness for HAPS is
//! drawn from streams keyed on (seed, platform, epoch) so outputs never
//! depend on scheduling. Solving is pure per epoch and may fan out to a
//! thread pool; records are merged back in epoch order.

use std::collections::BTreeMap;
use std::path::Path;

use super::config::{ExperimentInputs, Mode, Scenario};
use super::{ScenarioError, SystemConfiguration};
use crate::constants::SPEED_OF_LIGHT;
use crate::ephemeris::{satellite_clock_offset_with, satellite_position, select_ephemeris};
use crate::error_models::{los_gate, stream, GaussMarkov};
use crate::geodesy::{ecef_to_geodetic, elevation_azimuth, sagnac_rotate, EcefVector};
use crate::haps::{synth_pseudorange_exp, synth_pseudorange_sim};
use crate::metrics::{self, cdf, CdfSeries, EpochMetrics};
use crate::rinex::{parse_navigation, parse_observation, BroadcastEphemeris, IonoParameters};
use crate::solver::{
    correct_pseudorange, estimate_receiver_clock, solve_epoch, PositionSolution,
    RangingMeasurement, SolverError, SourceId,
};
use crate::time::GpsTime;

/// Outcome classification for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochStatus {
    Ok,
    NotConverged,
    InsufficientSources,
    DegenerateGeometry,
    NoGroundTruth,
}

impl EpochStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            EpochStatus::Ok => "ok",
            EpochStatus::NotConverged => "not_converged",
            EpochStatus::InsufficientSources => "insufficient_sources",
            EpochStatus::DegenerateGeometry => "degenerate_geometry",
            EpochStatus::NoGroundTruth => "no_ground_truth",
        }
    }
}

impl std::fmt::Display for EpochStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything known about one processed epoch.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch_s: f64,
    pub status: EpochStatus,
    pub truth: Option<EcefVector>,
    pub solution: Option<PositionSolution>,
    pub metrics: Option<EpochMetrics>,
    /// Sources used in the final solve when a solution exists, otherwise the
    /// counts assembled for the epoch.
    pub n_satellites: usize,
    pub n_haps: usize,
    pub iterations: usize,
}

/// Aggregate figures for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub epochs: usize,
    pub converged: usize,
    pub convergence_rate: f64,
    pub median_error_3d: f64,
    pub p95_error_3d: f64,
    pub mean_hdop: f64,
}

/// Fields that must agree for runs to be compared system-against-system.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareKey {
    pub mode: Mode,
    pub seed: u64,
    pub gm_sigma: f64,
    pub gm_tau: f64,
    pub grid: Option<(i32, f64, f64, usize)>,
    pub waypoints: Vec<(f64, (f64, f64, f64))>,
    pub inputs: Option<(String, String, String)>,
}

impl CompareKey {
    fn of(scenario: &Scenario) -> Self {
        Self {
            mode: scenario.mode,
            seed: scenario.seed,
            gm_sigma: scenario.gm_sigma,
            gm_tau: scenario.gm_tau,
            grid: scenario.time.map(|g| (g.start.week, g.start.sow, g.interval, g.count)),
            waypoints: scenario
                .waypoints
                .iter()
                .map(|(t, p)| (*t, (p.x, p.y, p.z)))
                .collect(),
            inputs: scenario.inputs.as_ref().map(|i| {
                (
                    i.observation.display().to_string(),
                    i.navigation.display().to_string(),
                    i.ground_truth.display().to_string(),
                )
            }),
        }
    }
}

/// The output of one scenario run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub scenario_name: String,
    pub system: SystemConfiguration,
    pub seed: u64,
    pub records: Vec<EpochRecord>,
    /// Empirical CDF of 3D error over converged epochs.
    pub cdf: Option<CdfSeries>,
    pub summary: RunSummary,
    pub compare_key: CompareKey,
    /// Observation epochs the RINEX parser had to drop (experiment mode).
    pub dropped_obs_epochs: usize,
}

struct EpochInput {
    epoch_s: f64,
    t: GpsTime,
    truth: Option<EcefVector>,
    measurements: Vec<RangingMeasurement>,
    n_satellites: usize,
    n_haps: usize,
    pre_status: Option<EpochStatus>,
}

/// Execute a scenario. `threads` > 1 fans the per-epoch solves out to that
/// many workers; the output is identical for any thread count.
pub fn run_scenario(scenario: &Scenario, threads: usize) -> Result<RunResult, ScenarioError> {
    let (inputs, iono, dropped) = match scenario.mode {
        Mode::Simulation => {
            let inputs = assemble_simulation(scenario)?;
            (inputs, scenario.iono, 0)
        }
        Mode::Experiment => assemble_experiment(scenario)?,
    };

    if scenario.solver.correct_ionosphere && iono.is_none() && uses_satellites(scenario) {
        return Err(ScenarioError::Data(
            "ionospheric correction enabled but no Klobuchar coefficients available".into(),
        ));
    }

    let records = solve_all(&inputs, scenario, iono.as_ref(), threads);

    let converged_errors: Vec<f64> = records
        .iter()
        .filter(|r| r.status == EpochStatus::Ok)
        .filter_map(|r| r.metrics.as_ref().map(|m| m.error_3d))
        .collect();
    let cdf_series = if converged_errors.is_empty() {
        None
    } else {
        Some(cdf(&converged_errors).expect("non-empty"))
    };

    let converged = records.iter().filter(|r| r.status == EpochStatus::Ok).count();
    let hdops: Vec<f64> = records
        .iter()
        .filter(|r| r.status == EpochStatus::Ok)
        .filter_map(|r| r.metrics.as_ref().map(|m| m.hdop))
        .collect();
    let summary = RunSummary {
        epochs: records.len(),
        converged,
        convergence_rate: if records.is_empty() {
            0.0
        } else {
            converged as f64 / records.len() as f64
        },
        median_error_3d: cdf_series.as_ref().map(|c| c.median()).unwrap_or(f64::NAN),
        p95_error_3d: cdf_series.as_ref().map(|c| c.percentile(0.95)).unwrap_or(f64::NAN),
        mean_hdop: if hdops.is_empty() {
            f64::NAN
        } else {
            hdops.iter().sum::<f64>() / hdops.len() as f64
        },
    };

    Ok(RunResult {
        scenario_name: scenario.name.clone(),
        system: scenario.system,
        seed: scenario.seed,
        records,
        cdf: cdf_series,
        summary,
        compare_key: CompareKey::of(scenario),
        dropped_obs_epochs: dropped,
    })
}

fn uses_satellites(scenario: &Scenario) -> bool {
    scenario.system.uses_gps()
}

// --- simulation assembly ------------------------------------------------------

/// Satellite emission state consistent with the solver's model: iterate the
/// transit time until the reception-frame range converges.
fn light_time_solve(
    eph: &BroadcastEphemeris,
    t_rx: &GpsTime,
    truth: &EcefVector,
) -> Option<(EcefVector, f64, GpsTime)> {
    let mut transit = 0.075;
    let mut position = EcefVector::default();
    let mut t_tx = *t_rx;
    for _ in 0..3 {
        t_tx = t_rx.add_seconds(-transit);
        position = satellite_position(eph, &t_tx).ok()?;
        let range = sagnac_rotate(&position, transit).ok()?.distance(truth);
        transit = range / SPEED_OF_LIGHT;
    }
    Some((position, transit * SPEED_OF_LIGHT, t_tx))
}

fn assemble_simulation(scenario: &Scenario) -> Result<Vec<EpochInput>, ScenarioError> {
    let grid = scenario.time.expect("validated simulation grid");

    // One Gauss-Markov stream per PRN, stepped every epoch whether or not
    // the satellite ends up visible, so error histories do not depend on
    // geometry or environment.
    let mut gm_streams: BTreeMap<u8, GaussMarkov> = BTreeMap::new();
    if scenario.system.uses_gps() {
        for eph in &scenario.almanac {
            let rng = stream(scenario.seed, "sat_gm", u64::from(eph.prn), 0);
            let gm = GaussMarkov::init(scenario.gm_sigma, scenario.gm_tau, rng)
                .map_err(|e| ScenarioError::Validation(e.to_string()))?;
            gm_streams.insert(eph.prn, gm);
        }
    }

    let mut inputs = Vec::with_capacity(grid.count);
    for k in 0..grid.count {
        let epoch_s = k as f64 * grid.interval;
        let t_rx = grid.start.add_seconds(epoch_s);
        let truth = scenario.truth_at(epoch_s);
        let truth_geo = ecef_to_geodetic(&truth)
            .map_err(|e| ScenarioError::Data(format!("invalid truth position: {e}")))?;
        let env = scenario
            .environment_at(epoch_s)
            .ok_or_else(|| ScenarioError::Data(format!("timeline does not cover {epoch_s} s")))?;

        let mut measurements = Vec::new();
        let mut n_satellites = 0;

        if scenario.system.uses_gps() {
            for eph in &scenario.almanac {
                let gm = gm_streams.get_mut(&eph.prn).expect("stream per almanac PRN");
                let gm_sample = if k == 0 { gm.value() } else { gm.step(grid.interval) };

                let Some((position, range, t_tx)) = light_time_solve(eph, &t_rx, &truth) else {
                    continue;
                };
                let Ok((elevation, azimuth)) = elevation_azimuth(&truth, &position) else {
                    continue;
                };
                if elevation <= 0.0 {
                    continue; // below the physical horizon at the truth
                }
                let clock_offset =
                    satellite_clock_offset_with(eph, &t_tx, scenario.relativistic_clock)
                        .unwrap_or(0.0);

                let mut pseudorange = range - SPEED_OF_LIGHT * clock_offset + gm_sample;
                if scenario.synthesize_atmosphere {
                    // Synthesis always applies both models; the solver's
                    // correction toggles decide whether they cancel.
                    let synth_cfg = crate::solver::SolverConfig {
                        correct_ionosphere: true,
                        correct_troposphere: true,
                        ..scenario.solver.clone()
                    };
                    let delays = crate::solver::modeled_delays(
                        scenario.iono.as_ref(),
                        &truth_geo,
                        elevation,
                        azimuth,
                        t_rx.sow,
                        &synth_cfg,
                    );
                    pseudorange += delays.d_ion + delays.d_trop;
                }
                measurements.push(RangingMeasurement {
                    source: SourceId::Satellite(eph.prn),
                    pseudorange,
                    position,
                    clock_offset,
                });
                n_satellites += 1;
            }
        }

        let mut n_haps = 0;
        let sigma = scenario.haps_sigma.for_environment(env);
        for (i, platform) in scenario.platforms.iter().enumerate() {
            let position = crate::haps::haps_position(platform, epoch_s);
            let Ok((elevation, _)) = elevation_azimuth(&truth, &position) else {
                continue;
            };
            if let Some(table) = scenario.los.for_environment(env) {
                let mut rng = stream(scenario.seed, "los", i as u64, k as u64);
                if !los_gate(table, elevation.max(0.0), &mut rng) {
                    continue;
                }
            }
            let mut rng = stream(scenario.seed, "haps_noise", i as u64, k as u64);
            let m = synth_pseudorange_sim(platform, &truth, epoch_s, sigma, &mut rng);
            measurements.push(RangingMeasurement {
                source: SourceId::Haps(i as u16),
                pseudorange: m.pseudorange,
                position: m.position,
                clock_offset: 0.0,
            });
            n_haps += 1;
        }

        inputs.push(EpochInput {
            epoch_s,
            t: t_rx,
            truth: Some(truth),
            measurements,
            n_satellites,
            n_haps,
            pre_status: None,
        });
    }
    Ok(inputs)
}

// --- experiment assembly --------------------------------------------------------

fn read_file(path: &Path) -> Result<Vec<u8>, ScenarioError> {
    std::fs::read(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })
}

fn parse_ground_truth(bytes: &[u8]) -> Result<Vec<(f64, EcefVector)>, ScenarioError> {
    let text = String::from_utf8_lossy(bytes);
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if idx == 0 && fields.first().map(|f| f.eq_ignore_ascii_case("epoch_s")).unwrap_or(false) {
            continue; // header
        }
        if fields.len() != 4 {
            return Err(ScenarioError::Data(format!(
                "ground truth line {} has {} fields, expected 4",
                idx + 1,
                fields.len()
            )));
        }
        let mut v = [0.0; 4];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field.parse::<f64>().map_err(|_| {
                ScenarioError::Data(format!("ground truth line {}: bad number '{field}'", idx + 1))
            })?;
        }
        rows.push((v[0], EcefVector::new(v[1], v[2], v[3])));
    }
    if rows.is_empty() {
        return Err(ScenarioError::Data("ground truth file has no rows".into()));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    Ok(rows)
}

fn lookup_truth(rows: &[(f64, EcefVector)], epoch_s: f64) -> Option<EcefVector> {
    let idx = rows.partition_point(|(t, _)| *t < epoch_s - 1e-3);
    rows.get(idx).filter(|(t, _)| (t - epoch_s).abs() <= 1e-3).map(|(_, p)| *p)
}

type ExperimentData = (Vec<EpochInput>, Option<IonoParameters>, usize);

fn assemble_experiment(scenario: &Scenario) -> Result<ExperimentData, ScenarioError> {
    let inputs_cfg: &ExperimentInputs = scenario.inputs.as_ref().expect("validated inputs");

    let nav = parse_navigation(&read_file(&inputs_cfg.navigation)?)?;
    if nav.ephemerides.is_empty() {
        return Err(ScenarioError::Data("navigation file yielded no usable ephemerides".into()));
    }
    let obs = parse_observation(&read_file(&inputs_cfg.observation)?)?;
    if obs.epochs.is_empty() {
        return Err(ScenarioError::Data("observation file yielded no usable epochs".into()));
    }
    let truth_rows = parse_ground_truth(&read_file(&inputs_cfg.ground_truth)?)?;

    // Header coefficients take precedence; scenario values are the fallback.
    let iono = nav.iono.or(scenario.iono);

    let t0 = obs.epochs[0].epoch;
    let span = obs.epochs.last().unwrap().epoch.diff(&t0);
    if super::config::timeline_covers(&scenario.timeline, span) {
        // covered
    } else {
        return Err(ScenarioError::Data(format!(
            "environment timeline does not cover the observation span of {span:.0} s"
        )));
    }

    let mask_rad = scenario.solver.elevation_mask_deg.to_radians();
    let mut inputs = Vec::with_capacity(obs.epochs.len());
    for (k, epoch) in obs.epochs.iter().enumerate() {
        let t_rx = epoch.epoch;
        let epoch_s = t_rx.diff(&t0);
        let env = scenario
            .environment_at(epoch_s)
            .ok_or_else(|| ScenarioError::Data(format!("timeline does not cover {epoch_s} s")))?;

        let mut measurements = Vec::new();
        let mut n_satellites = 0;
        let mut entries = epoch.entries.clone();
        entries.sort_by_key(|(prn, _)| *prn);
        for (prn, p_raw) in entries {
            let Ok(eph) = select_ephemeris(&nav.ephemerides, prn, &t_rx) else {
                continue; // no usable ephemeris for this satellite
            };
            let transit = p_raw / SPEED_OF_LIGHT;
            let coarse_tx = t_rx.add_seconds(-transit);
            let Ok(clock_offset) =
                satellite_clock_offset_with(eph, &coarse_tx, scenario.relativistic_clock)
            else {
                continue;
            };
            let t_tx = t_rx.add_seconds(-transit - clock_offset);
            let Ok(position) = satellite_position(eph, &t_tx) else {
                continue;
            };
            measurements.push(RangingMeasurement {
                source: SourceId::Satellite(prn),
                pseudorange: p_raw,
                position,
                clock_offset,
            });
            n_satellites += 1;
        }

        let truth = lookup_truth(&truth_rows, epoch_s);
        let Some(truth_pos) = truth else {
            inputs.push(EpochInput {
                epoch_s,
                t: t_rx,
                truth: None,
                measurements: Vec::new(),
                n_satellites,
                n_haps: 0,
                pre_status: Some(EpochStatus::NoGroundTruth),
            });
            continue;
        };

        // Receiver clock from the ground truth, then HAPS synthesis on top.
        let mut n_haps = 0;
        if !scenario.platforms.is_empty() {
            let truth_geo = ecef_to_geodetic(&truth_pos)
                .map_err(|e| ScenarioError::Data(format!("invalid ground truth: {e}")))?;
            let mut corrected = Vec::new();
            for m in &measurements {
                let Ok((el, az)) = elevation_azimuth(&truth_pos, &m.position) else {
                    continue;
                };
                if el < mask_rad {
                    continue;
                }
                let p_c =
                    correct_pseudorange(m, &truth_geo, el, az, iono.as_ref(), &scenario.solver, &t_rx);
                corrected.push((m.position, p_c));
            }
            if let Ok(dt_rx) = estimate_receiver_clock(&truth_pos, &corrected) {
                let sigma = scenario.haps_sigma.for_environment(env);
                for (i, platform) in scenario.platforms.iter().enumerate() {
                    let position = crate::haps::haps_position(platform, epoch_s);
                    let Ok((elevation, _)) = elevation_azimuth(&truth_pos, &position) else {
                        continue;
                    };
                    if let Some(table) = scenario.los.for_environment(env) {
                        let mut rng = stream(scenario.seed, "los", i as u64, k as u64);
                        if !los_gate(table, elevation.max(0.0), &mut rng) {
                            continue;
                        }
                    }
                    let mut rng = stream(scenario.seed, "haps_noise", i as u64, k as u64);
                    let m =
                        synth_pseudorange_exp(platform, &truth_pos, dt_rx, epoch_s, sigma, &mut rng);
                    measurements.push(RangingMeasurement {
                        source: SourceId::Haps(i as u16),
                        pseudorange: m.pseudorange,
                        position: m.position,
                        clock_offset: 0.0,
                    });
                    n_haps += 1;
                }
            }
        }

        inputs.push(EpochInput {
            epoch_s,
            t: t_rx,
            truth,
            measurements,
            n_satellites,
            n_haps,
            pre_status: None,
        });
    }

    Ok((inputs, iono, obs.dropped_epochs))
}

// --- solving -------------------------------------------------------------------

fn solve_one(input: &EpochInput, scenario: &Scenario, iono: Option<&IonoParameters>) -> EpochRecord {
    if let Some(status) = input.pre_status {
        return EpochRecord {
            epoch_s: input.epoch_s,
            status,
            truth: input.truth,
            solution: None,
            metrics: None,
            n_satellites: input.n_satellites,
            n_haps: input.n_haps,
            iterations: 0,
        };
    }

    match solve_epoch(&input.measurements, &scenario.solver, iono, &input.t) {
        Ok(solution) => {
            let status =
                if solution.converged { EpochStatus::Ok } else { EpochStatus::NotConverged };
            let metrics = build_metrics(&solution, input);
            EpochRecord {
                epoch_s: input.epoch_s,
                status,
                truth: input.truth,
                n_satellites: solution.n_satellites,
                n_haps: solution.n_haps,
                iterations: solution.iterations,
                metrics,
                solution: Some(solution),
            }
        }
        Err(err) => {
            let status = match err {
                SolverError::DegenerateGeometry => EpochStatus::DegenerateGeometry,
                SolverError::InsufficientSources { .. } | SolverError::NoMeasurements => {
                    EpochStatus::InsufficientSources
                }
            };
            EpochRecord {
                epoch_s: input.epoch_s,
                status,
                truth: input.truth,
                solution: None,
                metrics: None,
                n_satellites: input.n_satellites,
                n_haps: input.n_haps,
                iterations: 0,
            }
        }
    }
}

fn build_metrics(solution: &PositionSolution, input: &EpochInput) -> Option<EpochMetrics> {
    let geo = solution.geodetic()?;
    let local = metrics::covariance_to_local(&solution.covariance, &geo).ok()?;
    let error = input
        .truth
        .map(|t| metrics::error_3d(&solution.position, &t))
        .unwrap_or(f64::NAN);
    Some(EpochMetrics {
        epoch_s: input.epoch_s,
        hdop: metrics::hdop(&local),
        pdop: metrics::pdop(&local),
        vdop: metrics::vdop(&local),
        error_3d: error,
        n_satellites: solution.n_satellites,
        n_haps: solution.n_haps,
        converged: solution.converged,
        clock_offset: solution.clock_offset,
    })
}

#[cfg(not(target_arch = "wasm32"))]
fn solve_all(
    inputs: &[EpochInput],
    scenario: &Scenario,
    iono: Option<&IonoParameters>,
    threads: usize,
) -> Vec<EpochRecord> {
    let threads = threads.max(1).min(inputs.len().max(1));
    if threads == 1 {
        return inputs.iter().map(|i| solve_one(i, scenario, iono)).collect();
    }
    // Stride partition: worker w takes epochs w, w+T, w+2T, ... and results
    // are merged back by index, so the record order is schedule-independent.
    let mut slots: Vec<Option<EpochRecord>> = vec![None; inputs.len()];
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(threads);
        for w in 0..threads {
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                let mut idx = w;
                while idx < inputs.len() {
                    out.push((idx, solve_one(&inputs[idx], scenario, iono)));
                    idx += threads;
                }
                out
            }));
        }
        for handle in handles {
            for (idx, record) in handle.join().expect("solver worker panicked") {
                slots[idx] = Some(record);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every epoch solved")).collect()
}

#[cfg(target_arch = "wasm32")]
fn solve_all(
    inputs: &[EpochInput],
    scenario: &Scenario,
    iono: Option<&IonoParameters>,
    _threads: usize,
) -> Vec<EpochRecord> {
    inputs.iter().map(|i| solve_one(i, scenario, iono)).collect()
}

// --- comparison -------------------------------------------------------------------

/// Side-by-side percentile table across runs of different system
/// configurations. All runs must share trajectory, seed, epoch grid, and
/// satellite error configuration.
pub fn compare_systems(results: &[RunResult]) -> Result<super::Comparison, ScenarioError> {
    let first = results
        .first()
        .ok_or_else(|| ScenarioError::Mismatch("no runs to compare".into()))?;
    for r in results.iter().skip(1) {
        if r.compare_key != first.compare_key {
            return Err(ScenarioError::Mismatch(format!(
                "run '{}' differs in trajectory, seed, timing, or satellite error configuration",
                r.scenario_name
            )));
        }
    }
    let rows = results
        .iter()
        .map(|r| super::ComparisonRow {
            system: r.system,
            scenario_name: r.scenario_name.clone(),
            median_error_3d: r.cdf.as_ref().map(|c| c.median()).unwrap_or(f64::NAN),
            p68_error_3d: r.cdf.as_ref().map(|c| c.percentile(0.68)).unwrap_or(f64::NAN),
            p95_error_3d: r.cdf.as_ref().map(|c| c.percentile(0.95)).unwrap_or(f64::NAN),
            p99_error_3d: r.cdf.as_ref().map(|c| c.percentile(0.99)).unwrap_or(f64::NAN),
            mean_hdop: r.summary.mean_hdop,
            convergence_rate: r.summary.convergence_rate,
        })
        .collect();
    Ok(super::Comparison { rows })
}
