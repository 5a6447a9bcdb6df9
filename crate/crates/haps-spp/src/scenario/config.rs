//! Scenario file schema and validation.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{ScenarioError, SystemConfiguration};
use crate::atmosphere::AtmosphereConfig;
use crate::error_models::{Environment, LosProbabilityTable};
use crate::geodesy::{geodetic_to_ecef, EcefVector, GeodeticCoord};
use crate::haps::HapsPlatform;
use crate::rinex::{BroadcastEphemeris, IonoParameters};
use crate::solver::SolverConfig;
use crate::time::GpsTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulation,
    Experiment,
}

/// Simulation epoch grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: GpsTime,
    pub interval: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn duration(&self) -> f64 {
        self.interval * self.count.saturating_sub(1) as f64
    }
}

/// Experiment-mode input files, resolved against the scenario file location.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentInputs {
    pub observation: PathBuf,
    pub navigation: PathBuf,
    pub ground_truth: PathBuf,
}

/// HAPS noise per environment (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HapsSigma {
    pub suburban: f64,
    pub dense_urban: f64,
}

impl HapsSigma {
    pub fn for_environment(&self, env: Environment) -> f64 {
        match env {
            Environment::Suburban => self.suburban,
            Environment::DenseUrban => self.dense_urban,
        }
    }
}

/// One contiguous stretch of the trajectory with a fixed environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub kind: Environment,
}

/// LOS probability tables per environment; a missing table means HAPS are
/// always line-of-sight in that environment.
#[derive(Debug, Clone, Default)]
pub struct LosTables {
    pub suburban: Option<LosProbabilityTable>,
    pub dense_urban: Option<LosProbabilityTable>,
}

impl LosTables {
    pub fn for_environment(&self, env: Environment) -> Option<&LosProbabilityTable> {
        match env {
            Environment::Suburban => self.suburban.as_ref(),
            Environment::DenseUrban => self.dense_urban.as_ref(),
        }
    }
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    pub seed: u64,
    pub system: SystemConfiguration,
    pub solver: SolverConfig,
    pub relativistic_clock: bool,
    /// Simulation mode: add the modeled atmospheric delays to synthesized
    /// satellite pseudoranges (the solver then removes them with the same
    /// models; disabling one side studies model mismatch).
    pub synthesize_atmosphere: bool,
    /// Klobuchar coefficients from the scenario file.
    pub iono: Option<IonoParameters>,
    pub time: Option<TimeGrid>,
    /// Truth trajectory waypoints (seconds from start, ECEF), simulation mode.
    pub waypoints: Vec<(f64, EcefVector)>,
    /// Synthetic constellation, simulation mode.
    pub almanac: Vec<BroadcastEphemeris>,
    pub gm_sigma: f64,
    pub gm_tau: f64,
    pub haps_sigma: HapsSigma,
    pub platforms: Vec<HapsPlatform>,
    pub timeline: Vec<EnvironmentSegment>,
    pub los: LosTables,
    pub inputs: Option<ExperimentInputs>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Scenario::from_toml_str(&text, base)
    }

    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text)?;
        file.validate(base_dir)
    }

    /// Environment in force at `epoch_s`, if the timeline covers it.
    pub fn environment_at(&self, epoch_s: f64) -> Option<Environment> {
        self.timeline
            .iter()
            .find(|seg| epoch_s >= seg.start_s && epoch_s < seg.end_s)
            .or_else(|| {
                self.timeline.last().filter(|seg| (epoch_s - seg.end_s).abs() < 1e-9)
            })
            .map(|seg| seg.kind)
    }

    /// A variant of this scenario running a different system configuration,
    /// keeping trajectory, seed, timing and error models so the results stay
    /// comparable. Platforms are taken from the front of the platform list;
    /// the scenario must define at least as many as the target system needs.
    pub fn with_system(&self, system: SystemConfiguration) -> Result<Scenario, ScenarioError> {
        let needed = system.required_haps();
        if self.platforms.len() < needed {
            return Err(ScenarioError::Validation(format!(
                "system {} needs {} platform(s), scenario defines {}",
                system,
                needed,
                self.platforms.len()
            )));
        }
        if system.uses_gps() && self.mode == Mode::Simulation && self.almanac.is_empty() {
            return Err(ScenarioError::Validation(format!(
                "system {system} needs a satellite almanac"
            )));
        }
        let mut variant = self.clone();
        variant.system = system;
        variant.platforms.truncate(needed);
        variant.name = format!("{} [{}]", self.name, system);
        Ok(variant)
    }

    /// Truth position at `epoch_s`, linearly interpolated between waypoints
    /// in ECEF (simulation mode).
    pub fn truth_at(&self, epoch_s: f64) -> EcefVector {
        let points = &self.waypoints;
        if epoch_s <= points[0].0 {
            return points[0].1;
        }
        if let Some(last) = points.last() {
            if epoch_s >= last.0 {
                return last.1;
            }
        }
        for pair in points.windows(2) {
            let (t0, p0) = pair[0];
            let (t1, p1) = pair[1];
            if epoch_s <= t1 {
                let f = (epoch_s - t0) / (t1 - t0);
                return p0.add(&p1.sub(&p0).scale(f));
            }
        }
        points.last().unwrap().1
    }
}

// --- raw file schema ---------------------------------------------------------

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    mode: Mode,
    seed: u64,
    system: SystemConfiguration,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    atmosphere: AtmosphereSection,
    time: Option<TimeSection>,
    receiver: Option<ReceiverSection>,
    #[serde(default)]
    satellites: Vec<AlmanacEntry>,
    #[serde(default)]
    errors: ErrorsSection,
    #[serde(default)]
    haps: Vec<HapsEntry>,
    #[serde(default)]
    environment: Vec<EnvironmentEntry>,
    los: Option<LosSection>,
    inputs: Option<InputsSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    #[serde(default = "SolverSection::default_mask")]
    elevation_mask_deg: f64,
    #[serde(default = "SolverSection::default_threshold")]
    convergence_threshold_m: f64,
    #[serde(default = "SolverSection::default_max_iterations")]
    max_iterations: usize,
    #[serde(default = "default_true")]
    correct_ionosphere: bool,
    #[serde(default = "default_true")]
    correct_troposphere: bool,
    #[serde(default = "default_true")]
    relativistic_clock: bool,
}

impl SolverSection {
    fn default_mask() -> f64 {
        15.0
    }
    fn default_threshold() -> f64 {
        0.01
    }
    fn default_max_iterations() -> usize {
        20
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            elevation_mask_deg: Self::default_mask(),
            convergence_threshold_m: Self::default_threshold(),
            max_iterations: Self::default_max_iterations(),
            correct_ionosphere: true,
            correct_troposphere: true,
            relativistic_clock: true,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtmosphereSection {
    #[serde(default = "default_true")]
    enabled: bool,
    alpha: Option<[f64; 4]>,
    beta: Option<[f64; 4]>,
    #[serde(default = "AtmosphereSection::default_pressure")]
    pressure_hpa: f64,
    #[serde(default = "AtmosphereSection::default_temperature")]
    temperature_k: f64,
    #[serde(default = "AtmosphereSection::default_humidity")]
    relative_humidity: f64,
}

impl AtmosphereSection {
    fn default_pressure() -> f64 {
        1013.25
    }
    fn default_temperature() -> f64 {
        291.15
    }
    fn default_humidity() -> f64 {
        0.5
    }
}

impl Default for AtmosphereSection {
    fn default() -> Self {
        Self {
            enabled: true,
            alpha: None,
            beta: None,
            pressure_hpa: Self::default_pressure(),
            temperature_k: Self::default_temperature(),
            relative_humidity: Self::default_humidity(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    gps_week: i32,
    start_sow: f64,
    #[serde(default = "TimeSection::default_interval")]
    epoch_interval_s: f64,
    epoch_count: usize,
}

impl TimeSection {
    fn default_interval() -> f64 {
        1.0
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReceiverSection {
    waypoints: Vec<WaypointEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointEntry {
    t: f64,
    lat_deg: f64,
    lon_deg: f64,
    h_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlmanacEntry {
    prn: u8,
    sqrt_a: f64,
    #[serde(default)]
    e: f64,
    i0_deg: f64,
    raan_deg: f64,
    #[serde(default)]
    arg_perigee_deg: f64,
    m0_deg: f64,
    /// Ephemeris reference time; defaults to the scenario start.
    toe_sow: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ErrorsSection {
    satellite_gm: Option<GmEntry>,
    haps: Option<HapsErrorEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GmEntry {
    sigma_m: f64,
    tau_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HapsErrorEntry {
    suburban_sigma_m: f64,
    dense_urban_sigma_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HapsEntry {
    id: String,
    lat_deg: f64,
    lon_deg: f64,
    #[serde(default = "HapsEntry::default_height")]
    height_m: f64,
    #[serde(default)]
    radius_m: f64,
    /// Circle period in seconds; omitted or zero means stationary phase.
    period_s: Option<f64>,
    #[serde(default)]
    initial_phase_deg: f64,
}

impl HapsEntry {
    fn default_height() -> f64 {
        crate::haps::DEFAULT_HAPS_HEIGHT
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentEntry {
    start_s: f64,
    end_s: f64,
    kind: Environment,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LosSection {
    suburban: Option<Vec<LosPoint>>,
    dense_urban: Option<Vec<LosPoint>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LosPoint {
    elevation_deg: f64,
    probability: f64,
}

impl ScenarioFile {
    fn validate(self, base_dir: &Path) -> Result<Scenario, ScenarioError> {
        let invalid = |msg: String| Err(ScenarioError::Validation(msg));

        if !(0.0..90.0).contains(&self.solver.elevation_mask_deg) {
            return invalid(format!(
                "elevation mask {} outside [0, 90)",
                self.solver.elevation_mask_deg
            ));
        }
        if self.solver.convergence_threshold_m <= 0.0 {
            return invalid("convergence threshold must be positive".into());
        }
        if self.solver.max_iterations == 0 {
            return invalid("max_iterations must be at least 1".into());
        }

        let iono = match (self.atmosphere.alpha, self.atmosphere.beta) {
            (Some(alpha), Some(beta)) => {
                if alpha.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
                    return invalid("Klobuchar coefficients must be finite".into());
                }
                Some(IonoParameters { alpha, beta })
            }
            (None, None) => None,
            _ => return invalid("alpha and beta must be given together".into()),
        };

        // Platforms must match the system configuration exactly.
        if self.haps.len() != self.system.required_haps() {
            return invalid(format!(
                "system {} requires exactly {} HAPS platform(s), {} defined",
                self.system,
                self.system.required_haps(),
                self.haps.len()
            ));
        }
        let mut ids = BTreeSet::new();
        let mut platforms = Vec::with_capacity(self.haps.len());
        for h in &self.haps {
            if !ids.insert(h.id.clone()) {
                return invalid(format!("duplicate HAPS id '{}'", h.id));
            }
            if h.radius_m < 0.0 {
                return invalid(format!("HAPS '{}' has negative radius", h.id));
            }
            let angular_rate = match h.period_s {
                Some(p) if p > 0.0 => 2.0 * std::f64::consts::PI / p,
                Some(_) => return invalid(format!("HAPS '{}' period must be positive", h.id)),
                None => 0.0,
            };
            platforms.push(HapsPlatform {
                id: h.id.clone(),
                center: GeodeticCoord::from_degrees(h.lat_deg, h.lon_deg, h.height_m),
                radius: h.radius_m,
                angular_rate,
                initial_phase: h.initial_phase_deg.to_radians(),
                clock_offset: 0.0,
            });
        }

        // Environment timeline: contiguous, non-overlapping, in order.
        if self.environment.is_empty() {
            return invalid("at least one environment segment is required".into());
        }
        let mut timeline = Vec::with_capacity(self.environment.len());
        for e in &self.environment {
            if e.end_s <= e.start_s {
                return invalid(format!(
                    "environment segment [{}, {}) is empty or inverted",
                    e.start_s, e.end_s
                ));
            }
            timeline.push(EnvironmentSegment { start_s: e.start_s, end_s: e.end_s, kind: e.kind });
        }
        for pair in timeline.windows(2) {
            if (pair[1].start_s - pair[0].end_s).abs() > 1e-9 {
                return invalid(format!(
                    "environment timeline has a gap or overlap at {} s",
                    pair[0].end_s
                ));
            }
        }

        let los = match &self.los {
            None => LosTables::default(),
            Some(section) => {
                let build = |env: Environment, points: &Option<Vec<LosPoint>>| {
                    points
                        .as_ref()
                        .map(|pts| {
                            LosProbabilityTable::new(
                                env,
                                pts.iter().map(|p| (p.elevation_deg, p.probability)).collect(),
                            )
                        })
                        .transpose()
                };
                let tables = LosTables {
                    suburban: build(Environment::Suburban, &section.suburban)
                        .map_err(|e| ScenarioError::Validation(e.to_string()))?,
                    dense_urban: build(Environment::DenseUrban, &section.dense_urban)
                        .map_err(|e| ScenarioError::Validation(e.to_string()))?,
                };
                // Every environment used by the timeline needs its table.
                for seg in &timeline {
                    if tables.for_environment(seg.kind).is_none() {
                        return invalid(format!(
                            "LOS section present but no table for environment '{:?}'",
                            seg.kind
                        ));
                    }
                }
                tables
            }
        };

        let (gm_sigma, gm_tau) = match &self.errors.satellite_gm {
            Some(gm) => {
                if gm.sigma_m < 0.0 || gm.tau_s <= 0.0 {
                    return invalid("satellite_gm requires sigma_m >= 0 and tau_s > 0".into());
                }
                (gm.sigma_m, gm.tau_s)
            }
            None => (0.0, 10.0),
        };
        let haps_sigma = match &self.errors.haps {
            Some(h) => {
                if h.suburban_sigma_m < 0.0 || h.dense_urban_sigma_m < 0.0 {
                    return invalid("HAPS sigmas must be non-negative".into());
                }
                HapsSigma { suburban: h.suburban_sigma_m, dense_urban: h.dense_urban_sigma_m }
            }
            None => HapsSigma { suburban: 0.0, dense_urban: 0.0 },
        };

        let solver = SolverConfig {
            elevation_mask_deg: self.solver.elevation_mask_deg,
            convergence_threshold_m: self.solver.convergence_threshold_m,
            max_iterations: self.solver.max_iterations,
            correct_ionosphere: self.solver.correct_ionosphere,
            correct_troposphere: self.solver.correct_troposphere,
            atmosphere: AtmosphereConfig {
                pressure_hpa: self.atmosphere.pressure_hpa,
                temperature_k: self.atmosphere.temperature_k,
                relative_humidity: self.atmosphere.relative_humidity,
            },
        };

        let mut scenario = Scenario {
            name: self.name.unwrap_or_else(|| "unnamed".into()),
            mode: self.mode,
            seed: self.seed,
            system: self.system,
            solver,
            relativistic_clock: self.solver.relativistic_clock,
            synthesize_atmosphere: self.atmosphere.enabled,
            iono,
            time: None,
            waypoints: Vec::new(),
            almanac: Vec::new(),
            gm_sigma,
            gm_tau,
            haps_sigma,
            platforms,
            timeline,
            los,
            inputs: None,
        };

        match self.mode {
            Mode::Simulation => {
                let time = self
                    .time
                    .ok_or_else(|| ScenarioError::Validation("[time] required in simulation mode".into()))?;
                if time.epoch_count == 0 || time.epoch_interval_s <= 0.0 {
                    return invalid("epoch_count and epoch_interval_s must be positive".into());
                }
                let grid = TimeGrid {
                    start: GpsTime::new(time.gps_week, time.start_sow),
                    interval: time.epoch_interval_s,
                    count: time.epoch_count,
                };

                let receiver = self
                    .receiver
                    .ok_or_else(|| ScenarioError::Validation("[receiver] required in simulation mode".into()))?;
                if receiver.waypoints.is_empty() {
                    return invalid("receiver needs at least one waypoint".into());
                }
                let mut waypoints = Vec::with_capacity(receiver.waypoints.len());
                let mut prev_t = f64::NEG_INFINITY;
                for w in &receiver.waypoints {
                    if w.t <= prev_t {
                        return invalid("waypoint times must be strictly increasing".into());
                    }
                    prev_t = w.t;
                    let ecef =
                        geodetic_to_ecef(&GeodeticCoord::from_degrees(w.lat_deg, w.lon_deg, w.h_m));
                    waypoints.push((w.t, ecef));
                }

                if scenario.system.uses_gps() {
                    if self.satellites.is_empty() {
                        return invalid(format!(
                            "system {} needs a [[satellites]] almanac in simulation mode",
                            scenario.system
                        ));
                    }
                    if (scenario.synthesize_atmosphere || scenario.solver.correct_ionosphere)
                        && scenario.iono.is_none()
                    {
                        return invalid(
                            "simulation with ionosphere enabled requires [atmosphere] alpha/beta"
                                .into(),
                        );
                    }
                }
                let mut seen = BTreeSet::new();
                let mut almanac = Vec::with_capacity(self.satellites.len());
                for s in &self.satellites {
                    if !seen.insert(s.prn) {
                        return invalid(format!("duplicate almanac PRN {}", s.prn));
                    }
                    let toe_sow = s.toe_sow.unwrap_or(time.start_sow);
                    let toe = GpsTime::new(time.gps_week, toe_sow);
                    let eph = BroadcastEphemeris {
                        prn: s.prn,
                        toc: toe,
                        toe_sow: toe.sow,
                        week: toe.week,
                        af0: 0.0,
                        af1: 0.0,
                        af2: 0.0,
                        sqrt_a: s.sqrt_a,
                        e: s.e,
                        i0: s.i0_deg.to_radians(),
                        omega0: s.raan_deg.to_radians(),
                        omega: s.arg_perigee_deg.to_radians(),
                        m0: s.m0_deg.to_radians(),
                        delta_n: 0.0,
                        i_dot: 0.0,
                        omega_dot: 0.0,
                        cuc: 0.0,
                        cus: 0.0,
                        crc: 0.0,
                        crs: 0.0,
                        cic: 0.0,
                        cis: 0.0,
                    };
                    eph.check_invariants().map_err(ScenarioError::Validation)?;
                    almanac.push(eph);
                }

                // Timeline must cover the whole simulated span.
                let duration = grid.duration();
                if timeline_start(&scenario.timeline) > 0.0
                    || timeline_end(&scenario.timeline) < duration - 1e-9
                {
                    return invalid(format!(
                        "environment timeline must cover [0, {duration}] s"
                    ));
                }

                scenario.time = Some(grid);
                scenario.waypoints = waypoints;
                scenario.almanac = almanac;
                Ok(scenario)
            }
            Mode::Experiment => {
                let inputs = self
                    .inputs
                    .ok_or_else(|| ScenarioError::Validation("[inputs] required in experiment mode".into()))?;
                scenario.inputs = Some(ExperimentInputs {
                    observation: base_dir.join(&inputs.observation),
                    navigation: base_dir.join(&inputs.navigation),
                    ground_truth: base_dir.join(&inputs.ground_truth),
                });
                Ok(scenario)
            }
        }
    }
}

fn timeline_start(timeline: &[EnvironmentSegment]) -> f64 {
    timeline.first().map(|s| s.start_s).unwrap_or(f64::INFINITY)
}

fn timeline_end(timeline: &[EnvironmentSegment]) -> f64 {
    timeline.last().map(|s| s.end_s).unwrap_or(f64::NEG_INFINITY)
}

/// True when the contiguous timeline spans [0, duration].
pub(super) fn timeline_covers(timeline: &[EnvironmentSegment], duration: f64) -> bool {
    timeline_start(timeline) <= 0.0 && timeline_end(timeline) >= duration - 1e-9
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputsSection {
    observation: PathBuf,
    navigation: PathBuf,
    ground_truth: PathBuf,
}
