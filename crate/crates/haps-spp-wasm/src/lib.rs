//! Browser bindings for the positioning pipeline: run the shipped Ottawa
//! scenario with interactive parameters and hand plot-ready JSON back to the
//! page. Three operations are exposed:
//!
//! - [`run_simulation`]: one system configuration, per-epoch error/HDOP
//!   series plus the error CDF
//! - [`compare_configurations`]: all four system configurations on the same
//!   seed, CDFs side by side
//! - [`sky_view`]: elevation/azimuth of every ranging source used at one
//!   epoch
//!
//! Everything runs synchronously on the calling thread; a 600-epoch scenario
//! takes a few tens of milliseconds even in wasm.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use haps_spp::error_models::LosProbabilityTable;
use haps_spp::scenario::{run_scenario, RunResult, Scenario};
use haps_spp::SystemConfiguration;

const BASE_SCENARIO: &str = include_str!("../../../scenarios/suburban/four_haps_gps.toml");

#[derive(Debug, Deserialize)]
#[serde(default)]
struct DemoParams {
    seed: u64,
    epochs: usize,
    system: String,
    haps_sigma_m: f64,
    gm_sigma_m: f64,
    gm_tau_s: f64,
    atmosphere: bool,
    los_gating: bool,
    /// Epoch index for the sky view.
    epoch: usize,
}

impl Default for DemoParams {
    fn default() -> Self {
        Self {
            seed: 42,
            epochs: 600,
            system: "four_haps_gps".into(),
            haps_sigma_m: 2.0,
            gm_sigma_m: 6.0,
            gm_tau_s: 10.0,
            atmosphere: true,
            los_gating: false,
            epoch: 0,
        }
    }
}

fn parse_system(label: &str) -> Result<SystemConfiguration, String> {
    SystemConfiguration::all()
        .into_iter()
        .find(|s| s.label() == label)
        .ok_or_else(|| format!("unknown system '{label}'"))
}

fn build_scenario(params: &DemoParams, system: SystemConfiguration) -> Result<Scenario, String> {
    let base = Scenario::from_toml_str(BASE_SCENARIO, std::path::Path::new("."))
        .map_err(|e| e.to_string())?;
    let mut scenario = base.with_system(system).map_err(|e| e.to_string())?;
    scenario.seed = params.seed;
    scenario.gm_sigma = params.gm_sigma_m.clamp(0.0, 100.0);
    scenario.gm_tau = params.gm_tau_s.clamp(0.1, 1e4);
    scenario.haps_sigma.suburban = params.haps_sigma_m.clamp(0.0, 100.0);
    scenario.haps_sigma.dense_urban = params.haps_sigma_m.clamp(0.0, 100.0);
    scenario.synthesize_atmosphere = params.atmosphere;
    scenario.solver.correct_ionosphere = params.atmosphere;
    scenario.solver.correct_troposphere = params.atmosphere;
    if params.los_gating {
        scenario.los.suburban = Some(LosProbabilityTable::illustrative_suburban());
        scenario.los.dense_urban = Some(LosProbabilityTable::illustrative_dense_urban());
    }
    if let Some(grid) = scenario.time.as_mut() {
        grid.count = params.epochs.clamp(10, 600);
    }
    Ok(scenario)
}

#[derive(Serialize)]
struct EpochPoint {
    t: f64,
    status: &'static str,
    err3d: Option<f64>,
    hdop: Option<f64>,
    n_sat: usize,
    n_haps: usize,
}

#[derive(Serialize)]
struct SeriesResponse {
    system: String,
    epochs: Vec<EpochPoint>,
    cdf: Vec<(f64, f64)>,
    median_err3d: Option<f64>,
    p95_err3d: Option<f64>,
    mean_hdop: Option<f64>,
    convergence_rate: f64,
}

fn series_response(result: &RunResult) -> SeriesResponse {
    let epochs = result
        .records
        .iter()
        .map(|r| EpochPoint {
            t: r.epoch_s,
            status: r.status.as_str(),
            err3d: r.metrics.as_ref().map(|m| m.error_3d).filter(|v| v.is_finite()),
            hdop: r.metrics.as_ref().map(|m| m.hdop).filter(|v| v.is_finite()),
            n_sat: r.n_satellites,
            n_haps: r.n_haps,
        })
        .collect();
    let finite = |v: f64| if v.is_finite() { Some(v) } else { None };
    SeriesResponse {
        system: result.system.label().to_string(),
        epochs,
        cdf: result.cdf.as_ref().map(|c| c.points().collect()).unwrap_or_default(),
        median_err3d: finite(result.summary.median_error_3d),
        p95_err3d: finite(result.summary.p95_error_3d),
        mean_hdop: finite(result.summary.mean_hdop),
        convergence_rate: result.summary.convergence_rate,
    }
}

fn run_params(json: &str) -> Result<String, String> {
    let params: DemoParams = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let system = parse_system(&params.system)?;
    let scenario = build_scenario(&params, system)?;
    let result = run_scenario(&scenario, 1).map_err(|e| e.to_string())?;
    serde_json::to_string(&series_response(&result)).map_err(|e| e.to_string())
}

/// Run one system configuration; returns per-epoch series, the 3D-error CDF
/// and summary statistics as JSON.
#[wasm_bindgen]
pub fn run_simulation(params_json: &str) -> Result<String, JsValue> {
    run_params(params_json).map_err(|e| JsValue::from_str(&e))
}

#[derive(Serialize)]
struct CompareResponse {
    systems: Vec<SeriesResponse>,
}

fn compare_params(json: &str) -> Result<String, String> {
    let params: DemoParams = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let mut systems = Vec::new();
    for system in SystemConfiguration::all() {
        let scenario = build_scenario(&params, system)?;
        let result = run_scenario(&scenario, 1).map_err(|e| e.to_string())?;
        systems.push(series_response(&result));
    }
    serde_json::to_string(&CompareResponse { systems }).map_err(|e| e.to_string())
}

/// Run all four system configurations on the same seed and trajectory;
/// returns their CDFs and summaries as JSON.
#[wasm_bindgen]
pub fn compare_configurations(params_json: &str) -> Result<String, JsValue> {
    compare_params(params_json).map_err(|e| JsValue::from_str(&e))
}

#[derive(Serialize)]
struct SkySource {
    id: String,
    kind: &'static str,
    elevation_deg: f64,
    azimuth_deg: f64,
    residual_m: f64,
}

#[derive(Serialize)]
struct SkyResponse {
    t: f64,
    status: &'static str,
    sources: Vec<SkySource>,
}

fn sky_params(json: &str) -> Result<String, String> {
    let params: DemoParams = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let system = parse_system(&params.system)?;
    let scenario = build_scenario(&params, system)?;
    let result = run_scenario(&scenario, 1).map_err(|e| e.to_string())?;
    let record = result
        .records
        .get(params.epoch.min(result.records.len().saturating_sub(1)))
        .ok_or("no epochs in run")?;
    let sources = record
        .solution
        .as_ref()
        .map(|s| {
            s.sources
                .iter()
                .map(|src| SkySource {
                    id: src.source.to_string(),
                    kind: if src.source.is_haps() { "haps" } else { "satellite" },
                    elevation_deg: src.elevation.to_degrees(),
                    azimuth_deg: src.azimuth.to_degrees(),
                    residual_m: src.residual,
                })
                .collect()
        })
        .unwrap_or_default();
    let response = SkyResponse {
        t: record.epoch_s,
        status: record.status.as_str(),
        sources,
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

/// Elevation/azimuth of every source used in the solve at one epoch, for a
/// polar sky plot.
#[wasm_bindgen]
pub fn sky_view(params_json: &str) -> Result<String, JsValue> {
    sky_params(params_json).map_err(|e| JsValue::from_str(&e))
}
