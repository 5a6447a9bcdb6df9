//! End-to-end experiment mode: RINEX ingestion, ephemeris evaluation,
//! ground-truth clock estimation, HAPS grafting, and the epoch loop.

mod support;

use std::path::Path;

use haps_spp::scenario::{run_scenario, EpochStatus, Scenario};
use haps_spp::time::GpsTime;

fn experiment_toml(system: &str, haps: bool) -> String {
    let mut toml = format!(
        r#"
name = "experiment {system}"
mode = "experiment"
seed = 7
system = "{system}"

[inputs]
observation = "rover.obs"
navigation = "rover.nav"
ground_truth = "truth.csv"

[errors.haps]
suburban_sigma_m = 0.0
dense_urban_sigma_m = 0.0

[[environment]]
start_s = 0.0
end_s = 45.0
kind = "suburban"

[[environment]]
start_s = 45.0
end_s = 120.0
kind = "dense_urban"
"#
    );
    if haps {
        toml.push_str(support::haps_platform_toml());
    }
    toml
}

fn write_dataset(dir: &Path, data: &support::ExperimentDataset) {
    std::fs::write(dir.join("rover.nav"), &data.nav_text).unwrap();
    std::fs::write(dir.join("rover.obs"), &data.obs_text).unwrap();
    std::fs::write(dir.join("truth.csv"), &data.truth_csv).unwrap();
}

#[test]
fn calendar_roundtrips_gps_time() {
    for &(week, sow) in
        &[(2218i32, 0.0f64), (2218, 259_200.0), (2218, 604_799.0), (1000, 86_400.0), (2300, 12.5)]
    {
        let t = GpsTime::new(week, sow);
        let (y, m, d, hh, mi, ss) = support::calendar(&t);
        let back = GpsTime::from_calendar(y, m, d, hh, mi, ss);
        assert_eq!(back.week, t.week, "week for {week}/{sow}");
        assert!((back.sow - t.sow).abs() < 1e-6, "sow for {week}/{sow}");
    }
}

#[test]
fn noiseless_experiment_recovers_truth_and_clock() {
    // Constant 0.32 ms receiver clock plus a slow drift; no measurement
    // noise. The only residual error is the transit-time convention (the
    // solver rotates by p_c/c, which embeds the receiver clock), worth a few
    // tenths of a meter here.
    let data = support::synth_experiment_dataset(60, 1.0, |t| 3.2e-4 + 2.0e-9 * t, |_, _| 0.0);
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &data);
    std::fs::write(dir.path().join("scenario.toml"), experiment_toml("four_haps_gps", true))
        .unwrap();

    let scenario = Scenario::from_path(&dir.path().join("scenario.toml")).unwrap();
    let result = run_scenario(&scenario, 1).unwrap();

    assert_eq!(result.records.len(), 60);
    for r in &result.records {
        assert_eq!(r.status, EpochStatus::Ok, "epoch {} -> {}", r.epoch_s, r.status);
        assert_eq!(r.n_haps, 4);
        assert!(r.n_satellites >= 6);
        let m = r.metrics.as_ref().unwrap();
        assert!(m.error_3d < 1.0, "epoch {}: error {}", r.epoch_s, m.error_3d);
        let dt_true = 3.2e-4 + 2.0e-9 * r.epoch_s;
        let dt_est = r.solution.as_ref().unwrap().clock_offset;
        assert!((dt_est - dt_true).abs() < 2e-9, "clock error {}", (dt_est - dt_true).abs());
    }
    assert!(result.summary.median_error_3d < 0.6);
}

#[test]
fn haps_rows_improve_hdop_on_real_style_data() {
    let data = support::synth_experiment_dataset(40, 1.0, |_| 3.2e-4, |prn, k| {
        // deterministic pseudo-noise, +-3 m
        let x = f64::from(prn) * 17.0 + k as f64 * 0.73;
        3.0 * (x.sin())
    });
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &data);
    std::fs::write(dir.path().join("gps.toml"), experiment_toml("gps_only", false)).unwrap();
    std::fs::write(dir.path().join("aug.toml"), experiment_toml("four_haps_gps", true)).unwrap();

    let gps = run_scenario(&Scenario::from_path(&dir.path().join("gps.toml")).unwrap(), 1).unwrap();
    let aug = run_scenario(&Scenario::from_path(&dir.path().join("aug.toml")).unwrap(), 1).unwrap();

    for (g, a) in gps.records.iter().zip(&aug.records) {
        let (Some(gm), Some(am)) = (g.metrics.as_ref(), a.metrics.as_ref()) else {
            panic!("both runs must solve every epoch");
        };
        assert!(
            am.hdop <= gm.hdop + 1e-9,
            "epoch {}: HDOP {} vs {}",
            g.epoch_s,
            am.hdop,
            gm.hdop
        );
    }
}

#[test]
fn missing_ground_truth_epochs_are_reported_not_dropped() {
    let data = support::synth_experiment_dataset(20, 1.0, |_| 1.0e-4, |_, _| 0.0);
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &data);
    // Remove the truth row for epoch 7.
    let pruned: String = data
        .truth_csv
        .lines()
        .filter(|l| !l.starts_with("7,"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(dir.path().join("truth.csv"), pruned).unwrap();
    std::fs::write(dir.path().join("scenario.toml"), experiment_toml("four_haps_gps", true))
        .unwrap();

    let scenario = Scenario::from_path(&dir.path().join("scenario.toml")).unwrap();
    let result = run_scenario(&scenario, 1).unwrap();
    assert_eq!(result.records.len(), 20);
    let statuses: Vec<_> = result.records.iter().map(|r| r.status).collect();
    assert_eq!(statuses.iter().filter(|s| **s == EpochStatus::NoGroundTruth).count(), 1);
    assert_eq!(result.records[7].status, EpochStatus::NoGroundTruth);
    assert_eq!(statuses.iter().filter(|s| **s == EpochStatus::Ok).count(), 19);
}

#[test]
fn timeline_must_cover_observation_span() {
    let data = support::synth_experiment_dataset(200, 1.0, |_| 1.0e-4, |_, _| 0.0);
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &data);
    // The scenario timeline ends at 120 s but the data runs to 199 s.
    std::fs::write(dir.path().join("scenario.toml"), experiment_toml("gps_only", false)).unwrap();
    let scenario = Scenario::from_path(&dir.path().join("scenario.toml")).unwrap();
    let err = run_scenario(&scenario, 1).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("timeline"), "{err}");
}

/// Regenerates the committed sample dataset under `data/sample/`. Run with
/// `cargo test -p haps-spp --test experiment -- --ignored regenerate` after
/// changing the synthesis; outputs are deterministic.
#[test]
#[ignore]
fn regenerate_sample_data() {
    use haps_spp::error_models::GaussMarkov;
    use std::cell::RefCell;
    use std::collections::BTreeMap;

    let streams: RefCell<BTreeMap<u8, GaussMarkov>> = RefCell::new(BTreeMap::new());
    let data = support::synth_experiment_dataset(120, 1.0, |t| 3.2e-4 + 2.0e-9 * t, |prn, _| {
        let mut streams = streams.borrow_mut();
        let gm = streams.entry(prn).or_insert_with(|| {
            GaussMarkov::from_seed(6.0, 10.0, 0x5EED_0000 + u64::from(prn)).unwrap()
        });
        gm.step(1.0)
    });
    let out = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join("rover.nav"), &data.nav_text).unwrap();
    std::fs::write(out.join("rover.obs"), &data.obs_text).unwrap();
    std::fs::write(out.join("truth.csv"), &data.truth_csv).unwrap();
}
