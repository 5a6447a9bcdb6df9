//! Shared helpers for integration tests: RINEX text generation and a
//! synthetic experiment dataset (navigation + observation + ground truth)
//! that is physically consistent with the crate's own models.

// Compiled once per test target; not every target uses every helper.
#![allow(dead_code)]

use haps_spp::constants::SPEED_OF_LIGHT;
use haps_spp::ephemeris::{satellite_clock_offset, satellite_position};
use haps_spp::geodesy::{
    ecef_to_geodetic, elevation_azimuth, geodetic_to_ecef, reception_frame_range, EcefVector,
    GeodeticCoord,
};
use haps_spp::rinex::BroadcastEphemeris;
use haps_spp::solver::{modeled_delays, SolverConfig};
use haps_spp::time::GpsTime;

pub const ALPHA: [f64; 4] = [0.1118e-7, -0.7451e-8, -0.5961e-7, 0.1192e-6];
pub const BETA: [f64; 4] = [0.1167e6, -0.2294e6, -0.1311e6, 0.1049e7];

/// RINEX D19.12 field.
pub fn d19(v: f64) -> String {
    if v == 0.0 {
        return " 0.000000000000D+00".into();
    }
    let sign = if v < 0.0 { '-' } else { ' ' };
    let a = v.abs();
    let mut exp = a.log10().floor() as i32 + 1;
    let mut ms = format!("{:.12}", a / 10f64.powi(exp));
    if ms.starts_with('1') {
        exp += 1;
        ms = format!("{:.12}", a / 10f64.powi(exp));
    }
    format!("{sign}{ms}D{exp:+03}")
}

fn d12(v: f64) -> String {
    if v == 0.0 {
        return " 0.0000D+00".to_string() + " ";
    }
    let sign = if v < 0.0 { "-" } else { " " };
    let a = v.abs();
    let mut exp = a.log10().floor() as i32 + 1;
    let mut ms = format!("{:.4}", a / 10f64.powi(exp));
    if ms.starts_with('1') {
        exp += 1;
        ms = format!("{:.4}", a / 10f64.powi(exp));
    }
    format!("{:>12}", format!("{sign}{ms}D{exp:+03}"))
}

fn header_line(content: &str, label: &str) -> String {
    format!("{content:<60.60}{label:<20}").trim_end().to_string()
}

/// Civil date from GPS time (inverse of days_from_civil).
pub fn calendar(t: &GpsTime) -> (i32, u32, u32, u32, u32, f64) {
    // 723125 = days from 0000-03-01 to the GPS epoch (1980-01-06).
    let z = i64::from(t.week) * 7 + (t.sow / 86_400.0).floor() as i64 + 723_125;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = (z - era * 146_097) as u64;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe as i64 + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = (if mp < 10 { mp + 3 } else { mp - 9 }) as u32;
    let y = (y + i64::from(m <= 2)) as i32;
    let secs = t.sow % 86_400.0;
    let hh = (secs / 3600.0).floor() as u32;
    let mi = ((secs - f64::from(hh) * 3600.0) / 60.0).floor() as u32;
    let ss = secs - f64::from(hh) * 3600.0 - f64::from(mi) * 60.0;
    (y, m, d, hh, mi, ss)
}

/// Render a GPS navigation file (RINEX 2.11).
pub fn write_nav_211(records: &[BroadcastEphemeris], alpha: [f64; 4], beta: [f64; 4]) -> String {
    let mut lines = Vec::new();
    lines.push(header_line("     2.11           N: GPS NAV DATA", "RINEX VERSION / TYPE"));
    lines.push(header_line("haps-spp test support", "PGM / RUN BY / DATE"));
    lines.push(header_line(
        &format!("  {}{}{}{}", d12(alpha[0]), d12(alpha[1]), d12(alpha[2]), d12(alpha[3])),
        "ION ALPHA",
    ));
    lines.push(header_line(
        &format!("  {}{}{}{}", d12(beta[0]), d12(beta[1]), d12(beta[2]), d12(beta[3])),
        "ION BETA",
    ));
    lines.push(header_line("", "END OF HEADER"));
    for eph in records {
        let (y, m, d, hh, mi, ss) = calendar(&eph.toc);
        lines.push(format!(
            "{:2}{:3}{:3}{:3}{:3}{:3}{:5.1}{}{}{}",
            eph.prn,
            y % 100,
            m,
            d,
            hh,
            mi,
            ss,
            d19(eph.af0),
            d19(eph.af1),
            d19(eph.af2)
        ));
        let orbit = [
            [0.0, eph.crs, eph.delta_n, eph.m0],
            [eph.cuc, eph.e, eph.cus, eph.sqrt_a],
            [eph.toe_sow, eph.cic, eph.omega0, eph.cis],
            [eph.i0, eph.crc, eph.omega, eph.omega_dot],
            [eph.i_dot, 0.0, f64::from(eph.week), 0.0],
            [2.0, 0.0, 0.0, 0.0],
            [eph.toe_sow, 4.0, 0.0, 0.0],
        ];
        for row in orbit {
            lines.push(format!("   {}{}{}{}", d19(row[0]), d19(row[1]), d19(row[2]), d19(row[3])));
        }
    }
    lines.join("\n") + "\n"
}

/// Render an observation file (RINEX 2.11) carrying only the C1 observable.
pub fn write_obs_211(epochs: &[(GpsTime, Vec<(u8, f64)>)]) -> String {
    let mut lines = Vec::new();
    lines.push(header_line(
        "     2.11           OBSERVATION DATA    G (GPS)",
        "RINEX VERSION / TYPE",
    ));
    lines.push(header_line("haps-spp test support", "PGM / RUN BY / DATE"));
    lines.push(header_line(&format!("{:6}{:>6}", 1, "C1"), "# / TYPES OF OBSERV"));
    lines.push(header_line("", "END OF HEADER"));
    for (t, entries) in epochs {
        let (y, m, d, hh, mi, ss) = calendar(t);
        let mut epoch_line = format!(
            " {:02} {:2} {:2} {:2} {:2}{:11.7}  0{:3}",
            y % 100,
            m,
            d,
            hh,
            mi,
            ss,
            entries.len()
        );
        for (prn, _) in entries {
            epoch_line.push_str(&format!("G{prn:02}"));
        }
        lines.push(epoch_line);
        for (_, pseudorange) in entries {
            lines.push(format!("{pseudorange:14.3}  "));
        }
    }
    lines.join("\n") + "\n"
}

/// An almanac-style ephemeris over the Ottawa sky.
pub fn test_ephemeris(prn: u8, raan_deg: f64, m0_deg: f64, week: i32, toe_sow: f64) -> BroadcastEphemeris {
    BroadcastEphemeris {
        prn,
        toc: GpsTime::new(week, toe_sow),
        toe_sow,
        week,
        af0: 1.0e-4 + f64::from(prn) * 3.0e-6,
        af1: 1.0e-11,
        af2: 0.0,
        sqrt_a: 5153.7,
        e: 0.005,
        i0: 55f64.to_radians(),
        omega0: raan_deg.to_radians(),
        omega: 0.0,
        m0: m0_deg.to_radians(),
        delta_n: 0.0,
        i_dot: 0.0,
        omega_dot: 0.0,
        cuc: 0.0,
        cus: 0.0,
        crc: 0.0,
        crs: 0.0,
        cic: 0.0,
        cis: 0.0,
    }
}

/// The eight orbital slots that stay above the mask over Ottawa for the test
/// window (raan_deg, m0_deg).
pub const OTTAWA_SKY: [(u8, f64, f64); 8] = [
    (11, 120.0, 125.0),
    (14, 120.0, 80.0),
    (15, 180.0, 50.0),
    (16, 180.0, 140.0),
    (19, 240.0, 65.0),
    (23, 240.0, 110.0),
    (24, 300.0, 80.0),
    (27, 300.0, 350.0),
];

pub struct ExperimentDataset {
    pub nav_text: String,
    pub obs_text: String,
    pub truth_csv: String,
}

/// Synthesize a physically consistent experiment dataset: pseudoranges are
/// reception-frame ranges plus receiver clock, minus satellite clock, plus
/// the modeled atmospheric delays, plus `noise(prn, epoch)` meters.
pub fn synth_experiment_dataset(
    epochs: usize,
    interval: f64,
    clock_offset: impl Fn(f64) -> f64,
    noise: impl Fn(u8, usize) -> f64,
) -> ExperimentDataset {
    let week = 2218;
    let start_sow = 259_200.0;
    let records: Vec<BroadcastEphemeris> = OTTAWA_SKY
        .iter()
        .map(|&(prn, raan, m0)| test_ephemeris(prn, raan, m0, week, start_sow))
        .collect();
    let iono = haps_spp::rinex::IonoParameters { alpha: ALPHA, beta: BETA };
    let cfg = SolverConfig::default();

    let start_geo = GeodeticCoord::from_degrees(45.3846, -75.6960, 70.0);
    let end_geo = GeodeticCoord::from_degrees(45.4265, -75.6927, 60.0);
    let a = geodetic_to_ecef(&start_geo);
    let b = geodetic_to_ecef(&end_geo);

    let mut obs_epochs = Vec::with_capacity(epochs);
    let mut truth_csv = String::from("epoch_s,x_m,y_m,z_m\n");
    for k in 0..epochs {
        let epoch_s = k as f64 * interval;
        let frac = epoch_s / ((epochs.max(2) - 1) as f64 * interval);
        let truth = a.add(&b.sub(&a).scale(frac));
        let truth_geo = ecef_to_geodetic(&truth).unwrap();
        let t_rx = GpsTime::new(week, start_sow + epoch_s);
        let dt_rx = clock_offset(epoch_s);

        let mut entries = Vec::new();
        for (idx, eph) in records.iter().enumerate() {
            // Light-time iteration for the emission state.
            let mut transit = 0.075;
            let mut position = EcefVector::default();
            for _ in 0..3 {
                position = satellite_position(eph, &t_rx.add_seconds(-transit)).unwrap();
                transit = reception_frame_range(&position, &truth) / SPEED_OF_LIGHT;
            }
            let range = transit * SPEED_OF_LIGHT;
            let d_t = satellite_clock_offset(eph, &t_rx.add_seconds(-transit)).unwrap();
            let (el, az) = elevation_azimuth(&truth, &position).unwrap();
            if el < 10f64.to_radians() {
                continue;
            }
            let delays = modeled_delays(Some(&iono), &truth_geo, el, az, t_rx.sow, &cfg);
            let pseudorange = range + SPEED_OF_LIGHT * (dt_rx - d_t)
                + delays.d_ion
                + delays.d_trop
                + noise(eph.prn, k);
            let _ = idx;
            entries.push((eph.prn, pseudorange));
        }
        obs_epochs.push((t_rx, entries));
        truth_csv.push_str(&format!("{epoch_s},{},{},{}\n", truth.x, truth.y, truth.z));
    }

    ExperimentDataset {
        nav_text: write_nav_211(&records, ALPHA, BETA),
        obs_text: write_obs_211(&obs_epochs),
        truth_csv,
    }
}

/// Standard four-platform block used by experiment scenarios.
pub fn haps_platform_toml() -> &'static str {
    r#"
[[haps]]
id = "downtown"
lat_deg = 45.4215
lon_deg = -75.6972
height_m = 20000.0
radius_m = 2000.0
period_s = 600.0
initial_phase_deg = 0.0

[[haps]]
id = "gatineau"
lat_deg = 45.4765
lon_deg = -75.7013
height_m = 20000.0
radius_m = 2000.0
period_s = 600.0
initial_phase_deg = 90.0

[[haps]]
id = "kanata"
lat_deg = 45.3088
lon_deg = -75.8983
height_m = 20000.0
radius_m = 2000.0
period_s = 600.0
initial_phase_deg = 180.0

[[haps]]
id = "orleans"
lat_deg = 45.4560
lon_deg = -75.5070
height_m = 20000.0
radius_m = 2000.0
period_s = 600.0
initial_phase_deg = 270.0
"#
}
