//! Plot-ready CSV reports: per-epoch rows, CDF series, run summaries and
//! cross-system comparison tables.
//!
//! Floating-point fields carry 17 significant digits so re-runs can be
//! compared byte for byte.

use std::io::{self, Write};
use std::path::Path;

use super::run::RunResult;
use super::{ScenarioError, SystemConfiguration};

/// 17 significant digits, `.` decimal separator.
pub(crate) fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Per-epoch CSV. Every input epoch appears exactly once; epochs without a
/// solution keep their status and carry NaN metric fields.
pub fn write_epoch_csv<W: Write>(w: &mut W, result: &RunResult) -> io::Result<()> {
    writeln!(
        w,
        "epoch_s,status,x_m,y_m,z_m,lat_deg,lon_deg,h_m,dt_s,n_sat,n_haps,iterations,hdop,pdop,vdop,err3d_m"
    )?;
    for r in &result.records {
        let (pos, geo, dt) = match &r.solution {
            Some(s) => (
                [s.position.x, s.position.y, s.position.z],
                s.geodetic().map(|g| [g.latitude.to_degrees(), g.longitude.to_degrees(), g.height]),
                s.clock_offset,
            ),
            None => ([f64::NAN; 3], None, f64::NAN),
        };
        let geo = geo.unwrap_or([f64::NAN; 3]);
        let (hdop, pdop, vdop, err) = match &r.metrics {
            Some(m) => (m.hdop, m.pdop, m.vdop, m.error_3d),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_float(r.epoch_s),
            r.status,
            fmt_float(pos[0]),
            fmt_float(pos[1]),
            fmt_float(pos[2]),
            fmt_float(geo[0]),
            fmt_float(geo[1]),
            fmt_float(geo[2]),
            fmt_float(dt),
            r.n_satellites,
            r.n_haps,
            r.iterations,
            fmt_float(hdop),
            fmt_float(pdop),
            fmt_float(vdop),
            fmt_float(err),
        )?;
    }
    Ok(())
}

/// CDF CSV: `system,value_m,cum_prob`.
pub fn write_cdf_csv<W: Write>(w: &mut W, result: &RunResult) -> io::Result<()> {
    writeln!(w, "system,value_m,cum_prob")?;
    if let Some(cdf) = &result.cdf {
        for (value, prob) in cdf.points() {
            writeln!(w, "{},{},{}", result.system, fmt_float(value), fmt_float(prob))?;
        }
    }
    Ok(())
}

/// One-row run summary.
pub fn write_summary_csv<W: Write>(w: &mut W, result: &RunResult) -> io::Result<()> {
    writeln!(
        w,
        "scenario,system,seed,epochs,converged,convergence_rate,median_err3d_m,p95_err3d_m,mean_hdop"
    )?;
    let s = &result.summary;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{}",
        result.scenario_name,
        result.system,
        result.seed,
        s.epochs,
        s.converged,
        fmt_float(s.convergence_rate),
        fmt_float(s.median_error_3d),
        fmt_float(s.p95_error_3d),
        fmt_float(s.mean_hdop),
    )
}

/// Write `epochs.csv`, `cdf.csv` and `summary.csv` under `out_dir`.
pub fn write_run_reports(result: &RunResult, out_dir: &Path) -> Result<(), ScenarioError> {
    let io_err = |path: &Path, source: io::Error| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;

    let epochs_path = out_dir.join("epochs.csv");
    let mut buf = Vec::new();
    write_epoch_csv(&mut buf, result).map_err(|e| io_err(&epochs_path, e))?;
    std::fs::write(&epochs_path, &buf).map_err(|e| io_err(&epochs_path, e))?;

    let cdf_path = out_dir.join("cdf.csv");
    buf.clear();
    write_cdf_csv(&mut buf, result).map_err(|e| io_err(&cdf_path, e))?;
    std::fs::write(&cdf_path, &buf).map_err(|e| io_err(&cdf_path, e))?;

    let summary_path = out_dir.join("summary.csv");
    buf.clear();
    write_summary_csv(&mut buf, result).map_err(|e| io_err(&summary_path, e))?;
    std::fs::write(&summary_path, &buf).map_err(|e| io_err(&summary_path, e))?;
    Ok(())
}

/// One line of the cross-system comparison.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub system: SystemConfiguration,
    pub scenario_name: String,
    pub median_error_3d: f64,
    pub p68_error_3d: f64,
    pub p95_error_3d: f64,
    pub p99_error_3d: f64,
    pub mean_hdop: f64,
    pub convergence_rate: f64,
}

/// Percentile table across system configurations sharing one scenario base.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// Comparison CSV: one row per run.
pub fn write_comparison_csv<W: Write>(w: &mut W, comparison: &Comparison) -> io::Result<()> {
    writeln!(
        w,
        "system,scenario,median_err3d_m,p68_err3d_m,p95_err3d_m,p99_err3d_m,mean_hdop,convergence_rate"
    )?;
    for row in &comparison.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            row.system,
            row.scenario_name,
            fmt_float(row.median_error_3d),
            fmt_float(row.p68_error_3d),
            fmt_float(row.p95_error_3d),
            fmt_float(row.p99_error_3d),
            fmt_float(row.mean_hdop),
            fmt_float(row.convergence_rate),
        )?;
    }
    Ok(())
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<15} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10}",
            "system", "median_m", "p68_m", "p95_m", "p99_m", "mean_hdop", "conv_rate"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<15} {:>12.3} {:>12.3} {:>12.3} {:>12.3} {:>10.3} {:>10.3}",
                row.system.label(),
                row.median_error_3d,
                row.p68_error_3d,
                row.p95_error_3d,
                row.p99_error_3d,
                row.mean_hdop,
                row.convergence_rate,
            )?;
        }
        Ok(())
    }
}
