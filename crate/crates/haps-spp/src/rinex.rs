//! RINEX 2.x / 3.x navigation and observation parsing, GPS L1 C/A only.
//!
//! Both layouts are fixed-column ASCII; fields are sliced by byte column so
//! arbitrary (even non-UTF-8) input degrades into structured errors rather
//! than panics. Records whose fields violate the type invariants are skipped
//! and reported, not fatal: field logs contain glitches and the solver wants
//! every epoch it can get.

use thiserror::Error;

use crate::time::GpsTime;

#[derive(Debug, Error, PartialEq)]
pub enum RinexError {
    #[error("malformed header at line {line}: {message}")]
    MalformedHeader { line: usize, message: String },
    #[error("no ephemerides")]
    NoEphemerides,
    #[error("observation header lists no usable pseudorange observable (C1/C1C)")]
    MissingCodeObservable,
    #[error("no observation epochs")]
    NoEpochs,
}

/// One satellite's broadcast record: clock polynomial plus the Keplerian set
/// with harmonic corrections, as carried in a RINEX navigation file.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastEphemeris {
    pub prn: u8,
    /// Clock reference time.
    pub toc: GpsTime,
    /// Ephemeris reference time, seconds of week.
    pub toe_sow: f64,
    /// Continuous GPS week of the ephemeris.
    pub week: i32,
    pub af0: f64,
    pub af1: f64,
    pub af2: f64,
    /// Square root of the semi-major axis (m^1/2).
    pub sqrt_a: f64,
    pub e: f64,
    pub i0: f64,
    pub omega0: f64,
    pub omega: f64,
    pub m0: f64,
    pub delta_n: f64,
    pub i_dot: f64,
    pub omega_dot: f64,
    pub cuc: f64,
    pub cus: f64,
    pub crc: f64,
    pub crs: f64,
    pub cic: f64,
    pub cis: f64,
}

impl BroadcastEphemeris {
    pub fn toe(&self) -> GpsTime {
        GpsTime::new(self.week, self.toe_sow)
    }

    /// Range checks for the fields the downstream orbit model relies on.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !(1..=32).contains(&self.prn) {
            return Err(format!("prn {} outside 1..=32", self.prn));
        }
        if !(0.0..0.1).contains(&self.e) {
            return Err(format!("eccentricity {} outside [0, 0.1)", self.e));
        }
        let a = self.sqrt_a * self.sqrt_a;
        if !(2.0e7..=3.0e7).contains(&a) {
            return Err(format!("semi-major axis {a} outside [2.0e7, 3.0e7] m"));
        }
        for (name, v) in [
            ("af0", self.af0),
            ("af1", self.af1),
            ("af2", self.af2),
            ("i0", self.i0),
            ("omega0", self.omega0),
            ("omega", self.omega),
            ("m0", self.m0),
            ("delta_n", self.delta_n),
            ("i_dot", self.i_dot),
            ("omega_dot", self.omega_dot),
        ] {
            if !v.is_finite() {
                return Err(format!("{name} not finite"));
            }
        }
        Ok(())
    }
}

/// Klobuchar broadcast coefficients from the navigation header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonoParameters {
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
}

/// All code pseudoranges observed at one epoch: (prn, meters).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochObservation {
    pub epoch: GpsTime,
    pub entries: Vec<(u8, f64)>,
}

/// A navigation record that failed its invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRecord {
    pub line: usize,
    pub prn: Option<u8>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavigationData {
    pub ephemerides: Vec<BroadcastEphemeris>,
    pub iono: Option<IonoParameters>,
    pub skipped: Vec<SkippedRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationData {
    pub epochs: Vec<EpochObservation>,
    /// Epoch blocks dropped because they were truncated or unreadable.
    pub dropped_epochs: usize,
}

/// Satellite pseudorange plausibility band (m).
const SAT_RANGE_BAND: std::ops::RangeInclusive<f64> = 1.5e7..=5.0e7;

// --- low-level field access -------------------------------------------------

/// Byte-column slice, tolerant of short lines.
fn cols(line: &[u8], range: std::ops::Range<usize>) -> &[u8] {
    let start = range.start.min(line.len());
    let end = range.end.min(line.len());
    &line[start..end]
}

/// Parse a RINEX float field (Fortran D/E exponents) from byte columns.
fn field_f64(line: &[u8], range: std::ops::Range<usize>) -> Option<f64> {
    let raw = cols(line, range);
    let s = std::str::from_utf8(raw).ok()?.trim();
    if s.is_empty() {
        return None;
    }
    let normalized: String = s
        .chars()
        .map(|c| match c {
            'D' | 'd' => 'E',
            c => c,
        })
        .collect();
    normalized.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn field_u32(line: &[u8], range: std::ops::Range<usize>) -> Option<u32> {
    let raw = cols(line, range);
    std::str::from_utf8(raw).ok()?.trim().parse::<u32>().ok()
}

fn header_label(line: &[u8]) -> String {
    String::from_utf8_lossy(cols(line, 60..80)).trim().to_string()
}

fn split_lines(input: &[u8]) -> Vec<&[u8]> {
    input
        .split(|&b| b == b'\n')
        .map(|l| if l.last() == Some(&b'\r') { &l[..l.len() - 1] } else { l })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Version {
    V2,
    V3,
}

/// Reads the `RINEX VERSION / TYPE` line and checks the file type character.
fn parse_version_line(lines: &[&[u8]], expected_type: char) -> Result<Version, RinexError> {
    let first = lines.first().copied().unwrap_or(b"");
    if header_label(first) != "RINEX VERSION / TYPE" {
        return Err(RinexError::MalformedHeader {
            line: 1,
            message: "missing RINEX VERSION / TYPE".into(),
        });
    }
    let version = field_f64(first, 0..9).ok_or(RinexError::MalformedHeader {
        line: 1,
        message: "unreadable version number".into(),
    })?;
    let kind = cols(first, 20..21).first().map(|&b| b as char).unwrap_or(' ');
    if kind != expected_type {
        return Err(RinexError::MalformedHeader {
            line: 1,
            message: format!("file type '{kind}', expected '{expected_type}'"),
        });
    }
    if (2.0..3.0).contains(&version) {
        Ok(Version::V2)
    } else if (3.0..4.5).contains(&version) {
        Ok(Version::V3)
    } else {
        Err(RinexError::MalformedHeader {
            line: 1,
            message: format!("unsupported version {version}"),
        })
    }
}

fn two_digit_year(yy: u32) -> i32 {
    if yy >= 80 {
        1900 + yy as i32
    } else {
        2000 + yy as i32
    }
}

// --- navigation -------------------------------------------------------------

/// Parse a GPS navigation file (RINEX 2.x or 3.x).
///
/// Iono parameters come from `ION ALPHA`/`ION BETA` (2.x) or
/// `IONOSPHERIC CORR` GPSA/GPSB lines (3.x) when present. Non-GPS records in
/// mixed 3.x files are ignored. Records with out-of-range fields are skipped
/// and reported in the result.
pub fn parse_navigation(input: &[u8]) -> Result<NavigationData, RinexError> {
    let lines = split_lines(input);
    let version = parse_version_line(&lines, 'N')?;

    let mut alpha: Option<[f64; 4]> = None;
    let mut beta: Option<[f64; 4]> = None;
    let mut body_start = None;
    for (idx, line) in lines.iter().enumerate() {
        let label = header_label(line);
        match label.as_str() {
            "ION ALPHA" => alpha = read_four(line, 2, 12),
            "ION BETA" => beta = read_four(line, 2, 12),
            "IONOSPHERIC CORR" => {
                let kind = String::from_utf8_lossy(cols(line, 0..4)).trim().to_string();
                match kind.as_str() {
                    "GPSA" => alpha = read_four(line, 5, 12),
                    "GPSB" => beta = read_four(line, 5, 12),
                    _ => {}
                }
            }
            "END OF HEADER" => {
                body_start = Some(idx + 1);
                break;
            }
            _ => {}
        }
    }
    let body_start = body_start.ok_or(RinexError::MalformedHeader {
        line: lines.len(),
        message: "END OF HEADER not found".into(),
    })?;

    let iono = match (alpha, beta) {
        (Some(alpha), Some(beta)) => Some(IonoParameters { alpha, beta }),
        _ => None,
    };

    let mut ephemerides = Vec::new();
    let mut skipped = Vec::new();
    let mut i = body_start;
    while i < lines.len() {
        if lines[i].iter().all(u8::is_ascii_whitespace) {
            i += 1;
            continue;
        }
        // A record is 8 lines in both layouts.
        if i + 8 > lines.len() {
            skipped.push(SkippedRecord {
                line: i + 1,
                prn: None,
                reason: "truncated record".into(),
            });
            break;
        }
        let block = &lines[i..i + 8];
        match parse_nav_record(block, version) {
            Ok(Some(eph)) => match eph.check_invariants() {
                Ok(()) => ephemerides.push(eph),
                Err(reason) => {
                    skipped.push(SkippedRecord { line: i + 1, prn: Some(eph.prn), reason })
                }
            },
            Ok(None) => {} // non-GPS record in a mixed file
            Err(reason) => skipped.push(SkippedRecord { line: i + 1, prn: None, reason }),
        }
        i += 8;
    }

    if ephemerides.is_empty() && skipped.is_empty() {
        return Err(RinexError::NoEphemerides);
    }
    Ok(NavigationData { ephemerides, iono, skipped })
}

fn read_four(line: &[u8], start: usize, width: usize) -> Option<[f64; 4]> {
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = field_f64(line, start + k * width..start + (k + 1) * width)?;
    }
    Some(out)
}

/// Returns `Ok(None)` for valid non-GPS records (3.x mixed files).
fn parse_nav_record(block: &[&[u8]], version: Version) -> Result<Option<BroadcastEphemeris>, String> {
    let first = block[0];
    let (prn, toc, clk_start) = match version {
        Version::V2 => {
            let prn = field_u32(first, 0..2).ok_or("unreadable PRN")?;
            let yy = field_u32(first, 2..5).ok_or("unreadable year")?;
            let mm = field_u32(first, 5..8).ok_or("unreadable month")?;
            let dd = field_u32(first, 8..11).ok_or("unreadable day")?;
            let hh = field_u32(first, 11..14).ok_or("unreadable hour")?;
            let mi = field_u32(first, 14..17).ok_or("unreadable minute")?;
            let ss = field_f64(first, 17..22).ok_or("unreadable second")?;
            if !(1..=12).contains(&mm) || !(1..=31).contains(&dd) || hh > 23 || mi > 59 {
                return Err("toc fields out of range".into());
            }
            (prn, GpsTime::from_calendar(two_digit_year(yy), mm, dd, hh, mi, ss), 22usize)
        }
        Version::V3 => {
            let sys = cols(first, 0..1).first().copied().unwrap_or(b' ');
            if sys != b'G' {
                return Ok(None);
            }
            let prn = field_u32(first, 1..3).ok_or("unreadable PRN")?;
            let year = field_u32(first, 3..8).ok_or("unreadable year")?;
            let mm = field_u32(first, 8..11).ok_or("unreadable month")?;
            let dd = field_u32(first, 11..14).ok_or("unreadable day")?;
            let hh = field_u32(first, 14..17).ok_or("unreadable hour")?;
            let mi = field_u32(first, 17..20).ok_or("unreadable minute")?;
            let ss = field_u32(first, 20..23).ok_or("unreadable second")?;
            if !(1..=12).contains(&mm) || !(1..=31).contains(&dd) || hh > 23 || mi > 59 || ss > 60 {
                return Err("toc fields out of range".into());
            }
            (
                prn,
                GpsTime::from_calendar(year as i32, mm, dd, hh, mi, f64::from(ss)),
                23usize,
            )
        }
    };

    let w = 19;
    let af0 = field_f64(first, clk_start..clk_start + w).ok_or("unreadable af0")?;
    let af1 = field_f64(first, clk_start + w..clk_start + 2 * w).ok_or("unreadable af1")?;
    let af2 = field_f64(first, clk_start + 2 * w..clk_start + 3 * w).ok_or("unreadable af2")?;

    let orbit_start = match version {
        Version::V2 => 3usize,
        Version::V3 => 4usize,
    };
    let orbit = |line_idx: usize, slot: usize| -> Result<f64, String> {
        field_f64(
            block[line_idx],
            orbit_start + slot * w..orbit_start + (slot + 1) * w,
        )
        .ok_or_else(|| format!("unreadable orbit field {line_idx}/{slot}"))
    };

    // Orbit line 1: IODE, Crs, Delta n, M0
    let crs = orbit(1, 1)?;
    let delta_n = orbit(1, 2)?;
    let m0 = orbit(1, 3)?;
    // Orbit line 2: Cuc, e, Cus, sqrt(A)
    let cuc = orbit(2, 0)?;
    let e = orbit(2, 1)?;
    let cus = orbit(2, 2)?;
    let sqrt_a = orbit(2, 3)?;
    // Orbit line 3: Toe, Cic, OMEGA0, Cis
    let toe_sow = orbit(3, 0)?;
    let cic = orbit(3, 1)?;
    let omega0 = orbit(3, 2)?;
    let cis = orbit(3, 3)?;
    // Orbit line 4: i0, Crc, omega, OMEGA DOT
    let i0 = orbit(4, 0)?;
    let crc = orbit(4, 1)?;
    let omega = orbit(4, 2)?;
    let omega_dot = orbit(4, 3)?;
    // Orbit line 5: IDOT, codes on L2, GPS week, L2 P flag
    let i_dot = orbit(5, 0)?;
    let week = orbit(5, 2)?;
    // Orbit lines 6-7 (accuracy/health/TGD, transmission time) are not used.

    if !(0.0..1e4).contains(&week) {
        return Err(format!("week {week} implausible"));
    }
    if !(0.0..604_800.0).contains(&toe_sow) {
        return Err(format!("toe {toe_sow} outside a week"));
    }

    Ok(Some(BroadcastEphemeris {
        prn: prn.min(255) as u8,
        toc,
        toe_sow,
        week: week as i32,
        af0,
        af1,
        af2,
        sqrt_a,
        e,
        i0,
        omega0,
        omega,
        m0,
        delta_n,
        i_dot,
        omega_dot,
        cuc,
        cus,
        crc,
        crs,
        cic,
        cis,
    }))
}

// --- observation ------------------------------------------------------------

/// Parse an observation file (RINEX 2.x or 3.x), extracting the GPS L1 C/A
/// code pseudorange (`C1` in 2.x, `C1C` in 3.x). Other observables and other
/// constellations are ignored. Truncated epoch blocks are dropped and
/// counted.
pub fn parse_observation(input: &[u8]) -> Result<ObservationData, RinexError> {
    let lines = split_lines(input);
    let version = parse_version_line(&lines, 'O')?;

    let mut code_index: Option<usize> = None; // index among per-sat observables
    let mut n_types: usize = 0; // total observables per satellite (GPS)
    let mut body_start = None;

    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let label = header_label(line);
        match label.as_str() {
            "# / TYPES OF OBSERV" if version == Version::V2 => {
                let count = field_u32(line, 0..6).ok_or(RinexError::MalformedHeader {
                    line: i + 1,
                    message: "unreadable observable count".into(),
                })? as usize;
                let mut types = Vec::with_capacity(count.min(64));
                let mut row = i;
                while types.len() < count && row < lines.len() {
                    let l = lines[row];
                    let per_row = 9;
                    for k in 0..per_row {
                        if types.len() >= count {
                            break;
                        }
                        let t = String::from_utf8_lossy(cols(l, 6 + k * 6..12 + k * 6))
                            .trim()
                            .to_string();
                        if !t.is_empty() {
                            types.push(t);
                        }
                    }
                    row += 1;
                }
                // `row` stays at `i` when count is zero; never step backwards.
                i = row.max(i + 1) - 1;
                n_types = types.len();
                code_index = types.iter().position(|t| t == "C1");
            }
            "SYS / # / OBS TYPES" if version == Version::V3 => {
                let sys = cols(line, 0..1).first().copied().unwrap_or(b' ');
                let count = field_u32(line, 3..6).unwrap_or(0) as usize;
                let mut types = Vec::with_capacity(count.min(64));
                let mut row = i;
                while types.len() < count && row < lines.len() {
                    let l = lines[row];
                    for k in 0..13 {
                        if types.len() >= count {
                            break;
                        }
                        let t = String::from_utf8_lossy(cols(l, 7 + k * 4..10 + k * 4))
                            .trim()
                            .to_string();
                        if !t.is_empty() {
                            types.push(t);
                        }
                    }
                    row += 1;
                }
                i = row.max(i + 1) - 1;
                if sys == b'G' {
                    n_types = types.len();
                    code_index = types.iter().position(|t| t == "C1C" || t == "C1");
                }
            }
            "END OF HEADER" => {
                body_start = Some(i + 1);
                break;
            }
            _ => {}
        }
        i += 1;
    }

    let body_start = body_start.ok_or(RinexError::MalformedHeader {
        line: lines.len(),
        message: "END OF HEADER not found".into(),
    })?;
    let code_index = code_index.ok_or(RinexError::MissingCodeObservable)?;

    let mut epochs = Vec::new();
    let mut dropped = 0usize;
    let mut i = body_start;
    while i < lines.len() {
        if lines[i].iter().all(u8::is_ascii_whitespace) {
            i += 1;
            continue;
        }
        let outcome = match version {
            Version::V2 => parse_epoch_v2(&lines, i, n_types, code_index, &mut epochs),
            Version::V3 => parse_epoch_v3(&lines, i, code_index, &mut epochs),
        };
        match outcome {
            EpochOutcome::Consumed(n) => i += n,
            EpochOutcome::Dropped => {
                dropped += 1;
                i += 1;
            }
            // Not an epoch header (stray or orphaned data line): skip it
            // without inflating the dropped-epoch count.
            EpochOutcome::NotEpoch => i += 1,
        }
    }

    if epochs.is_empty() && dropped == 0 {
        return Err(RinexError::NoEpochs);
    }
    Ok(ObservationData { epochs, dropped_epochs: dropped })
}

/// Push entries respecting the per-epoch invariants (unique PRN, plausible
/// range).
fn push_entry(entries: &mut Vec<(u8, f64)>, prn: u8, range: f64) {
    if !(1..=32).contains(&prn) {
        return;
    }
    if !SAT_RANGE_BAND.contains(&range) {
        return;
    }
    if entries.iter().any(|(p, _)| *p == prn) {
        return;
    }
    entries.push((prn, range));
}

enum EpochOutcome {
    /// A complete epoch block spanning this many lines.
    Consumed(usize),
    /// A recognizable epoch header whose block is truncated or unreadable.
    Dropped,
    /// Not an epoch header at all.
    NotEpoch,
}

fn parse_epoch_v2(
    lines: &[&[u8]],
    start: usize,
    n_types: usize,
    code_index: usize,
    epochs: &mut Vec<EpochObservation>,
) -> EpochOutcome {
    let line = lines[start];
    let header = (|| {
        let yy = field_u32(line, 1..3)?;
        let mm = field_u32(line, 4..6)?;
        let dd = field_u32(line, 7..9)?;
        let hh = field_u32(line, 10..12)?;
        let mi = field_u32(line, 13..15)?;
        let ss = field_f64(line, 15..26)?;
        let flag = field_u32(line, 26..29).unwrap_or(9);
        let count = field_u32(line, 29..32)? as usize;
        if !(1..=12).contains(&mm) || !(1..=31).contains(&dd) || hh > 23 || mi > 59 || count > 64 {
            return None;
        }
        Some((yy, mm, dd, hh, mi, ss, flag, count))
    })();
    let Some((yy, mm, dd, hh, mi, ss, flag, count)) = header else {
        return EpochOutcome::NotEpoch;
    };

    let mut sats = Vec::with_capacity(count);
    let mut header_rows = 1usize;
    {
        let mut remaining = count;
        let mut row = start;
        loop {
            let Some(l) = lines.get(row) else {
                return EpochOutcome::Dropped;
            };
            let take = remaining.min(12);
            for k in 0..take {
                let id = cols(l, 32 + k * 3..35 + k * 3);
                let sys = id.first().copied().unwrap_or(b' ');
                let Ok(tail) = std::str::from_utf8(cols(id, 1..3)) else {
                    return EpochOutcome::Dropped;
                };
                sats.push((sys, tail.trim().parse::<u8>().ok()));
            }
            remaining -= take;
            if remaining == 0 {
                break;
            }
            row += 1;
            header_rows += 1;
        }
    }

    // Event flags (>1) carry auxiliary records; skip them wholesale.
    if flag > 1 {
        return EpochOutcome::Consumed(header_rows + count);
    }

    let lines_per_sat = n_types.div_ceil(5);
    let mut entries = Vec::new();
    let mut consumed = header_rows;
    for (sys, prn) in sats {
        let row_base = start + consumed;
        if row_base + lines_per_sat > lines.len() {
            return EpochOutcome::Dropped; // truncated block
        }
        consumed += lines_per_sat;
        let is_gps = sys == b'G' || sys == b' ';
        if !is_gps {
            continue;
        }
        let Some(prn) = prn else { continue };
        let line_off = code_index / 5;
        let slot = code_index % 5;
        if let Some(value) = field_f64(lines[row_base + line_off], slot * 16..slot * 16 + 14) {
            push_entry(&mut entries, prn, value);
        }
    }

    let epoch = GpsTime::from_calendar(two_digit_year(yy), mm, dd, hh, mi, ss);
    if !entries.is_empty() {
        epochs.push(EpochObservation { epoch, entries });
    }
    EpochOutcome::Consumed(consumed)
}

fn parse_epoch_v3(
    lines: &[&[u8]],
    start: usize,
    code_index: usize,
    epochs: &mut Vec<EpochObservation>,
) -> EpochOutcome {
    let line = lines[start];
    if line.first() != Some(&b'>') {
        return EpochOutcome::NotEpoch;
    }
    let header = (|| {
        let year = field_u32(line, 2..6)?;
        let mm = field_u32(line, 7..9)?;
        let dd = field_u32(line, 10..12)?;
        let hh = field_u32(line, 13..15)?;
        let mi = field_u32(line, 16..18)?;
        let ss = field_f64(line, 18..29)?;
        let flag = field_u32(line, 29..32).unwrap_or(9);
        let count = field_u32(line, 32..35)? as usize;
        if !(1..=12).contains(&mm) || !(1..=31).contains(&dd) || hh > 23 || mi > 59 || count > 128
        {
            return None;
        }
        Some((year, mm, dd, hh, mi, ss, flag, count))
    })();
    let Some((year, mm, dd, hh, mi, ss, flag, count)) = header else {
        return EpochOutcome::Dropped; // '>' marker but unreadable header
    };
    if flag > 1 {
        return EpochOutcome::Consumed(1 + count);
    }

    let mut entries = Vec::new();
    for k in 0..count {
        let Some(l) = lines.get(start + 1 + k) else {
            return EpochOutcome::Dropped; // truncated
        };
        let sys = l.first().copied().unwrap_or(b' ');
        if sys != b'G' {
            continue;
        }
        let Some(prn) = field_u32(l, 1..3) else { continue };
        if let Some(value) = field_f64(l, 3 + code_index * 16..3 + code_index * 16 + 14) {
            push_entry(&mut entries, prn.min(255) as u8, value);
        }
    }

    let epoch = GpsTime::from_calendar(year as i32, mm, dd, hh, mi, ss);
    if !entries.is_empty() {
        epochs.push(EpochObservation { epoch, entries });
    }
    EpochOutcome::Consumed(1 + count)
}
