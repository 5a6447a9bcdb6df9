//! GPS time as (week number, seconds of week).

use crate::constants::SECONDS_PER_WEEK;

/// An instant in GPS time. The week number is the continuous count since the
/// GPS epoch (1980-01-06), not reduced modulo 1024.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpsTime {
    pub week: i32,
    /// Seconds into the week, in [0, 604800).
    pub sow: f64,
}

impl GpsTime {
    pub fn new(week: i32, sow: f64) -> Self {
        Self { week, sow }.normalized()
    }

    /// Difference `self - other` in seconds, across week boundaries.
    pub fn diff(&self, other: &GpsTime) -> f64 {
        f64::from(self.week - other.week) * SECONDS_PER_WEEK + (self.sow - other.sow)
    }

    pub fn add_seconds(&self, dt: f64) -> GpsTime {
        GpsTime::new(self.week, self.sow + dt)
    }

    /// Difference to a bare seconds-of-week value, resolved to the nearest
    /// half week. Broadcast records quote toe as seconds of week only, so a
    /// query shortly after a week rollover must wrap.
    pub fn diff_sow(&self, sow: f64) -> f64 {
        let mut dt = self.sow - sow;
        if dt > SECONDS_PER_WEEK / 2.0 {
            dt -= SECONDS_PER_WEEK;
        } else if dt < -SECONDS_PER_WEEK / 2.0 {
            dt += SECONDS_PER_WEEK;
        }
        dt
    }

    fn normalized(mut self) -> Self {
        while self.sow >= SECONDS_PER_WEEK {
            self.sow -= SECONDS_PER_WEEK;
            self.week += 1;
        }
        while self.sow < 0.0 {
            self.sow += SECONDS_PER_WEEK;
            self.week -= 1;
        }
        self
    }

    /// GPS time from a civil date/time already expressed on the GPS time
    /// scale (RINEX navigation and GPS observation epochs are).
    pub fn from_calendar(year: i32, month: u32, day: u32, hour: u32, minute: u32, second: f64) -> Self {
        let days = days_from_civil(year, month, day) - days_from_civil(1980, 1, 6);
        let secs = f64::from(hour) * 3600.0 + f64::from(minute) * 60.0 + second;
        let week = days.div_euclid(7);
        let dow = days.rem_euclid(7);
        GpsTime::new(week as i32, f64::from(dow as i32) * 86_400.0 + secs)
    }
}

/// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
/// days_from_civil).
fn days_from_civil(y: i32, m: u32, d: u32) -> i64 {
    let y = i64::from(y) - i64::from(m <= 2);
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = (y - era * 400) as u64;
    let mp = u64::from((m + 9) % 12);
    let doy = (153 * mp + 2) / 5 + u64::from(d) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe as i64 - 719_468
}
