//! Timestamps as whole seconds since 1970-01-01 00:00:00 (timezone-naive),
//! dates as whole days since the same epoch.

use chrono::{NaiveDate, NaiveDateTime};

pub type Timestamp = i64;
pub type Day = i64;

pub const MINUTE: i64 = 60;
pub const HOUR: i64 = 3600;
pub const DAY: i64 = 86_400;

const FORMATS: [&str; 4] = [
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M",
];

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch")
}

/// Parses an ISO-8601 timestamp; a bare date is read as midnight.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    for f in FORMATS {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, f) {
            return Some(t.and_utc().timestamp());
        }
    }
    parse_date(s).map(|d| d * DAY)
}

pub fn parse_date(s: &str) -> Option<Day> {
    let d = NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()?;
    Some((d - epoch()).num_days())
}

pub fn format_timestamp(t: Timestamp) -> String {
    match chrono::DateTime::from_timestamp(t, 0) {
        Some(dt) => dt.naive_utc().format("%Y-%m-%d %H:%M:%S").to_string(),
        None => t.to_string(),
    }
}

pub fn format_date(d: Day) -> String {
    (epoch() + chrono::Duration::days(d)).format("%Y-%m-%d").to_string()
}

pub fn day_of(t: Timestamp) -> Day {
    t.div_euclid(DAY)
}

/// True when the string carries only a calendar date.
pub fn is_date_only(s: &str) -> bool {
    parse_date(s).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = parse_timestamp("2180-01-01 10:00:00").unwrap();
        assert_eq!(format_timestamp(t), "2180-01-01 10:00:00");
        assert_eq!(parse_timestamp("2180-01-01T10:00:00"), Some(t));
        assert_eq!(day_of(t) * DAY + 10 * HOUR, t);
        assert_eq!(format_date(day_of(t)), "2180-01-01");
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse_timestamp("yesterday"), None);
        assert_eq!(parse_timestamp("2180-13-01 00:00:00"), None);
    }

    #[test]
    fn pre_epoch_days_floor() {
        let t = parse_timestamp("1969-12-31 23:00:00").unwrap();
        assert_eq!(day_of(t), -1);
    }
}
