//! Calendar dates stored as integer day offsets.

use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar day, stored as the number of days since 0001-01-01 (CE).
/// Integer arithmetic keeps calendar math exact and timezone-free.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Day(i32);

impl Day {
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Day> {
        NaiveDate::from_ymd_opt(year, month, day).map(|d| Day(d.num_days_from_ce()))
    }

    /// Parse `YYYY-MM-DD` or `DD.MM.YYYY`.
    pub fn parse(s: &str) -> Result<Day> {
        let s = s.trim();
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .or_else(|_| NaiveDate::parse_from_str(s, "%d.%m.%Y"))
            .map(|d| Day(d.num_days_from_ce()))
            .map_err(|_| Error::Argument(format!("unrecognized date '{s}'")))
    }

    pub fn offset(self, days: i32) -> Day {
        Day(self.0 + days)
    }

    pub fn succ(self) -> Day {
        Day(self.0 + 1)
    }

    /// Days from `self` to `other` (positive when `other` is later).
    pub fn days_until(self, other: Day) -> i32 {
        other.0 - self.0
    }

    fn as_naive(self) -> NaiveDate {
        NaiveDate::from_num_days_from_ce_opt(self.0).expect("valid day offset")
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_naive().format("%Y-%m-%d"))
    }
}

impl Serialize for Day {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Day {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Day, D::Error> {
        let s = String::deserialize(deserializer)?;
        Day::parse(&s).map_err(serde::de::Error::custom)
    }
}
