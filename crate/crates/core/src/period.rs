use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar month. Ordered chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    /// Months since year 0, January.
    pub fn ordinal(&self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(12) as i32;
        let month = ordinal.rem_euclid(12) as u32 + 1;
        Self { year, month }
    }

    pub fn add_months(&self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Signed number of months from `other` to `self`.
    pub fn months_since(&self, other: &YearMonth) -> i64 {
        self.ordinal() - other.ordinal()
    }

    /// Parses `yyyy-mm`, `yyyy-mm-dd`, `m/d/yyyy` and `yyyy:Mmm`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("unrecognised date '{s}'"));
        if let Some((y, m)) = s.split_once(":M") {
            let year = y.parse().map_err(|_| bad())?;
            let month = m.parse().map_err(|_| bad())?;
            return Self::new(year, month).map_err(|_| bad());
        }
        if s.contains('/') {
            let parts: Vec<&str> = s.split('/').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let month = parts[0].parse().map_err(|_| bad())?;
            let year = parts[2].parse().map_err(|_| bad())?;
            return Self::new(year, month).map_err(|_| bad());
        }
        let parts: Vec<&str> = s.split('-').collect();
        if parts.len() < 2 || parts.len() > 3 || parts[0].len() != 4 {
            return Err(bad());
        }
        let year = parts[0].parse().map_err(|_| bad())?;
        let month = parts[1].parse().map_err(|_| bad())?;
        Self::new(year, month).map_err(|_| bad())
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        YearMonth::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_formats() {
        let expect = YearMonth::new(1960, 1).unwrap();
        assert_eq!(YearMonth::parse("1960-01").unwrap(), expect);
        assert_eq!(YearMonth::parse("1960-01-01").unwrap(), expect);
        assert_eq!(YearMonth::parse("1/1/1960").unwrap(), expect);
        assert_eq!(YearMonth::parse("1960:M1").unwrap(), expect);
        assert!(YearMonth::parse("1960-13").is_err());
        assert!(YearMonth::parse("Transform:").is_err());
    }

    #[test]
    fn month_arithmetic() {
        let jan = YearMonth::new(2000, 1).unwrap();
        assert_eq!(jan.add_months(-3).to_string(), "1999-10");
        assert_eq!(jan.add_months(12).to_string(), "2001-01");
        let dec = YearMonth::new(2024, 12).unwrap();
        assert_eq!(dec.months_since(&jan), 299);
    }
}
