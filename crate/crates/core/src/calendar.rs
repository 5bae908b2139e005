//! Calendar month arithmetic for monthly panels and rolling windows.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};

/// A calendar month, ordered chronologically and serialized as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Option<Self> {
        (1..=12).contains(&month).then_some(Self { year, month })
    }

    pub fn from_date(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month() as u8,
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    /// Months since 0000-01; the working representation for arithmetic.
    fn index(&self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_index(idx: i64) -> Self {
        Self {
            year: idx.div_euclid(12) as i32,
            month: (idx.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn plus_months(&self, n: i64) -> Self {
        Self::from_index(self.index() + n)
    }

    pub fn minus_months(&self, n: i64) -> Self {
        Self::from_index(self.index() - n)
    }

    /// Signed number of months from `other` to `self`.
    pub fn months_since(&self, other: YearMonth) -> i64 {
        self.index() - other.index()
    }

    pub fn first_day(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month as u32, 1).expect("valid month")
    }

    /// Inclusive iterator over `self..=last`.
    pub fn range_inclusive(self, last: YearMonth) -> impl Iterator<Item = YearMonth> {
        (self.index()..=last.index()).map(YearMonth::from_index)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid month literal {0:?}, expected YYYY-MM")]
pub struct ParseYearMonthError(String);

impl FromStr for YearMonth {
    type Err = ParseYearMonthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseYearMonthError(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u8 = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).ok_or_else(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_crosses_year_boundaries() {
        let m = YearMonth::new(2001, 2).unwrap();
        assert_eq!(m.minus_months(12), YearMonth::new(2000, 2).unwrap());
        assert_eq!(m.minus_months(2), YearMonth::new(2000, 12).unwrap());
        assert_eq!(m.plus_months(11), YearMonth::new(2002, 1).unwrap());
        assert_eq!(m.months_since(YearMonth::new(2000, 11).unwrap()), 3);
    }

    #[test]
    fn parse_and_display_round_trip() {
        let m: YearMonth = "1993-07".parse().unwrap();
        assert_eq!(m, YearMonth::new(1993, 7).unwrap());
        assert_eq!(m.to_string(), "1993-07");
        assert!("1993-13".parse::<YearMonth>().is_err());
        assert!("93-07".parse::<YearMonth>().is_err());
    }

    #[test]
    fn ordering_is_chronological() {
        let a = YearMonth::new(1999, 12).unwrap();
        let b = YearMonth::new(2000, 1).unwrap();
        assert!(a < b);
        let months: Vec<_> = a.range_inclusive(b.plus_months(1)).collect();
        assert_eq!(months.len(), 3);
    }
}
