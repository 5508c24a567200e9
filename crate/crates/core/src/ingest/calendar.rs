use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};

use crate::error::{Error, Result};

/// Meteorological season of a calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Season {
    Djf,
    Mam,
    Jja,
    Son,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Djf, Season::Mam, Season::Jja, Season::Son];

    pub fn of_month(month: u32) -> Season {
        match month {
            12 | 1 | 2 => Season::Djf,
            3..=5 => Season::Mam,
            6..=8 => Season::Jja,
            _ => Season::Son,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Djf => "DJF",
            Season::Mam => "MAM",
            Season::Jja => "JJA",
            Season::Son => "SON",
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Season {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DJF" => Ok(Season::Djf),
            "MAM" => Ok(Season::Mam),
            "JJA" => Ok(Season::Jja),
            "SON" => Ok(Season::Son),
            _ => Err(Error::InvalidArgument(format!("unknown season '{s}'"))),
        }
    }
}

/// How December is attached to a DJF season.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecemberRule {
    /// December of year y joins January-February of y+1.
    #[default]
    NextYear,
    /// December stays with January-February of its own year.
    SameYear,
}

/// Tags attached to one day of the study window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DayTag {
    pub date: NaiveDate,
    pub year: i32,
    pub month: u32,
    pub season: Season,
    pub weekend: bool,
}

impl DayTag {
    pub fn new(date: NaiveDate) -> Self {
        Self {
            date,
            year: date.year(),
            month: date.month(),
            season: Season::of_month(date.month()),
            weekend: matches!(date.weekday(), Weekday::Sat | Weekday::Sun),
        }
    }

    /// Year the day's season is credited to under `rule`.
    pub fn season_year(&self, rule: DecemberRule) -> i32 {
        if self.month == 12 && rule == DecemberRule::NextYear {
            self.year + 1
        } else {
            self.year
        }
    }

    /// Zero-based position within a 365-day seasonal cycle. February 29
    /// shares the index of February 28; later leap-year days shift back by one.
    pub fn seasonal_phase(&self) -> usize {
        let ord = self.date.ordinal0() as usize;
        if self.date.leap_year() && ord >= 59 {
            if ord == 59 {
                58
            } else {
                ord - 1
            }
        } else {
            ord
        }
    }
}

/// Day-indexed calendar for the rows of a panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalendarIndex {
    days: Vec<DayTag>,
}

impl CalendarIndex {
    /// Build the calendar for every day in `start..=end`.
    pub fn build(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidArgument(format!(
                "calendar start {start} is after end {end}"
            )));
        }
        let days = start.iter_days().take_while(|d| *d <= end).map(DayTag::new).collect();
        Ok(Self { days })
    }

    pub fn parse_and_build(start: &str, end: &str) -> Result<Self> {
        Self::build(parse_date(start)?, parse_date(end)?)
    }

    pub fn from_days(days: Vec<DayTag>) -> Self {
        Self { days }
    }

    pub fn n_days(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn days(&self) -> &[DayTag] {
        &self.days
    }

    pub fn day(&self, row: usize) -> &DayTag {
        &self.days[row]
    }

    pub fn start_date(&self) -> Option<NaiveDate> {
        self.days.first().map(|d| d.date)
    }

    pub fn end_date(&self) -> Option<NaiveDate> {
        self.days.last().map(|d| d.date)
    }

    /// Distinct calendar years, ascending.
    pub fn years(&self) -> Vec<i32> {
        let mut ys: Vec<i32> = self.days.iter().map(|d| d.year).collect();
        ys.dedup();
        ys.sort_unstable();
        ys.dedup();
        ys
    }

    /// Row index of `date`, assuming the calendar is contiguous.
    pub fn row_of(&self, date: NaiveDate) -> Option<usize> {
        let start = self.start_date()?;
        let offset = (date - start).num_days();
        if offset < 0 {
            return None;
        }
        let row = offset as usize;
        (row < self.days.len() && self.days[row].date == date).then_some(row)
    }

    pub fn restrict(&self, rows: &[usize]) -> Self {
        Self {
            days: rows.iter().map(|&r| self.days[r]).collect(),
        }
    }

    pub fn rows_where(&self, pred: impl Fn(&DayTag) -> bool) -> Vec<usize> {
        self.days
            .iter()
            .enumerate()
            .filter(|(_, d)| pred(d))
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::InvalidArgument(format!("bad date '{s}': {e}")))
}
