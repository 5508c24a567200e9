use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use super::calendar::{parse_date, CalendarIndex, DecemberRule, Season};
use super::grid::{check_header, GridSet};
use crate::error::{Error, Result};

/// Day x grid matrix straight from the long-format file. Cells with no input
/// row hold `NaN`.
#[derive(Debug, Clone)]
pub struct RawPanel {
    pub values: DMatrix<f64>,
    pub calendar: CalendarIndex,
    pub grids: GridSet,
}

impl RawPanel {
    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn missing_in_column(&self, j: usize) -> usize {
        self.values.column(j).iter().filter(|v| v.is_nan()).count()
    }
}

impl From<Panel> for RawPanel {
    fn from(p: Panel) -> Self {
        RawPanel {
            values: p.values,
            calendar: p.calendar,
            grids: p.grids,
        }
    }
}

/// Complete-data panel: rows are days of `calendar`, columns are cells of
/// `grids`, every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    values: DMatrix<f64>,
    calendar: CalendarIndex,
    grids: GridSet,
    order_tag: String,
}

impl Panel {
    pub fn new(values: DMatrix<f64>, calendar: CalendarIndex, grids: GridSet) -> Result<Self> {
        if values.nrows() != calendar.n_days() || values.ncols() != grids.len() {
            return Err(Error::Shape(format!(
                "panel is {}x{} but calendar has {} days and catalog {} grids",
                values.nrows(),
                values.ncols(),
                calendar.n_days(),
                grids.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("panel values"));
        }
        Ok(Self {
            values,
            calendar,
            grids,
            order_tag: "input".to_string(),
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn calendar(&self) -> &CalendarIndex {
        &self.calendar
    }

    pub fn grids(&self) -> &GridSet {
        &self.grids
    }

    pub fn order_tag(&self) -> &str {
        &self.order_tag
    }

    pub fn n_days(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_grids(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn with_order_tag(mut self, tag: impl Into<String>) -> Self {
        self.order_tag = tag.into();
        self
    }

    /// Same calendar and grids, new values of identical shape.
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        let mut p = Panel::new(values, self.calendar.clone(), self.grids.clone())?;
        p.order_tag = self.order_tag.clone();
        Ok(p)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Panel {
        Panel {
            values: self.values.select_rows(rows),
            calendar: self.calendar.restrict(rows),
            grids: self.grids.clone(),
            order_tag: self.order_tag.clone(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Panel {
        Panel {
            values: self.values.select_columns(cols),
            calendar: self.calendar.clone(),
            grids: self.grids.select(cols),
            order_tag: self.order_tag.clone(),
        }
    }

    /// Restrict to a temporal or spatial subset.
    pub fn slice(&self, selector: &Selector) -> Result<Panel> {
        let out = match *selector {
            Selector::Zone(z) => self.select_columns(&self.grids.zone_positions(z)),
            _ => self.select_rows(&selector.rows(&self.calendar)),
        };
        if out.n_days() == 0 || out.n_grids() == 0 {
            return Err(Error::EmptySelection(format!("{selector:?}")));
        }
        Ok(out)
    }

    pub fn group_average(&self, by: GroupBy, rule: DecemberRule) -> Vec<GroupMean> {
        group_average_matrix(&self.values, &self.calendar, &self.grids, by, rule)
    }
}

/// Row or column subset of a panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    Year(i32),
    /// Month of year, pooled over all years.
    Month(u32),
    YearMonth(i32, u32),
    /// Season tag, pooled over all years present.
    Season(Season),
    /// One season of one season-year, December attached per `DecemberRule`.
    SeasonOfYear(i32, Season, DecemberRule),
    Zone(u8),
}

impl Selector {
    /// Row indices of the calendar selected by a temporal selector (empty for `Zone`).
    pub fn rows(&self, cal: &CalendarIndex) -> Vec<usize> {
        match *self {
            Selector::Year(y) => cal.rows_where(|d| d.year == y),
            Selector::Month(m) => cal.rows_where(|d| d.month == m),
            Selector::YearMonth(y, m) => cal.rows_where(|d| d.year == y && d.month == m),
            Selector::Season(s) => cal.rows_where(|d| d.season == s),
            Selector::SeasonOfYear(y, s, rule) => {
                cal.rows_where(|d| d.season == s && d.season_year(rule) == y)
            }
            Selector::Zone(_) => (0..cal.n_days()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Year,
    YearSeason,
    YearZone,
    YearSeasonZone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub year: i32,
    pub season: Option<Season>,
    pub zone: Option<u8>,
}

/// Mean of one grid over one calendar group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMean {
    pub key: GroupKey,
    pub grid_id: String,
    pub mean: f64,
    /// Non-missing days that entered the mean.
    pub n_days: usize,
}

/// Per-(group, grid) means over non-missing days. DJF groups follow `rule`;
/// season-years past the last calendar year are dropped.
pub fn group_average_matrix(
    values: &DMatrix<f64>,
    calendar: &CalendarIndex,
    grids: &GridSet,
    by: GroupBy,
    rule: DecemberRule,
) -> Vec<GroupMean> {
    let with_season = matches!(by, GroupBy::YearSeason | GroupBy::YearSeasonZone);
    let with_zone = matches!(by, GroupBy::YearZone | GroupBy::YearSeasonZone);
    let last_year = calendar.years().last().copied().unwrap_or(i32::MIN);

    let mut rows_by_time: BTreeMap<(i32, Option<Season>), Vec<usize>> = BTreeMap::new();
    for (r, d) in calendar.days().iter().enumerate() {
        let key = if with_season {
            let y = d.season_year(rule);
            if y > last_year {
                continue;
            }
            (y, Some(d.season))
        } else {
            (d.year, None)
        };
        rows_by_time.entry(key).or_default().push(r);
    }

    let mut out = Vec::new();
    for ((year, season), rows) in &rows_by_time {
        let mut block = Vec::with_capacity(grids.len());
        for (j, cell) in grids.cells().iter().enumerate() {
            let (sum, n) = rows
                .iter()
                .map(|&r| values[(r, j)])
                .filter(|v| !v.is_nan())
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            if n == 0 {
                continue;
            }
            let key = GroupKey {
                year: *year,
                season: *season,
                zone: with_zone.then_some(cell.zone),
            };
            block.push(GroupMean {
                key,
                grid_id: cell.grid_id.clone(),
                mean: sum / n as f64,
                n_days: n,
            });
        }
        // Zone grouping keeps zones contiguous; column order within a zone.
        block.sort_by_key(|g| g.key);
        out.extend(block);
    }
    out
}

/// Average of grid means within each group (the curve plotted per zone).
pub fn spatial_average(rows: &[GroupMean]) -> Vec<(GroupKey, f64)> {
    let mut acc: BTreeMap<GroupKey, (f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = acc.entry(r.key).or_insert((0.0, 0));
        e.0 += r.mean;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

#[derive(Debug, Deserialize)]
struct DailyRow {
    date: String,
    grid_id: String,
    value: String,
}

/// Load long-format daily values (`date,grid_id,value`) onto the day x grid
/// matrix of `calendar` x `grids`. Absent rows become missing cells.
pub fn load_daily_values(path: &Path, grids: &GridSet, calendar: &CalendarIndex) -> Result<RawPanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    check_header(path, rdr.headers()?, &["date", "grid_id", "value"])?;
    let mut values = DMatrix::from_element(calendar.n_days(), grids.len(), f64::NAN);
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for (i, rec) in rdr.deserialize::<DailyRow>().enumerate() {
        let line = i as u64 + 2;
        let row = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let date = parse_date(&row.date).map_err(|e| Error::parse(path, line, e.to_string()))?;
        let r = calendar
            .row_of(date)
            .ok_or_else(|| Error::parse(path, line, format!("date {date} outside the study window")))?;
        let c = grids
            .position(&row.grid_id)
            .ok_or_else(|| Error::parse(path, line, format!("unknown grid_id '{}'", row.grid_id)))?;
        let v: f64 = row
            .value
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad value '{}'", row.value)))?;
        if !v.is_finite() {
            return Err(Error::parse(path, line, format!("non-finite value '{}'", row.value)));
        }
        if !seen.insert((r, c)) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate row for ({date}, {})", row.grid_id),
            ));
        }
        values[(r, c)] = v;
    }
    Ok(RawPanel {
        values,
        calendar: calendar.clone(),
        grids: grids.clone(),
    })
}

/// Outcome of completeness filtering.
#[derive(Debug, Clone)]
pub struct CompleteSelection {
    pub panel: Panel,
    /// Grid ids of columns removed for having any missing day.
    pub dropped: Vec<String>,
}

impl CompleteSelection {
    /// True when no column survived.
    pub fn is_empty(&self) -> bool {
        self.panel.n_grids() == 0
    }
}

/// Drop every column with a missing value.
pub fn select_complete(raw: &RawPanel) -> CompleteSelection {
    let mut grids = raw.grids.clone();
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..raw.values.ncols() {
        let complete = raw.missing_in_column(j) == 0;
        grids.set_complete(j, complete);
        if complete {
            keep.push(j);
        } else {
            dropped.push(grids.cell(j).grid_id.clone());
        }
    }
    let panel = Panel {
        values: raw.values.select_columns(&keep),
        calendar: raw.calendar.clone(),
        grids: grids.select(&keep),
        order_tag: "input".to_string(),
    };
    CompleteSelection { panel, dropped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::GridCell;
    use chrono::NaiveDate;
    use std::io::Write;

    fn grids(n: usize) -> GridSet {
        GridSet::new(
            (0..n)
                .map(|i| GridCell::new(format!("g{i}"), 10.0 + i as f64, 70.0, 1 + (i % 6) as u8))
                .collect(),
        )
        .unwrap()
    }

    fn cal(y0: i32, y1: i32) -> CalendarIndex {
        CalendarIndex::build(
            NaiveDate::from_ymd_opt(y0, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(y1, 12, 31).unwrap(),
        )
        .unwrap()
    }

    fn long_file(cal: &CalendarIndex, g: &GridSet, skip: Option<(usize, usize)>) -> String {
        let mut s = String::from("date,grid_id,value\n");
        for (r, d) in cal.days().iter().enumerate() {
            for (c, cell) in g.cells().iter().enumerate() {
                if skip == Some((r, c)) {
                    continue;
                }
                s += &format!("{},{},{}\n", d.date, cell.grid_id, (r * 7 + c) % 13);
            }
        }
        s
    }

    fn tmp(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn full_file_has_no_missing() {
        let (c, g) = (cal(2001, 2002), grids(10));
        let f = tmp(&long_file(&c, &g, None));
        let raw = load_daily_values(f.path(), &g, &c).unwrap();
        assert_eq!(raw.values.shape(), (730, 10));
        assert_eq!(raw.missing_count(), 0);
        let sel = select_complete(&raw);
        assert_eq!(sel.panel.n_grids(), 10);
        assert!(sel.dropped.is_empty());
        assert_eq!(sel.panel.values(), &raw.values);
    }

    #[test]
    fn one_gap_one_missing() {
        let (c, g) = (cal(2001, 2002), grids(10));
        let f = tmp(&long_file(&c, &g, Some((100, 3))));
        let raw = load_daily_values(f.path(), &g, &c).unwrap();
        assert_eq!(raw.missing_count(), 1);
        let sel = select_complete(&raw);
        assert_eq!(sel.panel.n_grids(), 9);
        assert_eq!(sel.dropped, vec!["g3".to_string()]);
        assert!(sel.panel.grids().cells().iter().all(|c| c.complete));
    }

    #[test]
    fn duplicate_unknown_and_out_of_window() {
        let (c, g) = (cal(2001, 2001), grids(2));
        let f = tmp("date,grid_id,value\n2001-01-01,g0,1\n2001-01-01,g0,2\n");
        assert!(load_daily_values(f.path(), &g, &c).unwrap_err().to_string().contains("duplicate"));
        let f = tmp("date,grid_id,value\n2001-01-01,zz,1\n");
        assert!(load_daily_values(f.path(), &g, &c).is_err());
        let f = tmp("date,grid_id,value\n2002-01-01,g0,1\n");
        assert!(load_daily_values(f.path(), &g, &c).is_err());
        let f = tmp("date,grid_id,value\n2001-01-01,g0,NaN\n");
        assert!(load_daily_values(f.path(), &g, &c).is_err());
    }

    #[test]
    fn all_columns_gapped() {
        let (c, g) = (cal(2001, 2001), grids(3));
        let f = tmp("date,grid_id,value\n2001-01-01,g0,1\n");
        let sel = select_complete(&load_daily_values(f.path(), &g, &c).unwrap());
        assert!(sel.is_empty());
        assert_eq!(sel.dropped.len(), 3);
    }

    #[test]
    fn slicing() {
        let c = cal(1951, 1953);
        let g = grids(6);
        let p = Panel::new(DMatrix::zeros(c.n_days(), 6), c, g).unwrap();
        assert_eq!(p.slice(&Selector::Year(1952)).unwrap().n_days(), 366);
        let y = p.slice(&Selector::Year(1951)).unwrap();
        assert_eq!(y.slice(&Selector::Season(Season::Jja)).unwrap().n_days(), 92);
        let z = p.slice(&Selector::Zone(5)).unwrap();
        assert_eq!(z.n_grids(), 1);
        assert_eq!(z.grids().cell(0).zone, 5);
        assert!(p.slice(&Selector::Year(1990)).is_err());
        let djf = p
            .slice(&Selector::SeasonOfYear(1952, Season::Djf, DecemberRule::NextYear))
            .unwrap();
        // Dec 1951 + Jan 1952 + Feb 1952 (leap)
        assert_eq!(djf.n_days(), 31 + 31 + 29);
    }

    #[test]
    fn constant_and_two_day_means() {
        let c = cal(2001, 2001);
        let g = grids(3);
        let p = Panel::new(DMatrix::from_element(365, 3, 4.25), c, g.clone()).unwrap();
        for m in p.group_average(GroupBy::YearSeasonZone, DecemberRule::NextYear) {
            assert_eq!(m.mean, 4.25);
        }
        let c2 = CalendarIndex::parse_and_build("2001-03-01", "2001-03-02").unwrap();
        let v = DMatrix::from_fn(2, 3, |r, _| if r == 0 { 1.0 } else { 3.0 });
        let p2 = Panel::new(v, c2, g).unwrap();
        let m = p2.group_average(GroupBy::Year, DecemberRule::NextYear);
        assert_eq!(m.len(), 3);
        assert!(m.iter().all(|g| g.mean == 2.0 && g.n_days == 2));
    }

    #[test]
    fn djf_first_and_last_year() {
        let c = cal(2001, 2002);
        let p = Panel::new(DMatrix::from_element(c.n_days(), 1, 1.0), c, grids(1)).unwrap();
        let m = p.group_average(GroupBy::YearSeason, DecemberRule::NextYear);
        let djf: Vec<_> = m.iter().filter(|g| g.key.season == Some(Season::Djf)).collect();
        assert_eq!(djf.len(), 2);
        assert_eq!(djf[0].key.year, 2001);
        assert_eq!(djf[0].n_days, 59);
        assert_eq!(djf[1].key.year, 2002);
        assert_eq!(djf[1].n_days, 31 + 59);
    }

    #[test]
    fn raw_means_skip_missing() {
        let c = CalendarIndex::parse_and_build("2001-01-01", "2001-01-03").unwrap();
        let mut v = DMatrix::from_element(3, 1, 2.0);
        v[(1, 0)] = f64::NAN;
        v[(2, 0)] = 5.0;
        let m = group_average_matrix(&v, &c, &grids(1), GroupBy::Year, DecemberRule::NextYear);
        assert_eq!(m[0].mean, 3.5);
        assert_eq!(m[0].n_days, 2);
    }
}
