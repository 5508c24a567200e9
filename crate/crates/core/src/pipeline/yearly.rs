//! Per-year spectra and GSVD sweeps over a panel.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::association::pearson_corr;
use crate::error::{Error, Result};
use crate::ingest::{CalendarIndex, Panel};
use crate::linalg::{gsvd, sym_eigen};
use crate::rmt::{simulate_gsv_null, CriticalBand, EmpiricalNull, SpectralSummary};

/// Rows of every calendar year present with all of its days.
pub fn complete_years(calendar: &CalendarIndex) -> Vec<(i32, Vec<usize>)> {
    let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, d) in calendar.days().iter().enumerate() {
        by_year.entry(d.year).or_default().push(i);
    }
    by_year
        .into_iter()
        .filter(|(y, rows)| {
            let len = if chrono::NaiveDate::from_ymd_opt(*y, 2, 29).is_some() { 366 } else { 365 };
            rows.len() == len
        })
        .collect()
}

/// Spectrum of one year's correlation matrix, or why it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct YearSpectrum {
    pub year: i32,
    pub outcome: std::result::Result<SpectralSummary, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearlySpectralSeries {
    /// Name of the source panel, e.g. `D` or `S`.
    pub label: String,
    pub years: Vec<YearSpectrum>,
}

/// Scalar tracks exposed by [`YearlySpectralSeries::track`].
pub const TRACK_NAMES: [&str; 4] = ["median", "top", "q10", "q90"];

impl YearlySpectralSeries {
    /// `(year, value)` of a scalar track; failed years are skipped.
    /// Names: `median`, `top`, `significant`, or `q0`, `q10`, ..., `q100`.
    pub fn track(&self, name: &str) -> Result<Vec<(i32, f64)>> {
        let pick: Box<dyn Fn(&SpectralSummary) -> f64> = match name {
            "median" => Box::new(|s| s.median()),
            "top" => Box::new(|s| s.top()),
            "significant" => Box::new(|s| s.significant_count() as f64),
            q if q.starts_with('q') => {
                let pct: usize = q[1..]
                    .parse()
                    .ok()
                    .filter(|p| p % 10 == 0 && *p <= 100)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown track '{name}'")))?;
                Box::new(move |s| s.quantiles[pct / 10])
            }
            _ => return Err(Error::InvalidArgument(format!("unknown track '{name}'"))),
        };
        Ok(self
            .years
            .iter()
            .filter_map(|y| y.outcome.as_ref().ok().map(|s| (y.year, pick(s))))
            .collect())
    }

    pub fn summaries(&self) -> impl Iterator<Item = (i32, &SpectralSummary)> {
        self.years.iter().filter_map(|y| y.outcome.as_ref().ok().map(|s| (y.year, s)))
    }
}

/// Correlation spectrum of one block of rows.
pub fn spectrum_of(panel: &Panel) -> Result<SpectralSummary> {
    let r = pearson_corr(panel)?;
    let e = sym_eigen(&r.values)?;
    SpectralSummary::new(e.values, panel.n_days(), panel.n_grids())
}

/// Pearson correlation spectrum of every complete year. Failures are
/// recorded per year and do not stop the series.
pub fn run_yearly_esd(panel: &Panel, label: &str) -> Result<YearlySpectralSeries> {
    let years = complete_years(panel.calendar());
    if years.is_empty() {
        return Err(Error::InvalidArgument("the panel contains no complete calendar year".into()));
    }
    let years = years
        .par_iter()
        .map(|(y, rows)| YearSpectrum {
            year: *y,
            outcome: spectrum_of(&panel.select_rows(rows)).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(YearlySpectralSeries {
        label: label.to_string(),
        years,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Successive calendar years `(y, y+1)`.
    YearPairs,
    /// First and second half of each year, each transposed to grids x days.
    TransposedHalfYears,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::YearPairs => "year-pairs",
            SweepMode::TransposedHalfYears => "transposed-half-years",
        }
    }
}

impl std::str::FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "year-pairs" | "pairs" => Ok(SweepMode::YearPairs),
            "transposed-half-years" | "transposed" => Ok(SweepMode::TransposedHalfYears),
            _ => Err(Error::InvalidArgument(format!("unknown sweep mode '{s}'"))),
        }
    }
}

/// GSVs of one pair with the matching null band.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGsv {
    pub gsv: Vec<f64>,
    pub log_gsv: Vec<f64>,
    pub theta: Vec<f64>,
    /// Band of the log null values.
    pub log_band: CriticalBand,
    pub outside_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPair {
    /// `1990/1991` for year pairs, `1990` for half-years.
    pub label: String,
    pub shape: (usize, usize, usize),
    pub outcome: std::result::Result<PairGsv, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsvdSweep {
    pub mode: SweepMode,
    pub pairs: Vec<SweepPair>,
    /// Simulated null per `(n1, n2, p)` shape.
    pub nulls: BTreeMap<(usize, usize, usize), EmpiricalNull>,
}

/// Null settings for a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullSettings {
    pub reps: usize,
    pub seed: u64,
    pub level: f64,
}

/// Row ranges of the two halves of a year: days 1-183 / 184-366 in leap
/// years, 1-182 / 184-365 otherwise (day 183 dropped).
pub fn half_year_rows(rows: &[usize]) -> (Vec<usize>, Vec<usize>) {
    match rows.len() {
        366 => (rows[..183].to_vec(), rows[183..].to_vec()),
        _ => (rows[..182].to_vec(), rows[183..].to_vec()),
    }
}

/// GSVD of every pair of the chosen mode against a simulated null of the
/// same shape. Shape failures are reported per pair.
pub fn run_gsvd_sweep(panel: &Panel, mode: SweepMode, null: NullSettings) -> Result<GsvdSweep> {
    run_gsvd_sweep_in_basis(panel, None, mode, null)
}

/// [`run_gsvd_sweep`] on `panel * basis`. For a trimmed panel whose rows are
/// all orthogonal to the removed right singular vectors, passing an
/// orthonormal basis of their complement gives a full-rank pair with the
/// same non-trivial generalized singular values.
pub fn run_gsvd_sweep_in_basis(
    panel: &Panel,
    basis: Option<&DMatrix<f64>>,
    mode: SweepMode,
    null: NullSettings,
) -> Result<GsvdSweep> {
    let years = complete_years(panel.calendar());
    let projected;
    let v = match basis {
        Some(b) => {
            if b.nrows() != panel.n_grids() || b.ncols() == 0 {
                return Err(Error::Shape(format!(
                    "basis is {}x{}, panel has {} grids",
                    b.nrows(),
                    b.ncols(),
                    panel.n_grids()
                )));
            }
            projected = panel.values() * b;
            &projected
        }
        None => panel.values(),
    };
    let mut jobs: Vec<(String, DMatrix<f64>, DMatrix<f64>)> = Vec::new();
    match mode {
        SweepMode::YearPairs => {
            if years.len() < 2 {
                return Err(Error::InvalidArgument("year-pair sweep needs at least 2 complete years".into()));
            }
            for w in years.windows(2) {
                let ((y1, r1), (y2, r2)) = (&w[0], &w[1]);
                if y2 - y1 != 1 {
                    continue;
                }
                jobs.push((format!("{y1}/{y2}"), v.select_rows(r1), v.select_rows(r2)));
            }
        }
        SweepMode::TransposedHalfYears => {
            if years.is_empty() {
                return Err(Error::InvalidArgument("half-year sweep needs a complete year".into()));
            }
            for (y, rows) in &years {
                let (a, b) = half_year_rows(rows);
                jobs.push((y.to_string(), v.select_rows(&a).transpose(), v.select_rows(&b).transpose()));
            }
        }
    }

    let mut nulls = BTreeMap::new();
    for (_, a, b) in &jobs {
        let shape = (a.nrows(), b.nrows(), a.ncols());
        if nulls.contains_key(&shape) || a.nrows() + b.nrows() < a.ncols() {
            continue;
        }
        let n = simulate_gsv_null(shape.0, shape.1, shape.2, null.reps, null.seed, null.level)?;
        nulls.insert(shape, n);
    }

    let pairs = jobs
        .par_iter()
        .map(|(label, a, b)| {
            let shape = (a.nrows(), b.nrows(), a.ncols());
            let outcome = (|| {
                let g = gsvd(a, b)?;
                let band = nulls
                    .get(&shape)
                    .ok_or_else(|| Error::Shape(format!("no null for shape {shape:?}")))?
                    .log_band();
                let gsv = g.gsv();
                let log_gsv: Vec<f64> = gsv.iter().map(|x| x.ln()).collect();
                let outside = log_gsv.iter().filter(|x| !band.contains(**x)).count();
                Ok::<_, Error>(PairGsv {
                    outside_fraction: outside as f64 / log_gsv.len() as f64,
                    theta: g.angular_distances(),
                    gsv,
                    log_gsv,
                    log_band: band,
                })
            })()
            .map_err(|e| e.to_string());
            SweepPair {
                label: label.clone(),
                shape,
                outcome,
            }
        })
        .collect();
    Ok(GsvdSweep { mode, pairs, nulls })
}

