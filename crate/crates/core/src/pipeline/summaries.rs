//! Descriptive summaries of analysis series: single-split change summaries,
//! ENSO-phase groups and calendar strata of singular vectors.

use std::collections::BTreeMap;

use crate::association::SbSlice;
use crate::error::{Error, Result};
use crate::ingest::{CalendarIndex, EnsoPhase, EnsoTable};
use crate::linalg::SvdFactorization;
use crate::stats::{mean, FiveNumber};

use super::yearly::YearlySpectralSeries;

/// Minimum number of points in a change summary.
pub const MIN_CHANGE_POINTS: usize = 8;
/// Minimum segment length on either side of a split.
pub const MIN_SEGMENT: usize = 2;

/// Best single split of a series. Descriptive only: no significance is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePoint {
    pub n: usize,
    /// Index of the first point after the split; `None` for a constant series.
    pub split: Option<usize>,
    /// Between-segment over within-segment variance (`SSB / (SSW / (n - 2))`).
    /// Zero for a constant series, infinite for a noiseless step.
    pub ratio: f64,
    pub mean_before: f64,
    pub mean_after: f64,
}

/// Split minimizing the pooled within-segment sum of squares. Ties go to the
/// earliest split.
pub fn change_summary(values: &[f64]) -> Result<ChangePoint> {
    let n = values.len();
    if n < MIN_CHANGE_POINTS {
        return Err(Error::InvalidArgument(format!(
            "change summary needs at least {MIN_CHANGE_POINTS} points, got {n}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("change-summary series"));
    }
    let m = mean(values);
    let total: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    if total <= (1e-13 * scale).powi(2) * n as f64 {
        return Ok(ChangePoint {
            n,
            split: None,
            ratio: 0.0,
            mean_before: m,
            mean_after: m,
        });
    }
    let ss = |s: &[f64]| {
        let mu = mean(s);
        (mu, s.iter().map(|v| (v - mu).powi(2)).sum::<f64>())
    };
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for k in MIN_SEGMENT..=n - MIN_SEGMENT {
        let (m1, s1) = ss(&values[..k]);
        let (m2, s2) = ss(&values[k..]);
        let within = s1 + s2;
        if best.is_none_or(|b| within < b.1) {
            best = Some((k, within, m1, m2));
        }
    }
    let (k, within, m1, m2) = best.expect("at least one admissible split");
    let between = k as f64 * (m1 - m).powi(2) + (n - k) as f64 * (m2 - m).powi(2);
    let ratio = if within > 0.0 {
        between / (within / (n - 2) as f64)
    } else {
        f64::INFINITY
    };
    Ok(ChangePoint {
        n,
        split: Some(k),
        ratio,
        mean_before: m1,
        mean_after: m2,
    })
}

/// A labelled scalar series, e.g. a yearly spectral track or an S_B series.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub name: String,
    pub points: Vec<(String, f64)>,
}

impl Track {
    pub fn from_years(name: impl Into<String>, points: &[(i32, f64)]) -> Self {
        Self {
            name: name.into(),
            points: points.iter().map(|(y, v)| (y.to_string(), *v)).collect(),
        }
    }

    /// Successful slices of an S_B series.
    pub fn from_sb(name: impl Into<String>, series: &[SbSlice]) -> Self {
        Self {
            name: name.into(),
            points: series.iter().filter_map(|s| s.value().map(|v| (s.label(), v))).collect(),
        }
    }

    /// Every track of a yearly spectral series, named `<label>:<track>`.
    pub fn from_spectra(series: &YearlySpectralSeries) -> Result<Vec<Self>> {
        super::yearly::TRACK_NAMES
            .iter()
            .map(|t| Ok(Self::from_years(format!("{}:{t}", series.label), &series.track(t)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeRow {
    pub track: String,
    pub change: ChangePoint,
    /// Label of the first point after the split.
    pub split_label: Option<String>,
}

/// Change summary of every track.
pub fn run_change_summary(tracks: &[Track]) -> Result<Vec<ChangeRow>> {
    tracks
        .iter()
        .map(|t| {
            let values: Vec<f64> = t.points.iter().map(|p| p.1).collect();
            let change = change_summary(&values)
                .map_err(|e| Error::InvalidArgument(format!("track '{}': {e}", t.name)))?;
            let split_label = change.split.map(|k| t.points[k].0.clone());
            Ok(ChangeRow {
                track: t.name.clone(),
                change,
                split_label,
            })
        })
        .collect()
}

/// Summary of one ENSO phase group.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub phase: EnsoPhase,
    pub count: usize,
    pub five: FiveNumber,
    pub values: Vec<f64>,
}

impl PhaseSummary {
    pub fn iqr(&self) -> f64 {
        self.five.iqr()
    }
}

/// Group a yearly series by ENSO phase. Phases without years are omitted;
/// groups come in `ElNino`, `LaNina`, `Neutral` order and are insensitive to
/// the order of `series`.
pub fn run_enso_stratification(series: &[(i32, f64)], enso: &EnsoTable) -> Result<Vec<PhaseSummary>> {
    let mut groups: BTreeMap<usize, Vec<(i32, f64)>> = BTreeMap::new();
    for &(year, v) in series {
        let phase = enso
            .phase(year)
            .ok_or_else(|| Error::Validation(format!("no ENSO phase for year {year}")))?;
        let idx = EnsoPhase::ALL.iter().position(|p| *p == phase).expect("phase listed");
        groups.entry(idx).or_default().push((year, v));
    }
    Ok(groups
        .into_iter()
        .map(|(idx, mut pts)| {
            pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let values: Vec<f64> = pts.into_iter().map(|p| p.1).collect();
            PhaseSummary {
                phase: EnsoPhase::ALL[idx],
                count: values.len(),
                five: FiveNumber::from_values(&values).expect("non-empty group"),
                values,
            }
        })
        .collect())
}

/// One calendar group of one singular-vector component.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumRow {
    /// 1-based component index.
    pub component: usize,
    pub group: String,
    pub count: usize,
    pub mean: f64,
    pub five: FiveNumber,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvStrata {
    /// Groups `01` .. `12`.
    pub by_month: Vec<StratumRow>,
    /// Groups `<year>/weekday` and `<year>/weekend`.
    pub by_weekpart: Vec<StratumRow>,
}

/// Number of leading left singular vectors stratified by default.
pub const STRATA_COMPONENTS: usize = 6;

fn strata_rows(f: &SvdFactorization, top: usize, keys: &[String]) -> Vec<StratumRow> {
    let mut rows = Vec::new();
    for c in 0..top {
        let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (i, key) in keys.iter().enumerate() {
            groups.entry(key.as_str()).or_default().push(f.u[(i, c)]);
        }
        for (g, values) in groups {
            rows.push(StratumRow {
                component: c + 1,
                group: g.to_string(),
                count: values.len(),
                mean: mean(&values),
                five: FiveNumber::from_values(&values).expect("non-empty group"),
                values,
            });
        }
    }
    rows
}

/// Components of the top `top` left singular vectors grouped by month and by
/// (year, weekday/weekend).
pub fn run_singular_vector_strata(f: &SvdFactorization, calendar: &CalendarIndex, top: usize) -> Result<SvStrata> {
    if f.u.nrows() != calendar.n_days() {
        return Err(Error::Shape(format!(
            "left singular vectors have {} rows, calendar has {} days",
            f.u.nrows(),
            calendar.n_days()
        )));
    }
    let top = top.min(f.rank());
    let month: Vec<String> = calendar.days().iter().map(|d| format!("{:02}", d.month)).collect();
    let week: Vec<String> = calendar
        .days()
        .iter()
        .map(|d| format!("{}/{}", d.year, if d.weekend { "weekend" } else { "weekday" }))
        .collect();
    Ok(SvStrata {
        by_month: strata_rows(f, top, &month),
        by_weekpart: strata_rows(f, top, &week),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn constant_series_has_no_split() {
        let c = change_summary(&[3.0; 10]).unwrap();
        assert_eq!(c.split, None);
        assert_eq!(c.ratio, 0.0);
        assert!(change_summary(&[1.0; 7]).is_err());
    }

    #[test]
    fn step_is_located_exactly() {
        for k in 2..=10 {
            let v: Vec<f64> = (0..12).map(|i| if i < k { 0.0 } else { 1.0 }).collect();
            let c = change_summary(&v).unwrap();
            assert_eq!(c.split, Some(k));
            assert!(c.ratio.is_infinite());
        }
    }

    #[test]
    fn noisy_step_located_within_one() {
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, 0.3).unwrap();
            let k = 5 + (seed as usize % 10);
            let v: Vec<f64> = (0..20).map(|i| (i >= k) as u8 as f64 + noise.sample(&mut rng)).collect();
            let c = change_summary(&v).unwrap();
            if c.split.is_some_and(|s| s.abs_diff(k) <= 1) {
                hits += 1;
            }
        }
        assert!(hits >= 90, "{hits}");
    }

    #[test]
    fn matches_exhaustive_scan() {
        let v = [1.0, 4.0, 2.0, 8.0, 7.5, 9.0, 3.0, 8.5, 9.5, 7.0];
        let c = change_summary(&v).unwrap();
        let mut best = (0, f64::INFINITY);
        for k in 2..=8 {
            let mut w = 0.0;
            for seg in [&v[..k], &v[k..]] {
                let mu = seg.iter().sum::<f64>() / seg.len() as f64;
                w += seg.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>();
            }
            if w < best.1 {
                best = (k, w);
            }
        }
        assert_eq!(c.split, Some(best.0));
    }

    #[test]
    fn change_rows_carry_labels() {
        let t = Track::from_years("x", &(2000..2010).map(|y| (y, (y >= 2004) as u8 as f64)).collect::<Vec<_>>());
        let rows = run_change_summary(&[t]).unwrap();
        assert_eq!(rows[0].split_label.as_deref(), Some("2004"));
    }

    fn enso(phases: &[(i32, EnsoPhase)]) -> EnsoTable {
        EnsoTable::new(phases.iter().copied().collect())
    }

    #[test]
    fn single_phase_equals_whole_series() {
        let series: Vec<(i32, f64)> = (2000..2010).map(|y| (y, (y * 7 % 5) as f64)).collect();
        let table = enso(&series.iter().map(|(y, _)| (*y, EnsoPhase::Neutral)).collect::<Vec<_>>());
        let g = run_enso_stratification(&series, &table).unwrap();
        assert_eq!(g.len(), 1);
        let all: Vec<f64> = series.iter().map(|p| p.1).collect();
        assert_eq!(g[0].five, FiveNumber::from_values(&all).unwrap());
        assert_eq!(g[0].count, 10);
    }

    #[test]
    fn iqr_ordering_and_order_invariance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut series = Vec::new();
        let mut phases = Vec::new();
        for y in 0..400 {
            let (phase, sd) = if y % 2 == 0 { (EnsoPhase::ElNino, 0.5) } else { (EnsoPhase::LaNina, 1.0) };
            series.push((y, Normal::new(0.0, sd).unwrap().sample(&mut rng)));
            phases.push((y, phase));
        }
        let table = enso(&phases);
        let g = run_enso_stratification(&series, &table).unwrap();
        assert!(g[0].iqr() < g[1].iqr());
        series.reverse();
        assert_eq!(run_enso_stratification(&series, &table).unwrap(), g);
        assert!(run_enso_stratification(&[(1800, 1.0)], &table).is_err());
    }

    fn svd_with_u(u: DMatrix<f64>) -> SvdFactorization {
        let r = u.ncols();
        SvdFactorization {
            u,
            sigma: vec![1.0; r],
            v: DMatrix::identity(r, r),
        }
    }

    #[test]
    fn strata_group_means() {
        let cal = CalendarIndex::parse_and_build("2001-01-01", "2002-12-31").unwrap();
        let n = cal.n_days();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u = DMatrix::from_fn(n, 7, |i, j| match j {
            0 => 0.5,
            1 => (cal.day(i).month == 3) as u8 as f64,
            _ => Normal::new(0.0, 1.0).unwrap().sample(&mut rng),
        });
        let s = run_singular_vector_strata(&svd_with_u(u.clone()), &cal, STRATA_COMPONENTS).unwrap();
        assert_eq!(s.by_month.len(), 6 * 12);
        assert_eq!(s.by_weekpart.len(), 6 * 4);
        assert!(s.by_month.iter().filter(|r| r.component == 1).all(|r| r.mean == 0.5));
        for r in s.by_month.iter().filter(|r| r.component == 2) {
            assert_eq!(r.mean, if r.group == "03" { 1.0 } else { 0.0 });
        }
        // naive recomputation
        for r in &s.by_weekpart {
            let (year, part) = r.group.split_once('/').unwrap();
            let vals: Vec<f64> = (0..n)
                .filter(|&i| cal.day(i).year.to_string() == year && cal.day(i).weekend == (part == "weekend"))
                .map(|i| u[(i, r.component - 1)])
                .collect();
            let naive = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((naive - r.mean).abs() <= 1e-12);
        }
        let short = CalendarIndex::parse_and_build("2001-01-01", "2001-01-31").unwrap();
        assert!(run_singular_vector_strata(&svd_with_u(u), &short, 6).is_err());
    }
}
