//! Detrending of daily panels.
//!
//! Two routes are provided: subtracting the leading singular components of the
//! whole panel ([`trim_svd`], giving `S`), and a column-wise additive
//! moving-average decomposition ([`build_t`], giving `T`). ACF curves and the
//! cumulative singular-value share are the diagnostics used to pick `k`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::Panel;
use crate::linalg::{svd, SvdFactorization};

/// Default number of removed components.
pub const DEFAULT_TRIM_K: usize = 12;
/// Default seasonal period for daily data.
pub const DEFAULT_PERIOD: usize = 365;
/// Default maximum ACF lag reported by [`trim_svd`].
pub const DEFAULT_MAX_LAG: usize = 30;

/// Fraction of the singular-value sum carried by the top `k` components.
pub fn cumulative_share(f: &SvdFactorization, k: usize) -> Result<f64> {
    let r = f.rank();
    if k > r {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds rank {r}")));
    }
    let curve = share_curve(f)?;
    Ok(if k == 0 { 0.0 } else { curve[k - 1] })
}

/// Cumulative shares for k = 1..=r. The last entry is exactly 1.
pub fn share_curve(f: &SvdFactorization) -> Result<Vec<f64>> {
    let mut partial = Vec::with_capacity(f.rank());
    let mut acc = 0.0;
    for &s in &f.sigma {
        acc += s;
        partial.push(acc);
    }
    if acc <= 0.0 || !acc.is_finite() {
        return Err(Error::Degenerate("all singular values are zero".into()));
    }
    Ok(partial.into_iter().map(|p| (p / acc).min(1.0)).collect())
}

fn is_constant(series: &[f64]) -> bool {
    let scale = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    series.iter().all(|v| (v - series[0]).abs() <= 1e-14 * scale)
}

/// Sample autocorrelations at lags `0..=max_lag`, normalised by the lag-0
/// autocovariance (both with divisor `n`).
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag {
        return Err(Error::InvalidArgument(format!(
            "series of length {n} is too short for lag {max_lag}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ACF input"));
    }
    if is_constant(series) {
        return Err(Error::Degenerate("ACF of a constant series".into()));
    }
    let m = crate::stats::mean(series);
    let d: Vec<f64> = series.iter().map(|v| v - m).collect();
    let c0: f64 = d.iter().map(|v| v * v).sum();
    Ok((0..=max_lag)
        .map(|l| {
            if l == 0 {
                1.0
            } else {
                d[..n - l].iter().zip(&d[l..]).map(|(a, b)| a * b).sum::<f64>() / c0
            }
        })
        .collect())
}

/// ACF curve of one column; `None` when the column is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfCurve {
    pub grid_id: String,
    pub values: Option<Vec<f64>>,
}

impl AcfCurve {
    /// Largest |acf| over lags 1..; infinite for a constant column.
    pub fn max_abs_lagged(&self) -> f64 {
        match &self.values {
            Some(v) => v[1..].iter().fold(0.0f64, |m, a| m.max(a.abs())),
            None => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimReport {
    pub k: usize,
    pub cumulative_share: f64,
    /// Share curve of the input panel for k = 1..=r.
    pub shares: Vec<f64>,
    pub max_lag: usize,
    /// ACF of every column of the trimmed panel.
    pub acf: Vec<AcfCurve>,
}

fn column_acfs(panel: &Panel, max_lag: usize) -> Result<Vec<AcfCurve>> {
    if panel.n_days() <= max_lag {
        return Err(Error::InvalidArgument(format!(
            "{} days are too few for lag {max_lag}",
            panel.n_days()
        )));
    }
    (0..panel.n_grids())
        .into_par_iter()
        .map(|j| {
            let values = match acf(&panel.column(j), max_lag) {
                Ok(v) => Some(v),
                Err(Error::Degenerate(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(AcfCurve {
                grid_id: panel.grids().cell(j).grid_id.clone(),
                values,
            })
        })
        .collect()
}

/// `S = D - sum_{i<=k} sigma_i u_i v_i^T`.
pub fn trim_svd(panel: &Panel, k: usize, max_lag: usize) -> Result<(Panel, TrimReport)> {
    let f = svd(panel.values())?;
    trim_svd_with(panel, &f, k, max_lag)
}

/// [`trim_svd`] reusing a factorization of `panel`.
pub fn trim_svd_with(
    panel: &Panel,
    f: &SvdFactorization,
    k: usize,
    max_lag: usize,
) -> Result<(Panel, TrimReport)> {
    if f.u.nrows() != panel.n_days() || f.v.nrows() != panel.n_grids() {
        return Err(Error::Shape("factorization does not match the panel".into()));
    }
    let r = f.rank();
    if k == 0 || k > r {
        return Err(Error::InvalidArgument(format!("trim k must lie in 1..={r}, got {k}")));
    }
    let s = panel.values() - f.partial_sum(0..k);
    let trimmed = panel.with_values(s)?.with_order_tag(panel.order_tag().to_string());
    let shares = share_curve(f)?;
    let report = TrimReport {
        k,
        cumulative_share: shares[k - 1],
        shares,
        max_lag,
        acf: column_acfs(&trimmed, max_lag)?,
    };
    Ok((trimmed, report))
}

/// One row of a `k` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub cumulative_share: f64,
    /// Fraction of columns whose max |acf| over lags 1..=max_lag is below `band`.
    pub white_fraction: f64,
}

/// Evaluate both stopping criteria for each `k` in `ks`, with one SVD.
/// A `band` of `None` uses `2/sqrt(n)`.
pub fn trim_sweep(panel: &Panel, ks: &[usize], max_lag: usize, band: Option<f64>) -> Result<Vec<SweepRow>> {
    let f = svd(panel.values())?;
    let band = band.unwrap_or(2.0 / (panel.n_days() as f64).sqrt());
    ks.iter()
        .map(|&k| {
            let (_, rep) = trim_svd_with(panel, &f, k, max_lag)?;
            let white = rep.acf.iter().filter(|c| c.max_abs_lagged() < band).count();
            Ok(SweepRow {
                k,
                cumulative_share: rep.cumulative_share,
                white_fraction: white as f64 / rep.acf.len() as f64,
            })
        })
        .collect()
}

/// Additive decomposition `series = trend + seasonal + residual`. Entries
/// where the centred moving average is undefined are `NaN` in `trend` and
/// `residual`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
    /// Per-phase seasonal effects, summing to zero.
    pub figure: Vec<f64>,
}

impl Decomposition {
    /// Index range on which the trend is defined.
    pub fn defined(&self) -> std::ops::Range<usize> {
        let lo = self.trend.iter().position(|v| !v.is_nan()).unwrap_or(0);
        let hi = self.trend.iter().rposition(|v| !v.is_nan()).map_or(lo, |i| i + 1);
        lo..hi
    }
}

/// Half-window of the centred moving average for `period`.
fn half_window(period: usize) -> usize {
    period / 2
}

fn moving_average(x: &[f64], period: usize) -> Vec<f64> {
    let n = x.len();
    let h = half_window(period);
    let mut out = vec![f64::NAN; n];
    if n < 2 * h + 1 {
        return out;
    }
    let even = period.is_multiple_of(2);
    // running sum over x[t-h..=t+h]
    let mut sum: f64 = x[..=2 * h].iter().sum();
    for t in h..n - h {
        if t > h {
            sum += x[t + h] - x[t - h - 1];
        }
        out[t] = if even {
            (sum - 0.5 * (x[t - h] + x[t + h])) / period as f64
        } else {
            sum / period as f64
        };
    }
    out
}

/// Classical moving-average decomposition. `phase[t]` gives the seasonal
/// index (`< period`) of each observation; `None` uses `t % period`.
pub fn classical_decompose(series: &[f64], period: usize, phase: Option<&[usize]>) -> Result<Decomposition> {
    let n = series.len();
    if period < 2 {
        return Err(Error::InvalidArgument(format!("period must be at least 2, got {period}")));
    }
    if n < 2 * period {
        return Err(Error::InvalidArgument(format!(
            "series of length {n} is shorter than two periods of {period}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("decomposition input"));
    }
    let default_phase: Vec<usize>;
    let phase = match phase {
        Some(p) => {
            if p.len() != n {
                return Err(Error::Shape(format!("{} phases for {n} observations", p.len())));
            }
            if let Some(&bad) = p.iter().find(|&&v| v >= period) {
                return Err(Error::InvalidArgument(format!("phase {bad} outside period {period}")));
            }
            p
        }
        None => {
            default_phase = (0..n).map(|t| t % period).collect();
            &default_phase
        }
    };

    let trend = moving_average(series, period);
    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for t in 0..n {
        if !trend[t].is_nan() {
            sums[phase[t]] += series[t] - trend[t];
            counts[phase[t]] += 1;
        }
    }
    if counts.contains(&0) {
        return Err(Error::InvalidArgument("some seasonal phase has no detrended observation".into()));
    }
    let mut figure: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let centre = crate::stats::mean(&figure);
    figure.iter_mut().for_each(|v| *v -= centre);

    let seasonal: Vec<f64> = phase.iter().map(|&i| figure[i]).collect();
    let residual = (0..n).map(|t| series[t] - trend[t] - seasonal[t]).collect();
    Ok(Decomposition {
        trend,
        seasonal,
        residual,
        figure,
    })
}

/// Column-wise decomposition residuals of `panel`. Edge days where the trend is
/// undefined are dropped from every column. With `period == 365` seasonal
/// indices follow the calendar (29 February shares 28 February's index);
/// otherwise they cycle with the row index.
pub fn build_t(panel: &Panel, period: usize) -> Result<Panel> {
    let phase: Vec<usize> = if period == DEFAULT_PERIOD {
        panel.calendar().days().iter().map(|d| d.seasonal_phase()).collect()
    } else {
        (0..panel.n_days()).map(|t| t % period).collect()
    };
    let columns: Vec<Decomposition> = (0..panel.n_grids())
        .into_par_iter()
        .map(|j| {
            let col = panel.column(j);
            if is_constant(&col) {
                return Err(Error::Degenerate(format!(
                    "grid '{}' is constant",
                    panel.grids().cell(j).grid_id
                )));
            }
            classical_decompose(&col, period, Some(&phase))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<usize> = match columns.first() {
        Some(d) => d.defined().collect(),
        None => return Err(Error::Shape("panel has no columns".into())),
    };
    let values = nalgebra::DMatrix::from_fn(rows.len(), panel.n_grids(), |i, j| columns[j].residual[rows[i]]);
    panel.select_rows(&rows).with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CalendarIndex, GridCell, GridSet};
    use crate::linalg::singular_values;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn panel(values: DMatrix<f64>) -> Panel {
        let start = chrono::NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let end = start + chrono::Days::new(values.nrows() as u64 - 1);
        let cal = CalendarIndex::build(start, end).unwrap();
        let grids = GridSet::new(
            (0..values.ncols())
                .map(|j| GridCell::new(format!("g{j}"), j as f64, 0.0, 1))
                .collect(),
        )
        .unwrap();
        Panel::new(values, cal, grids).unwrap()
    }

    fn noise(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn share_arithmetic() {
        let f = SvdFactorization {
            u: DMatrix::identity(3, 3),
            sigma: vec![3.0, 2.0, 1.0],
            v: DMatrix::identity(3, 3),
        };
        assert!((cumulative_share(&f, 2).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(cumulative_share(&f, 3).unwrap(), 1.0);
        assert!(cumulative_share(&f, 4).is_err());
        let eq = SvdFactorization { sigma: vec![2.0; 4], u: DMatrix::identity(4, 4), v: DMatrix::identity(4, 4) };
        assert_eq!(cumulative_share(&eq, 2).unwrap(), 0.5);
        let zero = SvdFactorization { sigma: vec![0.0; 2], u: DMatrix::identity(2, 2), v: DMatrix::identity(2, 2) };
        assert!(matches!(cumulative_share(&zero, 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn exact_rank_trims_to_zero() {
        let a = noise(60, 3, 1);
        let b = noise(3, 8, 2);
        let d = &a * &b;
        let p = panel(d.clone());
        let (s, rep) = trim_svd(&p, 3, 5).unwrap();
        let scale = crate::linalg::max_abs(&d);
        assert!(crate::linalg::max_abs(s.values()) <= 1e-8 * scale);
        assert!((rep.cumulative_share - 1.0).abs() < 1e-12);
        assert!(trim_svd(&p, 0, 5).is_err());
        assert!(trim_svd(&p, 9, 5).is_err());
        let (full, _) = trim_svd(&p, 8, 5).unwrap();
        assert!(crate::linalg::max_abs(full.values()) <= 1e-8 * scale);
    }

    #[test]
    fn spectrum_shifts_and_shares_increase() {
        let d = noise(120, 10, 3);
        let p = panel(d.clone());
        let (s, rep) = trim_svd(&p, 4, 10).unwrap();
        let sd = singular_values(&d).unwrap();
        let ss = singular_values(s.values()).unwrap();
        for i in 0..6 {
            assert!((ss[i] - sd[i + 4]).abs() <= 1e-8 * sd[i + 4]);
        }
        assert!(rep.shares.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*rep.shares.last().unwrap(), 1.0);
        // S is orthogonal to the removed left vectors
        let f = svd(&d).unwrap();
        let proj = f.u.columns(0, 4).transpose() * s.values();
        assert!(proj.norm() <= 1e-8 * d.norm());
    }

    #[test]
    fn acf_lag_zero_and_white_noise_band() {
        let x: Vec<f64> = noise(2000, 1, 4).iter().copied().collect();
        let a = acf(&x, 50).unwrap();
        assert_eq!(a[0], 1.0);
        let band = 3.0 / (2000f64).sqrt();
        let inside = a[1..].iter().filter(|v| v.abs() < band).count();
        assert!(inside as f64 >= 0.95 * 50.0);
        assert!(matches!(acf(&[2.0; 10], 3), Err(Error::Degenerate(_))));
        assert!(acf(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn acf_periodic_matches_brute_force() {
        let x: Vec<f64> = (0..140).map(|t| [1.0, 4.0, -2.0, 0.5, 3.0, -1.0, 2.5][t % 7]).collect();
        let a = acf(&x, 10).unwrap();
        let n = x.len();
        let m = x.iter().sum::<f64>() / n as f64;
        let mut c = [0.0; 11];
        for (l, cl) in c.iter_mut().enumerate() {
            for t in 0..n - l {
                *cl += (x[t] - m) * (x[t + l] - m);
            }
        }
        assert!((a[7] - c[7] / c[0]).abs() < 1e-12);
        assert!(a[7] > 0.9);
    }

    #[test]
    fn pure_seasonal_has_zero_residual() {
        for period in [7usize, 12] {
            let fig: Vec<f64> = (0..period).map(|i| (i as f64 * 1.3).sin()).collect();
            let x: Vec<f64> = (0..period * 6).map(|t| fig[t % period]).collect();
            let d = classical_decompose(&x, period, None).unwrap();
            for t in d.defined() {
                assert!(d.residual[t].abs() <= 1e-8);
            }
            assert!(d.figure.iter().sum::<f64>().abs() <= 1e-10);
            assert!(d.residual[0].is_nan());
        }
    }

    #[test]
    fn linear_trend_has_no_seasonal() {
        for period in [5usize, 8] {
            let x: Vec<f64> = (0..period * 5).map(|t| 2.0 + 0.3 * t as f64).collect();
            let d = classical_decompose(&x, period, None).unwrap();
            assert!(d.seasonal.iter().all(|v| v.abs() <= 1e-8));
            for t in d.defined() {
                assert!((d.trend[t] - x[t]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn even_period_uses_half_weights() {
        let x: Vec<f64> = (0..8).map(|t| (t * t) as f64).collect();
        let d = classical_decompose(&x, 4, None).unwrap();
        let expect = (0.5 * x[0] + x[1] + x[2] + x[3] + 0.5 * x[4]) / 4.0;
        assert!((d.trend[2] - expect).abs() < 1e-12);
        assert!(d.trend[1].is_nan() && d.trend[6].is_nan() && !d.trend[5].is_nan());
    }

    #[test]
    fn residual_variance_recovers_noise() {
        let period = 365;
        let n = 3650;
        let eps: Vec<f64> = noise(n, 1, 5).iter().map(|v| 0.5 * v).collect();
        let x: Vec<f64> = (0..n)
            .map(|t| {
                let s = 3.0 * (2.0 * std::f64::consts::PI * (t % period) as f64 / period as f64).cos();
                0.001 * t as f64 + s + eps[t]
            })
            .collect();
        let d = classical_decompose(&x, period, None).unwrap();
        let r: Vec<f64> = d.defined().map(|t| d.residual[t]).collect();
        let v = crate::stats::variance(&r);
        assert!((v / 0.25 - 1.0).abs() < 0.15, "variance {v}");
    }

    #[test]
    fn decompose_argument_errors() {
        assert!(classical_decompose(&[1.0; 10], 1, None).is_err());
        assert!(classical_decompose(&[1.0; 10], 6, None).is_err());
        assert!(classical_decompose(&[1.0; 12], 3, Some(&[0; 5])).is_err());
    }

    #[test]
    fn build_t_on_seasonal_panel() {
        let n = 365 * 3 + 1; // includes 29 Feb 2000
        let p = panel(DMatrix::from_fn(n, 3, |t, j| (j + 1) as f64 * ((t % 7) as f64 - 3.0)));
        let t = build_t(&p, 7).unwrap();
        assert_eq!(t.n_days(), n - 6);
        assert!(crate::linalg::max_abs(t.values()) <= 1e-8);
        assert_eq!(t.calendar().day(0).date, p.calendar().day(3).date);
        let c = panel(DMatrix::from_element(n, 2, 4.0));
        assert!(matches!(build_t(&c, 365), Err(Error::Degenerate(_))));
    }

    #[test]
    fn build_t_calendar_phase() {
        let n = 365 * 4 + 1;
        let p = panel(noise(n, 2, 9));
        let t = build_t(&p, 365).unwrap();
        assert_eq!(t.n_days(), n - 364);
        assert!(t.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sweep_reports_monotone_share() {
        let p = panel(noise(200, 6, 10));
        let rows = trim_sweep(&p, &[1, 2, 3], 5, None).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[0].cumulative_share <= w[1].cumulative_share));
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.white_fraction)));
    }
}
