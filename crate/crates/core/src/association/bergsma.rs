//! Bergsma's dependence coefficient.
//!
//! With `h(x1, x2) = -1/2 (|x1 - x2| - E|x1 - X| - E|x2 - X| + E|X - X'|)`,
//! `kappa(X, Y) = E h(X1, X2) h(Y1, Y2)` and
//! `rho = kappa(X, Y) / sqrt(kappa(X, X) kappa(Y, Y))`; `rho = 0` exactly under
//! independence. The default estimator is the order-4 U-statistic, evaluated
//! in O(n^2) through U-centered distance matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::Panel;

use super::{CorrKind, CorrelationMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BergsmaEstimator {
    /// Unbiased U-statistic.
    #[default]
    U,
    /// Plug-in V-statistic (double centering with sample means).
    V,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BergsmaOptions {
    pub estimator: BergsmaEstimator,
    /// Largest sample length accepted per pair; memory and time grow as n^2.
    pub max_n: usize,
}

impl Default for BergsmaOptions {
    fn default() -> Self {
        Self {
            estimator: BergsmaEstimator::U,
            max_n: 4000,
        }
    }
}

/// Centered distance matrix of one sample, upper triangle (diagonal included)
/// stored row by row.
#[derive(Debug, Clone)]
pub struct CenteredDistances {
    n: usize,
    estimator: BergsmaEstimator,
    upper: Vec<f64>,
}

impl CenteredDistances {
    pub fn new(x: &[f64], opts: BergsmaOptions) -> Result<Self> {
        let n = x.len();
        if n < 4 {
            return Err(Error::InvalidArgument(format!("Bergsma estimate needs n >= 4, got {n}")));
        }
        if n > opts.max_n {
            return Err(Error::InvalidArgument(format!(
                "sample length {n} exceeds the Bergsma cap {} (raise max_n to override)",
                opts.max_n
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Bergsma sample"));
        }
        let mut row_sum = vec![0.0; n];
        let mut total = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (x[i] - x[j]).abs();
                row_sum[i] += d;
                row_sum[j] += d;
                total += 2.0 * d;
            }
        }
        let nf = n as f64;
        let (row_div, total_div) = match opts.estimator {
            BergsmaEstimator::U => (nf - 2.0, (nf - 1.0) * (nf - 2.0)),
            BergsmaEstimator::V => (nf, nf * nf),
        };
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                let c = if i == j && opts.estimator == BergsmaEstimator::U {
                    0.0
                } else {
                    (x[i] - x[j]).abs() - row_sum[i] / row_div - row_sum[j] / row_div + total / total_div
                };
                upper.push(c);
            }
        }
        Ok(Self {
            n,
            estimator: opts.estimator,
            upper,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Estimate of `kappa` between the two samples.
    pub fn kappa(&self, other: &CenteredDistances) -> Result<f64> {
        if self.n != other.n || self.estimator != other.estimator {
            return Err(Error::Shape(format!(
                "Bergsma samples of length {} and {}",
                self.n, other.n
            )));
        }
        let n = self.n;
        let mut off = 0.0;
        let mut diag = 0.0;
        let mut k = 0;
        for i in 0..n {
            diag += self.upper[k] * other.upper[k];
            k += 1;
            for _ in (i + 1)..n {
                off += self.upper[k] * other.upper[k];
                k += 1;
            }
        }
        let nf = n as f64;
        let sum = 2.0 * off + diag;
        let scaled = match self.estimator {
            BergsmaEstimator::U => sum / (nf * (nf - 3.0)),
            BergsmaEstimator::V => sum / (nf * nf),
        };
        Ok(scaled / 4.0)
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("samples of length {} and {}", x.len(), y.len())));
    }
    Ok(())
}

pub fn bergsma_kappa(x: &[f64], y: &[f64], opts: BergsmaOptions) -> Result<f64> {
    check_lengths(x, y)?;
    CenteredDistances::new(x, opts)?.kappa(&CenteredDistances::new(y, opts)?)
}

fn rho_from(a: &CenteredDistances, b: &CenteredDistances, kaa: f64, kbb: f64) -> Result<f64> {
    if !(kaa > 0.0) || !(kbb > 0.0) {
        return Err(Error::Degenerate("Bergsma self-dependence is not positive (constant sample?)".into()));
    }
    Ok(a.kappa(b)? / (kaa * kbb).sqrt())
}

pub fn bergsma_rho(x: &[f64], y: &[f64], opts: BergsmaOptions) -> Result<f64> {
    check_lengths(x, y)?;
    let a = CenteredDistances::new(x, opts)?;
    let b = CenteredDistances::new(y, opts)?;
    let kaa = a.kappa(&a)?;
    let kbb = b.kappa(&b)?;
    rho_from(&a, &b, kaa, kbb)
}

/// Per-column centered distances and self-kappa, computed once and shared by
/// every pair involving that column.
pub(crate) struct ColumnCache {
    cols: Vec<Option<(CenteredDistances, f64)>>,
    errors: Vec<Option<String>>,
}

impl ColumnCache {
    pub(crate) fn build(panel: &Panel, wanted: &[bool], opts: BergsmaOptions) -> Result<Self> {
        let n = panel.n_days();
        if n > opts.max_n {
            return Err(Error::InvalidArgument(format!(
                "slice has {n} days, above the Bergsma cap {}",
                opts.max_n
            )));
        }
        let built: Vec<std::result::Result<Option<(CenteredDistances, f64)>, String>> = (0..panel.n_grids())
            .into_par_iter()
            .map(|j| {
                if !wanted[j] {
                    return Ok(None);
                }
                let c = CenteredDistances::new(&panel.column(j), opts).map_err(|e| e.to_string())?;
                let k = c.kappa(&c).map_err(|e| e.to_string())?;
                Ok(Some((c, k)))
            })
            .collect();
        let mut cols = Vec::with_capacity(built.len());
        let mut errors = Vec::with_capacity(built.len());
        for b in built {
            match b {
                Ok(c) => {
                    cols.push(c);
                    errors.push(None);
                }
                Err(e) => {
                    cols.push(None);
                    errors.push(Some(e));
                }
            }
        }
        Ok(Self { cols, errors })
    }

    pub(crate) fn rho(&self, i: usize, j: usize) -> Result<f64> {
        for k in [i, j] {
            if let Some(e) = &self.errors[k] {
                return Err(Error::Degenerate(e.clone()));
            }
        }
        let (a, kaa) = self.cols[i].as_ref().expect("column requested");
        let (b, kbb) = self.cols[j].as_ref().expect("column requested");
        rho_from(a, b, *kaa, *kbb)
    }
}

/// Bergsma correlation matrix plus the pairs that could not be estimated
/// (stored as `NaN` in the matrix).
#[derive(Debug, Clone)]
pub struct BergsmaMatrix {
    pub matrix: CorrelationMatrix,
    pub failed: Vec<(usize, usize)>,
}

pub fn bergsma_corr_matrix(panel: &Panel, opts: BergsmaOptions) -> Result<BergsmaMatrix> {
    let p = panel.n_grids();
    let cache = ColumnCache::build(panel, &vec![true; p], opts)?;
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).collect();
    let rhos: Vec<Option<f64>> = pairs.par_iter().map(|&(i, j)| cache.rho(i, j).ok()).collect();
    let mut values = nalgebra::DMatrix::identity(p, p);
    let mut failed = Vec::new();
    for (&(i, j), r) in pairs.iter().zip(rhos) {
        let v = r.unwrap_or_else(|| {
            failed.push((i, j));
            f64::NAN
        });
        values[(i, j)] = v;
        values[(j, i)] = v;
    }
    Ok(BergsmaMatrix {
        matrix: CorrelationMatrix {
            values,
            kind: CorrKind::Bergsma,
            grid_ids: panel.grids().ids(),
            provenance: format!("{}x{} panel, order {}", panel.n_days(), p, panel.order_tag()),
        },
        failed,
    })
}
