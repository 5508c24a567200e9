use std::fmt;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{gsvd, singular_values};
use crate::stats::quantile_sorted;

/// Two-sided significance level used when none is given.
pub const DEFAULT_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullKind {
    Sv,
    GsvSim,
    GsvPerm,
}

impl NullKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NullKind::Sv => "sv",
            NullKind::GsvSim => "gsv-sim",
            NullKind::GsvPerm => "gsv-perm",
        }
    }
}

impl fmt::Display for NullKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How rows are shuffled for the permutation null.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PermutationScheme {
    /// Pool the rows of both matrices and re-split them at random into
    /// groups of the original sizes.
    #[default]
    Pooled,
    /// Shuffle the rows of each matrix independently. Generalized singular
    /// values depend on `D^T D` only, so this leaves them unchanged.
    Rows,
    /// Shuffle every column of each matrix independently.
    WithinColumns,
}

impl PermutationScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            PermutationScheme::Pooled => "pooled",
            PermutationScheme::Rows => "rows",
            PermutationScheme::WithinColumns => "within-columns",
        }
    }
}

impl std::str::FromStr for PermutationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" | "joint" => Ok(Self::Pooled),
            "rows" => Ok(Self::Rows),
            "within-columns" => Ok(Self::WithinColumns),
            _ => Err(Error::InvalidArgument(format!("unknown permutation scheme '{s}'"))),
        }
    }
}

/// Two-sided critical values: the `level/2` and `1 - level/2` quantiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalBand {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

impl CriticalBand {
    fn from_sorted(sorted: &[f64], level: f64) -> Self {
        Self {
            level,
            lower: quantile_sorted(sorted, level / 2.0),
            upper: quantile_sorted(sorted, 1.0 - level / 2.0),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Pooled Monte Carlo values with their per-replicate layout.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalNull {
    pub kind: NullKind,
    /// Row counts of the simulated matrices (one entry for `Sv`).
    pub rows: Vec<usize>,
    pub cols: usize,
    pub reps: usize,
    pub seed: u64,
    /// Values in replicate order; replicate `r` occupies
    /// `r * per_rep .. (r + 1) * per_rep`.
    pub samples: Vec<f64>,
    pub per_rep: usize,
    /// `samples`, sorted ascending.
    pub pooled: Vec<f64>,
    pub band: CriticalBand,
}

impl EmpiricalNull {
    fn from_replicates(
        kind: NullKind,
        rows: Vec<usize>,
        cols: usize,
        seed: u64,
        level: f64,
        reps: Vec<Vec<f64>>,
    ) -> Self {
        let per_rep = reps.first().map_or(0, Vec::len);
        let n_reps = reps.len();
        let samples: Vec<f64> = reps.into_iter().flatten().collect();
        let mut pooled = samples.clone();
        pooled.sort_by(f64::total_cmp);
        let band = CriticalBand::from_sorted(&pooled, level);
        Self {
            kind,
            rows,
            cols,
            reps: n_reps,
            seed,
            samples,
            per_rep,
            pooled,
            band,
        }
    }

    /// `(replicate, index, value)` rows for export.
    pub fn table(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(move |(k, v)| (k / self.per_rep, k % self.per_rep, *v))
    }

    /// Band recomputed at another level from the same pool.
    pub fn band_at(&self, level: f64) -> CriticalBand {
        CriticalBand::from_sorted(&self.pooled, level)
    }

    /// Natural logs of the pooled values, ascending.
    pub fn log_pooled(&self) -> Vec<f64> {
        self.pooled.iter().map(|v| v.ln()).collect()
    }

    /// Critical band of the log values.
    pub fn log_band(&self) -> CriticalBand {
        CriticalBand::from_sorted(&self.log_pooled(), self.band.level)
    }
}

/// Generator for replicate `rep`: the seed fixes the key, the replicate index
/// selects the stream.
fn replicate_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng))
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("significance level {level} not in (0, 1)")))
    }
}

/// Singular values of `reps` independent `n x p` standard-normal matrices.
pub fn simulate_sv_null(n: usize, p: usize, reps: usize, seed: u64, level: f64) -> Result<EmpiricalNull> {
    if p == 0 || n < p || reps == 0 {
        return Err(Error::InvalidArgument(format!(
            "SV null needs n >= p >= 1 and reps >= 1 (n={n}, p={p}, reps={reps})"
        )));
    }
    check_level(level)?;
    let reps: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| singular_values(&gaussian(&mut replicate_rng(seed, r), n, p)))
        .collect::<Result<_>>()?;
    Ok(EmpiricalNull::from_replicates(NullKind::Sv, vec![n], p, seed, level, reps))
}

/// Generalized singular values of independent standard-normal pairs of
/// shapes `n1 x p` and `n2 x p`.
pub fn simulate_gsv_null(
    n1: usize,
    n2: usize,
    p: usize,
    reps: usize,
    seed: u64,
    level: f64,
) -> Result<EmpiricalNull> {
    if p == 0 || n1.min(n2) < p || reps == 0 {
        return Err(Error::InvalidArgument(format!(
            "GSV null needs min(n1, n2) >= p >= 1 and reps >= 1 (n1={n1}, n2={n2}, p={p})"
        )));
    }
    check_level(level)?;
    let reps: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let d1 = gaussian(&mut rng, n1, p);
            let d2 = gaussian(&mut rng, n2, p);
            Ok(gsvd(&d1, &d2)?.gsv())
        })
        .collect::<Result<_>>()?;
    Ok(EmpiricalNull::from_replicates(NullKind::GsvSim, vec![n1, n2], p, seed, level, reps))
}

/// Generalized singular values after rearranging rows by explicit index maps.
///
/// For [`PermutationScheme::Pooled`], `perm` indexes the stacked rows of
/// `[D1; D2]`: the first `N1` entries form the new first matrix. For
/// [`PermutationScheme::Rows`], `perm` is the concatenation of a permutation
/// of `0..N1` and one of `0..N2`.
pub fn gsv_of_permuted(
    d1: &DMatrix<f64>,
    d2: &DMatrix<f64>,
    scheme: PermutationScheme,
    perm: &[usize],
) -> Result<Vec<f64>> {
    let (n1, n2) = (d1.nrows(), d2.nrows());
    if perm.len() != n1 + n2 {
        return Err(Error::Shape(format!("permutation length {} != {}", perm.len(), n1 + n2)));
    }
    let (a, b) = match scheme {
        PermutationScheme::Pooled => {
            let row = |k: usize| if k < n1 { d1.row(k).into_owned() } else { d2.row(k - n1).into_owned() };
            let a = DMatrix::from_rows(&perm[..n1].iter().map(|&k| row(k)).collect::<Vec<_>>());
            let b = DMatrix::from_rows(&perm[n1..].iter().map(|&k| row(k)).collect::<Vec<_>>());
            (a, b)
        }
        PermutationScheme::Rows => (d1.select_rows(&perm[..n1]), d2.select_rows(&perm[n1..])),
        PermutationScheme::WithinColumns => {
            return Err(Error::InvalidArgument(
                "within-column shuffles are not described by a single row map".into(),
            ))
        }
    };
    Ok(gsvd(&a, &b)?.gsv())
}

fn shuffle_columns(m: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut out = m.clone();
    for j in 0..m.ncols() {
        let mut col: Vec<f64> = m.column(j).iter().copied().collect();
        col.shuffle(rng);
        out.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    out
}

/// Empirical GSV null from random rearrangements of an observed pair.
pub fn permutation_gsv_null(
    d1: &DMatrix<f64>,
    d2: &DMatrix<f64>,
    reps: usize,
    seed: u64,
    level: f64,
    scheme: PermutationScheme,
) -> Result<EmpiricalNull> {
    if reps == 0 {
        return Err(Error::InvalidArgument("permutation null needs reps >= 1".into()));
    }
    check_level(level)?;
    // Validates shapes up front.
    gsvd(d1, d2)?;
    let (n1, n2) = (d1.nrows(), d2.nrows());
    let reps: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            match scheme {
                PermutationScheme::Pooled => {
                    let mut perm: Vec<usize> = (0..n1 + n2).collect();
                    perm.shuffle(&mut rng);
                    gsv_of_permuted(d1, d2, scheme, &perm)
                }
                PermutationScheme::Rows => {
                    let mut p1: Vec<usize> = (0..n1).collect();
                    let mut p2: Vec<usize> = (0..n2).collect();
                    p1.shuffle(&mut rng);
                    p2.shuffle(&mut rng);
                    p1.extend(p2);
                    gsv_of_permuted(d1, d2, scheme, &p1)
                }
                PermutationScheme::WithinColumns => {
                    let a = shuffle_columns(d1, &mut rng);
                    let b = shuffle_columns(d2, &mut rng);
                    Ok(gsvd(&a, &b)?.gsv())
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(EmpiricalNull::from_replicates(
        NullKind::GsvPerm,
        vec![n1, n2],
        d1.ncols(),
        seed,
        level,
        reps,
    ))
}
