use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{Panel, Selector};

use super::bergsma::{BergsmaOptions, ColumnCache};
use super::weights::WeightMatrix;

/// One spatial Bergsma evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SbResult {
    pub value: f64,
    pub weight_kind: String,
    pub slice: String,
    /// Number of locations the statistic was averaged over.
    pub p: usize,
    /// Weighted pairs skipped because their correlation could not be estimated.
    pub dropped_pairs: usize,
}

/// `p^{-1} sum_{i<j} (w_ij + w_ji) sim_ij` for an explicit similarity matrix.
pub fn sb_from_similarity(sim: &DMatrix<f64>, w: &WeightMatrix) -> Result<f64> {
    let p = w.dim();
    if sim.shape() != (p, p) {
        return Err(Error::Shape(format!("similarity is {:?}, weights {p}x{p}", sim.shape())));
    }
    let mut s = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            let wij = w.values[(i, j)] + w.values[(j, i)];
            if wij != 0.0 {
                s += wij * sim[(i, j)];
            }
        }
    }
    Ok(s / p as f64)
}

fn weighted_pairs(w: &WeightMatrix) -> Vec<(usize, usize, f64)> {
    let p = w.dim();
    let mut out = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            let wij = w.values[(i, j)] + w.values[(j, i)];
            if wij != 0.0 {
                out.push((i, j, wij));
            }
        }
    }
    out
}

/// Spatial Bergsma statistic of the panel columns under row-standardized `w`.
/// Only pairs with `w_ij + w_ji > 0` are estimated.
pub fn spatial_bergsma(panel: &Panel, w: &WeightMatrix, opts: BergsmaOptions) -> Result<SbResult> {
    let p = panel.n_grids();
    if w.dim() != p {
        return Err(Error::Shape(format!("weights are {0}x{0}, panel has {p} grids", w.dim())));
    }
    if !w.standardized {
        return Err(Error::InvalidArgument("spatial Bergsma needs row-standardized weights".into()));
    }
    let pairs = weighted_pairs(w);
    let mut wanted = vec![false; p];
    for &(i, j, _) in &pairs {
        wanted[i] = true;
        wanted[j] = true;
    }
    let cache = ColumnCache::build(panel, &wanted, opts)?;
    let terms: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(i, j, wij)| cache.rho(i, j).ok().map(|r| wij * r))
        .collect();
    let dropped_pairs = terms.iter().filter(|t| t.is_none()).count();
    // Ordered reduction keeps the sum reproducible.
    let total: f64 = terms.iter().flatten().sum();
    Ok(SbResult {
        value: total / p as f64,
        weight_kind: w.kind.to_string(),
        slice: "all".to_string(),
        p,
        dropped_pairs,
    })
}

/// Spatial Bergsma on the columns `positions` of `panel`, with `w` (defined on
/// all columns) restricted to them and re-standardized.
pub fn spatial_bergsma_subset(
    panel: &Panel,
    w: &WeightMatrix,
    positions: &[usize],
    opts: BergsmaOptions,
) -> Result<SbResult> {
    if positions.is_empty() {
        return Err(Error::EmptySelection("no grids in subset".into()));
    }
    spatial_bergsma(&panel.select_columns(positions), &w.restrict(positions)?, opts)
}

/// Slicing used for a series of spatial Bergsma values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbBy {
    Year,
    YearMonth,
    YearZone,
}

/// One element of an S_B series; a failed slice keeps its error message.
#[derive(Debug, Clone, PartialEq)]
pub struct SbSlice {
    pub year: i32,
    pub month: Option<u32>,
    pub zone: Option<u8>,
    pub outcome: std::result::Result<SbResult, String>,
}

fn slice_label(year: i32, month: Option<u32>, zone: Option<u8>) -> String {
    match (month, zone) {
        (Some(m), _) => format!("{year}-{m:02}"),
        (_, Some(z)) => format!("{year}/zone{z}"),
        _ => year.to_string(),
    }
}

impl SbSlice {
    pub fn label(&self) -> String {
        slice_label(self.year, self.month, self.zone)
    }

    pub fn value(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|r| r.value)
    }
}

/// Spatial Bergsma per year, per (year, month) or per (year, zone). Zone slices
/// use the zone's re-standardized sub-matrix of `w`.
pub fn sb_series(panel: &Panel, w: &WeightMatrix, by: SbBy, opts: BergsmaOptions) -> Result<Vec<SbSlice>> {
    if w.dim() != panel.n_grids() {
        return Err(Error::Shape(format!(
            "weights are {0}x{0}, panel has {1} grids",
            w.dim(),
            panel.n_grids()
        )));
    }
    let mut jobs: Vec<(i32, Option<u32>, Option<u8>)> = Vec::new();
    let mut zones: Vec<u8> = panel.grids().cells().iter().map(|c| c.zone).collect();
    zones.sort_unstable();
    zones.dedup();
    for year in panel.calendar().years() {
        match by {
            SbBy::Year => jobs.push((year, None, None)),
            SbBy::YearMonth => {
                let mut months: Vec<u32> = panel
                    .calendar()
                    .days()
                    .iter()
                    .filter(|d| d.year == year)
                    .map(|d| d.month)
                    .collect();
                months.dedup();
                jobs.extend(months.into_iter().map(|m| (year, Some(m), None)));
            }
            SbBy::YearZone => jobs.extend(zones.iter().map(|&z| (year, None, Some(z)))),
        }
    }
    let out = jobs
        .into_iter()
        .map(|(year, month, zone)| {
            let outcome = (|| {
                let sel = match month {
                    Some(m) => Selector::YearMonth(year, m),
                    None => Selector::Year(year),
                };
                let rows = panel.slice(&sel)?;
                let mut r = match zone {
                    Some(z) => spatial_bergsma_subset(&rows, w, &panel.grids().zone_positions(z), opts)?,
                    None => spatial_bergsma(&rows, w, opts)?,
                };
                r.slice = slice_label(year, month, zone);
                Ok::<_, Error>(r)
            })()
            .map_err(|e| e.to_string());
            SbSlice {
                year,
                month,
                zone,
                outcome,
            }
        })
        .collect();
    Ok(out)
}
