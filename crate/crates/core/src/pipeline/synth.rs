//! Seeded synthetic gridded daily data for demos and end-to-end checks.
//!
//! Each cell follows `base + amp * seasonal(day) + sd * (sqrt(a) * common + sqrt(1 - a) * own)`,
//! where `common` is a spatially correlated Gaussian field with exponential
//! covariance `exp(-d / length)` and `a` is the shared-variance fraction. The
//! fraction may switch at a given year, giving a known change in spatial
//! association.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::{CalendarIndex, EnsoPhase, EnsoTable, GridCell, GridSet, RawPanel};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub start_year: i32,
    pub years: usize,
    pub n_lat: usize,
    pub n_lon: usize,
    pub seed: u64,
    /// First year of the second regime.
    pub switch_year: Option<i32>,
    pub share_before: f64,
    pub share_after: f64,
    /// Correlation length of the common field, in grid steps.
    pub length: f64,
    pub base: f64,
    pub seasonal_amp: f64,
    pub sd: f64,
    /// Number of cells given a gap of missing days.
    pub incomplete: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            start_year: 2001,
            years: 10,
            n_lat: 5,
            n_lon: 6,
            seed: 1,
            switch_year: None,
            share_before: 0.2,
            share_after: 0.6,
            length: 1.5,
            base: 12.0,
            seasonal_amp: 3.0,
            sd: 1.0,
            incomplete: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub raw: RawPanel,
    pub enso: EnsoTable,
}

/// Lattice catalog: latitudes `8, 9, ...`, longitudes `70, 71, ...`, zones in
/// up to six rectangular blocks.
pub fn synth_grids(n_lat: usize, n_lon: usize) -> Result<GridSet> {
    let mut cells = Vec::with_capacity(n_lat * n_lon);
    for i in 0..n_lat {
        for j in 0..n_lon {
            let zone = 1 + (i * 2 / n_lat) * 3 + j * 3 / n_lon;
            cells.push(GridCell::new(
                format!("G{:03}", i * n_lon + j + 1),
                8.0 + i as f64,
                70.0 + j as f64,
                zone as u8,
            ));
        }
    }
    GridSet::new(cells)
}

pub fn synthesize(spec: &SynthSpec) -> Result<SynthData> {
    if spec.years == 0 || spec.n_lat * spec.n_lon < 2 {
        return Err(Error::InvalidArgument("synthetic data needs >= 1 year and >= 2 cells".into()));
    }
    for a in [spec.share_before, spec.share_after] {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidArgument(format!("shared-variance fraction {a} not in [0, 1]")));
        }
    }
    let grids = synth_grids(spec.n_lat, spec.n_lon)?;
    let p = grids.len();
    let start = NaiveDate::from_ymd_opt(spec.start_year, 1, 1)
        .ok_or_else(|| Error::InvalidArgument(format!("bad start year {}", spec.start_year)))?;
    let end_year = spec.start_year + spec.years as i32 - 1;
    let end = NaiveDate::from_ymd_opt(end_year, 12, 31)
        .ok_or_else(|| Error::InvalidArgument(format!("bad end year {end_year}")))?;
    let calendar = CalendarIndex::build(start, end)?;

    let cov = DMatrix::from_fn(p, p, |a, b| {
        let (ca, cb) = (grids.cell(a), grids.cell(b));
        (-(ca.lat - cb.lat).hypot(ca.lon - cb.lon) / spec.length).exp()
    });
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::Numerical("synthetic covariance is not positive definite".into()))?
        .l();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let amp: Vec<f64> = (0..p).map(|_| spec.seasonal_amp * rng.random_range(0.5..1.5)).collect();
    let mut values = DMatrix::zeros(calendar.n_days(), p);
    for (t, day) in calendar.days().iter().enumerate() {
        let a = match spec.switch_year {
            Some(y) if day.year >= y => spec.share_after,
            _ => spec.share_before,
        };
        let z = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        let common = &chol * z;
        let season = (2.0 * std::f64::consts::PI * (day.seasonal_phase() as f64 - 15.0) / 365.0).cos();
        for j in 0..p {
            let own: f64 = StandardNormal.sample(&mut rng);
            values[(t, j)] = spec.base + amp[j] * season + spec.sd * (a.sqrt() * common[j] + (1.0 - a).sqrt() * own);
        }
    }
    // Gaps: a run of 3 days in the middle of the window for the last cells.
    for j in p.saturating_sub(spec.incomplete.min(p))..p {
        let mid = calendar.n_days() / 2 + j;
        for t in mid..(mid + 3).min(calendar.n_days()) {
            values[(t, j)] = f64::NAN;
        }
    }

    let mut phases = BTreeMap::new();
    for y in spec.start_year..=end_year {
        phases.insert(y, EnsoPhase::ALL[rng.random_range(0..3)]);
    }
    Ok(SynthData {
        raw: RawPanel {
            values,
            calendar,
            grids,
        },
        enso: EnsoTable::new(phases),
    })
}
