//! Column orderings of the grid catalog.
//!
//! An [`Ordering`] stores a permutation where position `k` of the reordered
//! object holds original column `perm[k]`.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::{GridSet, Panel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderTag {
    Identity,
    Raster,
    Zone,
    Spiral,
    ZoneThenSpiral,
}

impl OrderTag {
    pub fn as_str(self) -> &'static str {
        match self {
            OrderTag::Identity => "identity",
            OrderTag::Raster => "raster",
            OrderTag::Zone => "zone",
            OrderTag::Spiral => "spiral",
            OrderTag::ZoneThenSpiral => "zone-then-spiral",
        }
    }
}

impl fmt::Display for OrderTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OrderTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "input" => Ok(OrderTag::Identity),
            "raster" => Ok(OrderTag::Raster),
            "zone" => Ok(OrderTag::Zone),
            "spiral" => Ok(OrderTag::Spiral),
            "zone-then-spiral" => Ok(OrderTag::ZoneThenSpiral),
            _ => Err(Error::InvalidArgument(format!("unknown ordering '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Lat,
    Lon,
}

/// First step of the anti-diagonal traversal out of the corner cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpiralStart {
    /// (1,1) -> (1,2) -> (2,1) -> (3,1) -> ...
    #[default]
    AlongLon,
    /// (1,1) -> (2,1) -> (1,2) -> (1,3) -> ...
    AlongLat,
}

/// Ordering used inside each zone block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WithinZone {
    Spiral,
    Raster(Axis),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ordering {
    perm: Vec<usize>,
    tag: OrderTag,
}

impl Ordering {
    pub fn new(perm: Vec<usize>, tag: OrderTag) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &i in &perm {
            if i >= perm.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Validation(format!(
                    "ordering is not a permutation of 0..{}",
                    perm.len()
                )));
            }
        }
        Ok(Self { perm, tag })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            tag: OrderTag::Identity,
        }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn tag(&self) -> OrderTag {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn inverse(&self) -> Ordering {
        let mut inv = vec![0; self.perm.len()];
        for (k, &i) in self.perm.iter().enumerate() {
            inv[i] = k;
        }
        Ordering {
            perm: inv,
            tag: self.tag,
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.perm.len() {
            return Err(Error::Shape(format!(
                "ordering has {} entries, matrix dimension is {n}",
                self.perm.len()
            )));
        }
        Ok(())
    }

    /// Reorder rows and columns of a square matrix simultaneously.
    pub fn apply_square(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
        }
        self.check_len(m.nrows())?;
        Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(self.perm[i], self.perm[j])]))
    }

    pub fn apply_columns(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_len(m.ncols())?;
        Ok(m.select_columns(&self.perm))
    }

    pub fn apply_panel(&self, panel: &Panel) -> Result<Panel> {
        self.check_len(panel.n_grids())?;
        Ok(panel.select_columns(&self.perm).with_order_tag(self.tag.as_str()))
    }

    /// `(position, grid_id)` pairs for export.
    pub fn positions<'a>(&'a self, grids: &'a GridSet) -> impl Iterator<Item = (usize, &'a str)> + 'a {
        self.perm
            .iter()
            .enumerate()
            .map(move |(k, &i)| (k, grids.cell(i).grid_id.as_str()))
    }
}

pub fn raster_order(grids: &GridSet, primary: Axis) -> Ordering {
    let cells = grids.cells();
    let mut perm: Vec<usize> = (0..cells.len()).collect();
    perm.sort_by(|&a, &b| {
        let (ca, cb) = (&cells[a], &cells[b]);
        match primary {
            Axis::Lat => ca.lat.total_cmp(&cb.lat).then(ca.lon.total_cmp(&cb.lon)),
            Axis::Lon => ca.lon.total_cmp(&cb.lon).then(ca.lat.total_cmp(&cb.lat)),
        }
    });
    Ordering {
        perm,
        tag: OrderTag::Raster,
    }
}

/// Anti-diagonal traversal of the lattice with direction alternating per
/// diagonal. Lattice positions with no cell are skipped.
pub fn spiral_order(grids: &GridSet, start: SpiralStart) -> Ordering {
    let lattice = grids.lattice();
    let at: HashMap<(usize, usize), usize> =
        lattice.iter().enumerate().map(|(k, &pos)| (pos, k)).collect();
    let max_r = lattice.iter().map(|p| p.0).max().unwrap_or(0);
    let max_c = lattice.iter().map(|p| p.1).max().unwrap_or(0);

    let mut perm = Vec::with_capacity(lattice.len());
    for sum in 2..=(max_r + max_c) {
        let lo = sum.saturating_sub(max_c).max(1);
        let hi = (sum - 1).min(max_r);
        if lo > hi {
            continue;
        }
        // Odd diagonals run with increasing row index in the default layout.
        let rising = (sum % 2 == 1) == (start == SpiralStart::AlongLon);
        let mut visit = |r: usize| {
            if let Some(&k) = at.get(&(r, sum - r)) {
                perm.push(k);
            }
        };
        if rising {
            (lo..=hi).for_each(&mut visit);
        } else {
            (lo..=hi).rev().for_each(&mut visit);
        }
    }
    Ordering {
        perm,
        tag: OrderTag::Spiral,
    }
}

/// Group cells by zone code ascending; `within` orders each block.
pub fn zone_grouped_order(grids: &GridSet, within: WithinZone) -> Ordering {
    let base = match within {
        WithinZone::Spiral => spiral_order(grids, SpiralStart::default()),
        WithinZone::Raster(axis) => raster_order(grids, axis),
    };
    let mut perm = base.perm;
    perm.sort_by_key(|&i| grids.cell(i).zone);
    Ordering {
        perm,
        tag: match within {
            WithinZone::Spiral => OrderTag::ZoneThenSpiral,
            WithinZone::Raster(_) => OrderTag::Zone,
        },
    }
}

/// Ordering named by `tag`, with default sub-choices.
pub fn order_by_tag(grids: &GridSet, tag: OrderTag) -> Ordering {
    match tag {
        OrderTag::Identity => Ordering::identity(grids.len()),
        OrderTag::Raster => raster_order(grids, Axis::Lat),
        OrderTag::Zone => zone_grouped_order(grids, WithinZone::Raster(Axis::Lat)),
        OrderTag::Spiral => spiral_order(grids, SpiralStart::default()),
        OrderTag::ZoneThenSpiral => zone_grouped_order(grids, WithinZone::Spiral),
    }
}
