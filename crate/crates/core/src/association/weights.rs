use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::GridSet;

/// Lattice neighbourhood for adjacency weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Neighborhood {
    /// Four edge-sharing neighbours.
    #[default]
    Rook,
    /// Eight neighbours including diagonals.
    Queen,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    Adjacency(Neighborhood),
    /// `exp(-d / scale)` with `d` the Euclidean distance in degrees.
    ExpDecay { scale: f64 },
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKind::Adjacency(Neighborhood::Rook) => f.write_str("lag1-adjacency"),
            WeightKind::Adjacency(Neighborhood::Queen) => f.write_str("lag1-adjacency-queen"),
            WeightKind::ExpDecay { scale } => write!(f, "exp-decay({scale})"),
        }
    }
}

/// Spatial proximity weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub values: DMatrix<f64>,
    pub kind: WeightKind,
    pub standardized: bool,
    /// Rows with no positive weight (left all-zero by standardization).
    pub isolated: Vec<usize>,
}

impl WeightMatrix {
    /// Row-standardize raw non-negative weights; the diagonal is forced to 0.
    pub fn standardize(raw: DMatrix<f64>, kind: WeightKind) -> Result<Self> {
        let p = raw.nrows();
        if raw.ncols() != p {
            return Err(Error::Shape(format!("weight matrix is {}x{}", p, raw.ncols())));
        }
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation("weights must be finite and non-negative".into()));
        }
        let mut values = raw;
        let mut isolated = Vec::new();
        for i in 0..p {
            values[(i, i)] = 0.0;
            let s: f64 = values.row(i).sum();
            if s > 0.0 {
                values.row_mut(i).scale_mut(1.0 / s);
            } else {
                isolated.push(i);
            }
        }
        Ok(Self {
            values,
            kind,
            standardized: true,
            isolated,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Sub-matrix on `positions`, re-standardized.
    pub fn restrict(&self, positions: &[usize]) -> Result<Self> {
        let sub = self.values.select_rows(positions).select_columns(positions);
        Self::standardize(sub, self.kind)
    }
}

/// Lag-1 adjacency on the integer lattice of `grids`, row-standardized.
pub fn adjacency_weights(grids: &GridSet, nb: Neighborhood) -> WeightMatrix {
    let lat = grids.lattice();
    let p = lat.len();
    let raw = DMatrix::from_fn(p, p, |i, j| {
        let dr = lat[i].0.abs_diff(lat[j].0);
        let dc = lat[i].1.abs_diff(lat[j].1);
        let adjacent = match nb {
            Neighborhood::Rook => dr + dc == 1,
            Neighborhood::Queen => i != j && dr <= 1 && dc <= 1,
        };
        if adjacent {
            1.0
        } else {
            0.0
        }
    });
    WeightMatrix::standardize(raw, WeightKind::Adjacency(nb)).expect("adjacency weights are valid")
}

/// Exponential distance decay, row-standardized.
pub fn expdecay_weights(grids: &GridSet, scale: f64) -> Result<WeightMatrix> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("decay scale must be positive, got {scale}")));
    }
    let cells = grids.cells();
    let p = cells.len();
    let raw = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            0.0
        } else {
            let d = (cells[i].lat - cells[j].lat).hypot(cells[i].lon - cells[j].lon);
            (-d / scale).exp()
        }
    });
    WeightMatrix::standardize(raw, WeightKind::ExpDecay { scale })
}
