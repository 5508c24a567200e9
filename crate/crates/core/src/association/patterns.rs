use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::ingest::{GridCell, GridSet};

use super::CorrelationMatrix;

/// Most-correlated partner of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRow {
    pub grid_id: String,
    pub partner_id: String,
    pub correlation: f64,
    /// Partner latitude minus own latitude.
    pub dlat: f64,
    /// Partner longitude minus own longitude.
    pub dlon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    pub rows: Vec<NeighborRow>,
    /// Distinct `dlat` values with counts, ascending.
    pub dlat_hist: Vec<(f64, usize)>,
    pub dlon_hist: Vec<(f64, usize)>,
}

fn lookup<'a>(grids: &'a GridSet, id: &str) -> Result<&'a GridCell> {
    grids
        .position(id)
        .map(|i| grids.cell(i))
        .ok_or_else(|| Error::Validation(format!("grid '{id}' not in catalog")))
}

fn histogram(values: impl Iterator<Item = f64>) -> Vec<(f64, usize)> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for x in v {
        match out.last_mut() {
            Some((y, c)) if (*y - x).abs() < 1e-9 => *c += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// For every grid, the off-diagonal partner of largest correlation. Ties go to
/// the nearer partner, then to the smaller grid id. `NaN` entries are skipped.
pub fn max_corr_neighbor(r: &CorrelationMatrix, grids: &GridSet) -> Result<NeighborTable> {
    let p = r.dim();
    if p < 2 {
        return Err(Error::InvalidArgument("neighbour search needs at least 2 grids".into()));
    }
    let cells: Vec<&GridCell> = r.grid_ids.iter().map(|id| lookup(grids, id)).collect::<Result<_>>()?;
    let dist = |a: &GridCell, b: &GridCell| (a.lat - b.lat).hypot(a.lon - b.lon);
    let mut rows = Vec::with_capacity(p);
    for i in 0..p {
        let mut best: Option<usize> = None;
        for j in (0..p).filter(|&j| j != i && !r.values[(i, j)].is_nan()) {
            let better = match best {
                None => true,
                Some(b) => match r.values[(i, j)].total_cmp(&r.values[(i, b)]) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => match dist(cells[i], cells[j]).total_cmp(&dist(cells[i], cells[b])) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => cells[j].grid_id < cells[b].grid_id,
                    },
                },
            };
            if better {
                best = Some(j);
            }
        }
        let Some(b) = best else { continue };
        rows.push(NeighborRow {
            grid_id: cells[i].grid_id.clone(),
            partner_id: cells[b].grid_id.clone(),
            correlation: r.values[(i, b)],
            dlat: cells[b].lat - cells[i].lat,
            dlon: cells[b].lon - cells[i].lon,
        });
    }
    let dlat_hist = histogram(rows.iter().map(|r| r.dlat));
    let dlon_hist = histogram(rows.iter().map(|r| r.dlon));
    Ok(NeighborTable {
        rows,
        dlat_hist,
        dlon_hist,
    })
}

/// One cell of a correlation heat map.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCell {
    pub grid_id: String,
    pub lat: f64,
    pub lon: f64,
    pub value: f64,
}

/// Correlation row of `grid_id` placed at each partner's coordinates, sorted
/// by (lat, lon).
pub fn corr_field(r: &CorrelationMatrix, grid_id: &str, grids: &GridSet) -> Result<Vec<FieldCell>> {
    let i = r
        .grid_ids
        .iter()
        .position(|g| g == grid_id)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown grid_id '{grid_id}'")))?;
    let mut field: Vec<FieldCell> = r
        .grid_ids
        .iter()
        .enumerate()
        .map(|(j, id)| {
            let c = lookup(grids, id)?;
            Ok(FieldCell {
                grid_id: id.clone(),
                lat: c.lat,
                lon: c.lon,
                value: if i == j { 1.0 } else { r.values[(i, j)] },
            })
        })
        .collect::<Result<_>>()?;
    field.sort_by(|a, b| a.lat.total_cmp(&b.lat).then(a.lon.total_cmp(&b.lon)));
    Ok(field)
}
