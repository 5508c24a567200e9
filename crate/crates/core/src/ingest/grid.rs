use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Coordinates closer than this (in degrees) are treated as identical.
const COORD_EPS: f64 = 1e-9;

/// Climate-zone display names indexed by zone code - 1.
pub const ZONE_NAMES: [&str; 6] = [
    "Tropical monsoon",
    "Tropical savannah, wet and dry",
    "Arid, steppe, hot",
    "Humid subtropical",
    "Montane",
    "Hot desert, arid",
];

/// One spatial cell of the study grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub grid_id: String,
    /// Degrees north.
    pub lat: f64,
    /// Degrees east.
    pub lon: f64,
    /// Climate-zone code in `1..=6`.
    pub zone: u8,
    /// No missing days over the study window.
    pub complete: bool,
}

impl GridCell {
    pub fn new(grid_id: impl Into<String>, lat: f64, lon: f64, zone: u8) -> Self {
        Self {
            grid_id: grid_id.into(),
            lat,
            lon,
            zone,
            complete: true,
        }
    }
}

/// Validated catalog of grid cells. Order of cells is the column order of any
/// panel built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    cells: Vec<GridCell>,
    index: HashMap<String, usize>,
}

impl GridSet {
    pub fn new(cells: Vec<GridCell>) -> Result<Self> {
        let mut index = HashMap::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            if !(1..=6).contains(&c.zone) {
                return Err(Error::Validation(format!(
                    "grid '{}' has zone {} outside 1..6",
                    c.grid_id, c.zone
                )));
            }
            if !c.lat.is_finite() || !c.lon.is_finite() {
                return Err(Error::Validation(format!(
                    "grid '{}' has non-finite coordinates",
                    c.grid_id
                )));
            }
            if index.insert(c.grid_id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate grid_id '{}'", c.grid_id)));
            }
        }
        let mut by_coord: Vec<usize> = (0..cells.len()).collect();
        by_coord.sort_by(|&a, &b| {
            cells[a]
                .lat
                .total_cmp(&cells[b].lat)
                .then(cells[a].lon.total_cmp(&cells[b].lon))
        });
        for w in by_coord.windows(2) {
            let (a, b) = (&cells[w[0]], &cells[w[1]]);
            if (a.lat - b.lat).abs() < COORD_EPS && (a.lon - b.lon).abs() < COORD_EPS {
                return Err(Error::Validation(format!(
                    "grids '{}' and '{}' share coordinates ({}, {})",
                    a.grid_id, b.grid_id, a.lat, a.lon
                )));
            }
        }
        Ok(Self { cells, index })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &GridCell {
        &self.cells[i]
    }

    pub fn position(&self, grid_id: &str) -> Option<usize> {
        self.index.get(grid_id).copied()
    }

    pub fn ids(&self) -> Vec<String> {
        self.cells.iter().map(|c| c.grid_id.clone()).collect()
    }

    /// Sub-catalog with cells taken in the order of `positions`.
    pub fn select(&self, positions: &[usize]) -> Self {
        let cells: Vec<GridCell> = positions.iter().map(|&i| self.cells[i].clone()).collect();
        let index = cells
            .iter()
            .enumerate()
            .map(|(i, c)| (c.grid_id.clone(), i))
            .collect();
        Self { cells, index }
    }

    pub(crate) fn set_complete(&mut self, i: usize, complete: bool) {
        self.cells[i].complete = complete;
    }

    pub fn zone_positions(&self, zone: u8) -> Vec<usize> {
        (0..self.cells.len()).filter(|&i| self.cells[i].zone == zone).collect()
    }

    /// Integer lattice coordinates for each cell: `(row, col)` are one-based
    /// ranks of the cell's latitude and longitude among the distinct values.
    pub fn lattice(&self) -> Vec<(usize, usize)> {
        let lats = distinct_sorted(self.cells.iter().map(|c| c.lat));
        let lons = distinct_sorted(self.cells.iter().map(|c| c.lon));
        self.cells
            .iter()
            .map(|c| (rank_of(&lats, c.lat), rank_of(&lons, c.lon)))
            .collect()
    }
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < COORD_EPS);
    v
}

fn rank_of(sorted: &[f64], x: f64) -> usize {
    sorted
        .iter()
        .position(|v| (v - x).abs() < COORD_EPS)
        .expect("coordinate drawn from the same set")
        + 1
}

#[derive(Debug, Deserialize)]
struct GridRow {
    grid_id: String,
    lat: f64,
    lon: f64,
    zone: i64,
}

/// Load a grid catalog from CSV with header `grid_id,lat,lon,zone`.
pub fn load_grid_metadata(path: &Path) -> Result<GridSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    check_header(path, rdr.headers()?, &["grid_id", "lat", "lon", "zone"])?;
    let mut cells = Vec::new();
    for (i, rec) in rdr.deserialize::<GridRow>().enumerate() {
        let line = i as u64 + 2;
        let row = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if !(1..=6).contains(&row.zone) {
            return Err(Error::parse(
                path,
                line,
                format!("zone {} outside 1..6", row.zone),
            ));
        }
        cells.push(GridCell::new(row.grid_id, row.lat, row.lon, row.zone as u8));
    }
    if cells.is_empty() {
        return Err(Error::parse(path, 1, "no grid rows"));
    }
    GridSet::new(cells)
}

pub(crate) fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got: Vec<&str> = got.iter().collect();
    if got != want {
        return Err(Error::parse(
            path,
            1,
            format!("expected header '{}', found '{}'", want.join(","), got.join(",")),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_valid_file() {
        let mut body = String::from("grid_id,lat,lon,zone\n");
        for i in 0..362 {
            body += &format!("g{i},{},{},{}\n", 8 + i / 20, 68 + i % 20, 1 + i % 6);
        }
        let f = write_tmp(&body);
        let g = load_grid_metadata(f.path()).unwrap();
        assert_eq!(g.len(), 362);
        assert_eq!(g.position("g21"), Some(21));
    }

    #[test]
    fn empty_file_rejected() {
        let f = write_tmp("grid_id,lat,lon,zone\n");
        assert!(load_grid_metadata(f.path()).is_err());
        let f = write_tmp("");
        assert!(load_grid_metadata(f.path()).is_err());
    }

    #[test]
    fn bad_zone_rejected() {
        let f = write_tmp("grid_id,lat,lon,zone\na,10,70,7\n");
        let err = load_grid_metadata(f.path()).unwrap_err();
        assert!(err.to_string().contains("zone 7"));
    }

    #[test]
    fn duplicates_rejected() {
        let f = write_tmp("grid_id,lat,lon,zone\na,10,70,1\na,11,70,1\n");
        assert!(load_grid_metadata(f.path()).is_err());
        let f = write_tmp("grid_id,lat,lon,zone\na,10,70,1\nb,10,70,2\n");
        assert!(load_grid_metadata(f.path()).is_err());
    }

    #[test]
    fn lattice_ranks() {
        let g = GridSet::new(vec![
            GridCell::new("a", 10.5, 70.5, 1),
            GridCell::new("b", 12.5, 70.5, 1),
            GridCell::new("c", 10.5, 73.5, 1),
        ])
        .unwrap();
        assert_eq!(g.lattice(), vec![(1, 1), (2, 1), (1, 2)]);
    }
}
