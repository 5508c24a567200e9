use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use super::grid::check_header;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnsoPhase {
    ElNino,
    LaNina,
    Neutral,
}

impl EnsoPhase {
    pub const ALL: [EnsoPhase; 3] = [EnsoPhase::ElNino, EnsoPhase::LaNina, EnsoPhase::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            EnsoPhase::ElNino => "ElNino",
            EnsoPhase::LaNina => "LaNina",
            EnsoPhase::Neutral => "Neutral",
        }
    }
}

impl fmt::Display for EnsoPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnsoPhase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ElNino" => Ok(EnsoPhase::ElNino),
            "LaNina" => Ok(EnsoPhase::LaNina),
            "Neutral" => Ok(EnsoPhase::Neutral),
            _ => Err(Error::Validation(format!("unknown ENSO phase '{s}'"))),
        }
    }
}

/// Year -> ENSO phase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnsoTable {
    phases: BTreeMap<i32, EnsoPhase>,
}

impl EnsoTable {
    pub fn new(phases: BTreeMap<i32, EnsoPhase>) -> Self {
        Self { phases }
    }

    pub fn phase(&self, year: i32) -> Option<EnsoPhase> {
        self.phases.get(&year).copied()
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, EnsoPhase)> + '_ {
        self.phases.iter().map(|(y, p)| (*y, *p))
    }

    /// Error unless every year in `years` has a phase.
    pub fn check_covers(&self, years: RangeInclusive<i32>) -> Result<()> {
        let missing: Vec<i32> = years.filter(|y| !self.phases.contains_key(y)).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(format!("ENSO table has no phase for years {missing:?}")))
        }
    }
}

#[derive(Debug, Deserialize)]
struct EnsoRow {
    year: i32,
    phase: String,
}

/// Load `year,phase` rows and check coverage of the study years.
pub fn load_enso(path: &Path, years: RangeInclusive<i32>) -> Result<EnsoTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    check_header(path, rdr.headers()?, &["year", "phase"])?;
    let mut phases = BTreeMap::new();
    for (i, rec) in rdr.deserialize::<EnsoRow>().enumerate() {
        let line = i as u64 + 2;
        let row = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let phase = row
            .phase
            .parse()
            .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        if phases.insert(row.year, phase).is_some() {
            return Err(Error::parse(path, line, format!("year {} listed twice", row.year)));
        }
    }
    let table = EnsoTable::new(phases);
    table.check_covers(years)?;
    Ok(table)
}
