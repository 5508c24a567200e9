//! Run configuration: defaults, a flat `key = value` file, and overrides.
//!
//! Precedence is override > file > default. Keys may be written with `-` or
//! `_`; `#` starts a comment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::association::{Neighborhood, WeightKind};
use crate::error::{Error, Result};
use crate::gridorder::OrderTag;
use crate::ingest::{parse_date, DecemberRule};
use crate::rmt::PermutationScheme;

/// Weight family; the exp-decay scale lives in [`RunConfig::scale`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightChoice {
    Adjacency(Neighborhood),
    ExpDecay,
}

impl WeightChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightChoice::Adjacency(Neighborhood::Rook) => "adjacency",
            WeightChoice::Adjacency(Neighborhood::Queen) => "queen",
            WeightChoice::ExpDecay => "exp-decay",
        }
    }
}

impl std::str::FromStr for WeightChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacency" | "rook" | "lag1-adjacency" => Ok(WeightChoice::Adjacency(Neighborhood::Rook)),
            "queen" => Ok(WeightChoice::Adjacency(Neighborhood::Queen)),
            "exp-decay" | "expdecay" => Ok(WeightChoice::ExpDecay),
            _ => Err(Error::InvalidArgument(format!("unknown weight kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grids: Option<PathBuf>,
    pub values: Option<PathBuf>,
    pub enso: Option<PathBuf>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub trim_k: usize,
    pub period: usize,
    pub max_lag: usize,
    /// Two-sided significance level of empirical critical bands.
    pub level: f64,
    pub reps: usize,
    pub seed: u64,
    pub scheme: PermutationScheme,
    pub weight: WeightChoice,
    pub scale: f64,
    pub order: OrderTag,
    pub december: DecemberRule,
    pub bergsma_max_n: usize,
    /// Run the transposed half-year GSVD sweep in `report`.
    pub transposed: bool,
    pub out: PathBuf,
    // synthetic input used by `report` when no data files are given
    pub synth_years: usize,
    pub synth_lat: usize,
    pub synth_lon: usize,
    /// First year of the second covariance regime; 0 disables the switch.
    pub synth_switch: i32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grids: None,
            values: None,
            enso: None,
            start: NaiveDate::from_ymd_opt(1951, 1, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2022, 12, 31).expect("valid date"),
            trim_k: crate::detrend::DEFAULT_TRIM_K,
            period: crate::detrend::DEFAULT_PERIOD,
            max_lag: crate::detrend::DEFAULT_MAX_LAG,
            level: crate::rmt::DEFAULT_LEVEL,
            reps: 200,
            seed: 1,
            scheme: PermutationScheme::default(),
            weight: WeightChoice::Adjacency(Neighborhood::Rook),
            scale: 1.0,
            order: OrderTag::Spiral,
            december: DecemberRule::default(),
            bergsma_max_n: 4000,
            transposed: true,
            out: PathBuf::from("out"),
            synth_years: 10,
            synth_lat: 5,
            synth_lon: 6,
            synth_switch: 0,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("{key}: cannot parse '{value}': {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

impl RunConfig {
    /// Set one key. Unknown keys are usage errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "grids" => self.grids = Some(value.into()),
            "values" => self.values = Some(value.into()),
            "enso" => self.enso = Some(value.into()),
            "start" => self.start = parse_date(value)?,
            "end" => self.end = parse_date(value)?,
            "trim_k" | "k" => self.trim_k = num(&key, value)?,
            "period" => self.period = num(&key, value)?,
            "max_lag" => self.max_lag = num(&key, value)?,
            "level" => self.level = num(&key, value)?,
            "reps" => self.reps = num(&key, value)?,
            "seed" => self.seed = num(&key, value)?,
            "scheme" => self.scheme = value.parse()?,
            "weight" => self.weight = value.parse()?,
            "scale" => self.scale = num(&key, value)?,
            "order" => self.order = value.parse()?,
            "december" => {
                self.december = match value {
                    "next-year" => DecemberRule::NextYear,
                    "same-year" => DecemberRule::SameYear,
                    _ => return Err(Error::InvalidArgument(format!("december: unknown rule '{value}'"))),
                }
            }
            "bergsma_max_n" => self.bergsma_max_n = num(&key, value)?,
            "transposed" => self.transposed = parse_bool(&key, value)?,
            "out" => self.out = value.into(),
            "synth_years" => self.synth_years = num(&key, value)?,
            "synth_lat" => self.synth_lat = num(&key, value)?,
            "synth_lon" => self.synth_lon = num(&key, value)?,
            "synth_switch" => self.synth_switch = num(&key, value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Apply every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, i as u64 + 1, "expected 'key = value'"))?;
            self.set(k, v).map_err(|e| Error::parse(origin, i as u64 + 1, e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text, path)
    }

    /// Defaults, then `file`, then `overrides` in order.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(f) = file {
            cfg.apply_file(f)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn weight_kind(&self) -> WeightKind {
        match self.weight {
            WeightChoice::Adjacency(nb) => WeightKind::Adjacency(nb),
            WeightChoice::ExpDecay => WeightKind::ExpDecay { scale: self.scale },
        }
    }

    /// Whether real data files are configured (otherwise synthetic input is used).
    pub fn has_data(&self) -> bool {
        self.grids.is_some() && self.values.is_some()
    }

    pub fn validate(&self) -> Result<()> {
        for p in [&self.grids, &self.values, &self.enso].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::InvalidArgument(format!("input file {} does not exist", p.display())));
            }
        }
        if self.grids.is_some() != self.values.is_some() {
            return Err(Error::InvalidArgument("grids and values must be given together".into()));
        }
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.start > self.end {
            return bad("start date is after end date");
        }
        if self.trim_k == 0 {
            return bad("trim_k must be at least 1");
        }
        if self.period < 2 {
            return bad("period must be at least 2");
        }
        if self.max_lag == 0 {
            return bad("max_lag must be at least 1");
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad("level must lie in (0, 1)");
        }
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad("scale must be positive");
        }
        if self.bergsma_max_n < 4 {
            return bad("bergsma_max_n must be at least 4");
        }
        if self.synth_years < 1 || self.synth_lat < 1 || self.synth_lon < 1 || self.synth_lat * self.synth_lon < 2 {
            return bad("synthetic lattice needs at least 2 cells and 1 year");
        }
        Ok(())
    }

    /// Canonical `key = value` listing; stable across runs.
    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("grids", path(&self.grids));
        kv("values", path(&self.values));
        kv("enso", path(&self.enso));
        kv("start", self.start.to_string());
        kv("end", self.end.to_string());
        kv("trim_k", self.trim_k.to_string());
        kv("period", self.period.to_string());
        kv("max_lag", self.max_lag.to_string());
        kv("level", self.level.to_string());
        kv("reps", self.reps.to_string());
        kv("seed", self.seed.to_string());
        kv("scheme", self.scheme.as_str().to_string());
        kv("weight", self.weight.as_str().to_string());
        kv("scale", self.scale.to_string());
        kv("order", self.order.as_str().to_string());
        kv(
            "december",
            match self.december {
                DecemberRule::NextYear => "next-year",
                DecemberRule::SameYear => "same-year",
            }
            .to_string(),
        );
        kv("bergsma_max_n", self.bergsma_max_n.to_string());
        kv("transposed", self.transposed.to_string());
        kv("synth_years", self.synth_years.to_string());
        kv("synth_lat", self.synth_lat.to_string());
        kv("synth_lon", self.synth_lon.to_string());
        kv("synth_switch", self.synth_switch.to_string());
        s
    }
}
