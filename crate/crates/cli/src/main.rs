//! `dtr`: batch command line for the gridded daily-series analyses.
//!
//! Every subcommand resolves a run configuration (defaults < `--config` file <
//! command-line flags), loads the configured inputs (or generates the seeded
//! synthetic inputs when no data files are configured) and writes CSV/SVG
//! outputs under `--out`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data validation error,
//! 3 numerical failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dtr_core::error::ErrorClass;

#[derive(Debug, Parser)]
#[command(name = "dtr", version, about = "Spatio-temporal matrix analysis of gridded daily series")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,
    /// Extra configuration override `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Which panel a command works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PanelKind {
    /// Complete-data panel in the configured ordering.
    #[value(name = "D")]
    D,
    /// SVD-trimmed panel.
    #[value(name = "S")]
    S,
    /// Classical-decomposition residuals.
    #[value(name = "T")]
    T,
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Grid metadata CSV (`grid_id,lat,lon,zone`).
    #[arg(long)]
    pub grids: Option<PathBuf>,
    /// Daily values CSV (`date,grid_id,value`).
    #[arg(long)]
    pub values: Option<PathBuf>,
    /// ENSO CSV (`year,phase`).
    #[arg(long)]
    pub enso: Option<PathBuf>,
    /// First day of the study window (YYYY-MM-DD).
    #[arg(long)]
    pub start: Option<String>,
    /// Last day of the study window (YYYY-MM-DD).
    #[arg(long)]
    pub end: Option<String>,
    /// Column ordering: identity, raster, zone, spiral, zone-then-spiral.
    #[arg(long)]
    pub order: Option<String>,
}

#[derive(Debug, Args)]
pub struct PanelArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long, value_enum, default_value = "D")]
    pub panel: PanelKind,
    /// Components removed for S.
    #[arg(long)]
    pub k: Option<usize>,
    /// Seasonal period for T.
    #[arg(long)]
    pub period: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NullArgs {
    #[arg(long)]
    pub reps: Option<usize>,
    /// Two-sided significance level.
    #[arg(long)]
    pub level: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WeightArgs {
    /// adjacency (rook), queen or exp-decay.
    #[arg(long)]
    pub weight: Option<String>,
    /// Exp-decay scale in degrees.
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load inputs, select complete grids and write the panel summary.
    Ingest {
        #[command(flatten)]
        inputs: Inputs,
        /// Also write the complete panel in long CSV format.
        #[arg(long)]
        write_panel: bool,
    },
    /// Write the column ordering of the complete grids.
    Order {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Thin SVD of a panel (one CSV per factor).
    Svd {
        #[command(flatten)]
        panel: PanelArgs,
    },
    /// Remove the top-k singular components; optionally sweep k.
    Trim {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        max_lag: Option<usize>,
        /// Comma-separated k values to evaluate instead of a single trim.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<usize>,
        /// ACF band for the sweep (default 2/sqrt(n)).
        #[arg(long)]
        band: Option<f64>,
        /// Also write S in long CSV format.
        #[arg(long)]
        write_panel: bool,
    },
    /// Column-wise classical decomposition residuals T.
    Decompose {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        period: Option<usize>,
        #[arg(long)]
        write_panel: bool,
    },
    /// Correlation spectrum with Marchenko-Pastur significance.
    Esd {
        #[command(flatten)]
        panel: PanelArgs,
        /// One spectrum per calendar year instead of the whole window.
        #[arg(long)]
        yearly: bool,
        /// Write the correlation matrix and its heat map.
        #[arg(long)]
        matrix: bool,
    },
    /// Marchenko-Pastur support edges and density for an aspect ratio.
    Mp {
        /// Aspect ratio y = p / n.
        #[arg(long)]
        y: f64,
        /// Number of grid points of the density table.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// GSVD of a year pair, or a sweep over all pairs.
    Gsvd {
        #[command(flatten)]
        panel: PanelArgs,
        #[command(flatten)]
        null: NullArgs,
        /// First year of a single pair.
        #[arg(long)]
        year_a: Option<i32>,
        /// Second year of a single pair.
        #[arg(long)]
        year_b: Option<i32>,
        /// Sweep mode when no pair is given: year-pairs or transposed-half-years.
        #[arg(long, default_value = "year-pairs")]
        mode: String,
    },
    /// Simulated singular-value null of n x p Gaussian matrices.
    NullSv {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[command(flatten)]
        null: NullArgs,
    },
    /// GSV null: simulated for given shapes, or by permutation of a year pair.
    NullGsv {
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        n2: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[command(flatten)]
        null: NullArgs,
        /// Permute the rows of this year pair of the panel instead of simulating.
        #[arg(long, num_args = 2, value_names = ["YEAR_A", "YEAR_B"])]
        permute: Option<Vec<i32>>,
        /// Permutation scheme: pooled, rows or within-columns.
        #[arg(long)]
        scheme: Option<String>,
        #[command(flatten)]
        panel: PanelArgs,
    },
    /// Bergsma correlation matrix of a panel (optionally one year).
    Bergsma {
        #[command(flatten)]
        panel: PanelArgs,
        #[arg(long)]
        year: Option<i32>,
    },
    /// Spatial Bergsma series.
    Sb {
        #[command(flatten)]
        panel: PanelArgs,
        #[command(flatten)]
        weights: WeightArgs,
        /// Slicing: year, month (year-month) or zone (year-zone).
        #[arg(long, default_value = "year")]
        by: String,
    },
    /// Yearly spatial Bergsma grouped by ENSO phase.
    Enso {
        #[command(flatten)]
        panel: PanelArgs,
        #[command(flatten)]
        weights: WeightArgs,
    },
    /// Top left singular vectors grouped by month and by weekday/weekend.
    Strata {
        #[command(flatten)]
        panel: PanelArgs,
        #[arg(long, default_value_t = 6)]
        top: usize,
    },
    /// Best single split of a numeric column of a CSV file.
    Changepoint {
        /// Input CSV, e.g. `sb/yearly.csv` or `esd/yearly_S.csv`.
        #[arg(long)]
        input: PathBuf,
        /// Value column.
        #[arg(long)]
        column: String,
        /// Label column (default: first column).
        #[arg(long)]
        label: Option<String>,
    },
    /// Full pipeline: every table, plot and the manifest.
    Report {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        null: NullArgs,
        #[command(flatten)]
        weights: WeightArgs,
        /// Skip the transposed half-year sweep.
        #[arg(long)]
        no_transposed: bool,
    },
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new().filter_level(cli.global.log_level).init();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
