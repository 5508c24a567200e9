//! End-to-end analyses over a panel: yearly spectra, GSVD sweeps, change
//! summaries, ENSO and calendar strata, SVG plots, run configuration and the
//! full `report` run.

pub mod config;
pub mod manifest;
pub mod report;
pub mod summaries;
pub mod svg;
pub mod synth;
pub mod yearly;

pub use config::{RunConfig, WeightChoice};
pub use manifest::{sha256_file, sha256_hex, Manifest};
pub use report::{load_inputs, ordered_panel, run_report, Inputs, ReportOutcome};
pub use summaries::{
    change_summary, run_change_summary, run_enso_stratification, run_singular_vector_strata, ChangePoint,
    ChangeRow, PhaseSummary, StratumRow, SvStrata, Track,
};
pub use synth::{synth_grids, synthesize, SynthData, SynthSpec};
pub use yearly::{
    complete_years, half_year_rows, run_gsvd_sweep, run_gsvd_sweep_in_basis, run_yearly_esd, spectrum_of, GsvdSweep, NullSettings,
    PairGsv, SweepMode, SweepPair, YearSpectrum, YearlySpectralSeries,
};
