//! Spatio-temporal matrix analysis for gridded daily series.
//!
//! The crate is organised around the stages of the analysis:
//!
//! - [`ingest`]: calendars, grid catalogs, daily panels, ENSO labels
//! - [`gridorder`]: raster, zone-grouped and anti-diagonal spiral column orderings
//! - [`linalg`]: thin SVD, symmetric eigendecomposition, GSVD of a matrix pair
//! - [`rmt`]: empirical spectral distributions, Marchenko-Pastur law, empirical nulls
//! - [`detrend`]: SVD trimming, classical decomposition, ACF diagnostics
//! - [`association`]: Pearson and Bergsma correlation, spatial weights, spatial Bergsma
//! - [`pipeline`]: end-to-end runs, change summaries, SVG emission
//!
//! All numerics use `f64`. Matrices are `nalgebra::DMatrix<f64>`; panels keep
//! days along rows and grid cells along columns.

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod detrend;
pub mod error;
pub mod gridorder;
pub mod ingest;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod rmt;
pub mod stats;

pub use error::{Error, Result};
pub use nalgebra;
