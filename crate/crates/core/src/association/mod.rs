//! Association measures between grid series and their spatial summaries.

mod bergsma;
mod patterns;
mod pearson;
mod spatial;
mod weights;

pub use bergsma::{
    bergsma_corr_matrix, bergsma_kappa, bergsma_rho, BergsmaMatrix, BergsmaOptions,
    BergsmaEstimator, CenteredDistances,
};
pub use patterns::{corr_field, max_corr_neighbor, FieldCell, NeighborRow, NeighborTable};
pub use pearson::pearson_corr;
pub use spatial::{
    sb_from_similarity, sb_series, spatial_bergsma, spatial_bergsma_subset, SbBy, SbResult, SbSlice,
};
pub use weights::{adjacency_weights, expdecay_weights, Neighborhood, WeightKind, WeightMatrix};

use std::fmt;

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrKind {
    Pearson,
    Bergsma,
}

impl fmt::Display for CorrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrKind::Pearson => "pearson",
            CorrKind::Bergsma => "bergsma",
        })
    }
}

/// Symmetric `p x p` correlation matrix with unit diagonal, labelled by the
/// grid ids of its rows/columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub values: DMatrix<f64>,
    pub kind: CorrKind,
    pub grid_ids: Vec<String>,
    /// Free-form description of the source panel, slice and ordering.
    pub provenance: String,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }
}
