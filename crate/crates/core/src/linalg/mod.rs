//! Dense factorizations with fixed ordering and sign conventions.
//!
//! Every routine is deterministic for identical input bytes: singular values
//! and eigenvalues come out non-increasing, and each right singular vector
//! (or eigenvector) has its first non-negligible component positive.

mod eigen;
mod gsvd;
mod svd;

pub use eigen::{sym_eigen, SymEigen};
pub use gsvd::{angular_distance, gsvd, GsvdFactorization};
pub use svd::{singular_values, svd, SvdFactorization};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Flip `v` so its first component above `tol * max|v|` is positive.
/// Returns true when a flip happened.
pub(crate) fn canonical_sign(v: &mut DVector<f64>) -> bool {
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return false;
    }
    let lead = v.iter().copied().find(|x| x.abs() > 1e-8 * scale);
    if matches!(lead, Some(x) if x < 0.0) {
        v.neg_mut();
        true
    } else {
        false
    }
}

/// Indices that sort `values` in non-increasing order; stable for ties.
pub(crate) fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}
