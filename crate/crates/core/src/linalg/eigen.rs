use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{canonical_sign, check_finite, descending_order, max_abs};
use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column j is the unit eigenvector of `values[j]`.
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// `sum_{j in indices} lambda_j e_j e_j^T`.
    pub fn partial_sum(&self, indices: &[usize]) -> DMatrix<f64> {
        let p = self.vectors.nrows();
        let mut out = DMatrix::zeros(p, p);
        for &j in indices {
            let e = self.vectors.column(j);
            out.ger(self.values[j], &e, &e, 1.0);
        }
        out
    }
}

pub fn sym_eigen(r: &DMatrix<f64>) -> Result<SymEigen> {
    let (p, q) = r.shape();
    if p != q || p == 0 {
        return Err(Error::Shape(format!("eigendecomposition of a {p}x{q} matrix")));
    }
    check_finite(r, "eigen input")?;
    let asym = max_abs(&(r - r.transpose()));
    if asym > 1e-12 * max_abs(r).max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let sym = (r + r.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = descending_order(&raw);
    let values = order.iter().map(|&i| raw[i]).collect();
    let mut vectors = eig.eigenvectors.select_columns(&order);
    for j in 0..p {
        let mut v: DVector<f64> = vectors.column(j).into_owned();
        if canonical_sign(&mut v) {
            vectors.set_column(j, &v);
        }
    }
    Ok(SymEigen { values, vectors })
}
