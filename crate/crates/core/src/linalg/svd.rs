use nalgebra::{DMatrix, DVector, SVD};

use super::{canonical_sign, check_finite, descending_order};
use crate::error::{Error, Result};

/// Thin SVD `X = U diag(sigma) V^T` with `r = min(n, p)` columns in `U`, `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactorization {
    /// n x r, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Non-increasing, length r.
    pub sigma: Vec<f64>,
    /// p x r, orthonormal columns.
    pub v: DMatrix<f64>,
}

impl SvdFactorization {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `sum_{i in components} sigma_i u_i v_i^T`.
    pub fn partial_sum(&self, components: std::ops::Range<usize>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.u.nrows(), self.v.nrows());
        for i in components {
            out.ger(self.sigma[i], &self.u.column(i), &self.v.column(i), 1.0);
        }
        out
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.partial_sum(0..self.rank())
    }
}

fn raw_square_svd(m: DMatrix<f64>, vectors: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(m, vectors, vectors, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD iteration did not converge".into()))
}

/// Thin SVD. Tall inputs are reduced by a Householder QR first.
pub fn svd(x: &DMatrix<f64>) -> Result<SvdFactorization> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return Err(Error::Shape("SVD of an empty matrix".into()));
    }
    check_finite(x, "SVD input")?;
    if n < p {
        let t = svd(&x.transpose())?;
        let mut f = SvdFactorization {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
        fix_signs(&mut f);
        return Ok(f);
    }

    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let s = raw_square_svd(r, true)?;
    let u_r = s.u.expect("requested U");
    let v_t = s.v_t.expect("requested V^T");
    let values: Vec<f64> = s.singular_values.iter().copied().collect();

    let order = descending_order(&values);
    let sigma: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let u = &q * u_r.select_columns(&order);
    let v = v_t.transpose().select_columns(&order);
    let mut f = SvdFactorization { u, sigma, v };
    fix_signs(&mut f);
    Ok(f)
}

fn fix_signs(f: &mut SvdFactorization) {
    for i in 0..f.rank() {
        let mut v: DVector<f64> = f.v.column(i).into_owned();
        if canonical_sign(&mut v) {
            f.v.set_column(i, &v);
            let u = -f.u.column(i);
            f.u.set_column(i, &u);
        }
    }
}

/// Singular values only, non-increasing.
pub fn singular_values(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return Err(Error::Shape("SVD of an empty matrix".into()));
    }
    check_finite(x, "SVD input")?;
    let square = if n >= p {
        x.clone().qr().r()
    } else {
        x.transpose().qr().r()
    };
    let s = raw_square_svd(square, false)?;
    let mut v: Vec<f64> = s.singular_values.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}
