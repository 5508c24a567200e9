use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;

use super::{check_finite, singular_values, svd};
use crate::error::{Error, Result};

/// Generalized SVD of a pair sharing the right factor:
///
/// `D1 = U1 diag(alpha) P V`, `D2 = U2 diag(beta) P V`
///
/// with `alpha_i^2 + beta_i^2 = 1`, `P` upper triangular and `V` orthogonal.
/// `U1`, `U2` are kept thin (`N x r`), so the quasi-diagonal factors reduce to
/// the `r x r` diagonals `diag(alpha)`, `diag(beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GsvdFactorization {
    pub u1: DMatrix<f64>,
    pub u2: DMatrix<f64>,
    /// Non-increasing in `[0, 1]`.
    pub alpha: Vec<f64>,
    /// Non-decreasing in `[0, 1]`.
    pub beta: Vec<f64>,
    /// r x r upper triangular, positive diagonal.
    pub p: DMatrix<f64>,
    /// M x M orthogonal.
    pub v: DMatrix<f64>,
}

impl GsvdFactorization {
    pub fn rank(&self) -> usize {
        self.alpha.len()
    }

    /// `alpha_i / beta_i`, non-increasing; `+inf` where `beta_i = 0`.
    pub fn gsv(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.beta).map(|(a, b)| a / b).collect()
    }

    pub fn log_gsv(&self) -> Vec<f64> {
        self.gsv().into_iter().map(f64::ln).collect()
    }

    /// Anti-symmetric angular distances `arctan(alpha/beta) - pi/4`.
    pub fn angular_distances(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| angular_distance(a, b))
            .collect()
    }

    pub fn reconstruct_first(&self) -> DMatrix<f64> {
        scale_columns(&self.u1, &self.alpha) * &self.p * &self.v
    }

    pub fn reconstruct_second(&self) -> DMatrix<f64> {
        scale_columns(&self.u2, &self.beta) * &self.p * &self.v
    }
}

/// `arctan(alpha/beta) - pi/4`, evaluated as `atan2` so `beta = 0` gives `pi/4`.
pub fn angular_distance(alpha: f64, beta: f64) -> f64 {
    alpha.atan2(beta) - FRAC_PI_4
}

fn scale_columns(m: &DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, f) in s.iter().enumerate() {
        out.column_mut(j).scale_mut(*f);
    }
    out
}

/// GSVD of `(D1, D2)` via a QR factorization of the stacked matrix followed by
/// a cosine-sine split of its orthonormal factor.
pub fn gsvd(d1: &DMatrix<f64>, d2: &DMatrix<f64>) -> Result<GsvdFactorization> {
    let (n1, m) = d1.shape();
    let (n2, m2) = d2.shape();
    if m != m2 {
        return Err(Error::Shape(format!(
            "GSVD pair has {m} and {m2} columns"
        )));
    }
    if m == 0 || n1 < m || n2 < m {
        return Err(Error::Shape(format!(
            "GSVD needs min(rows) >= columns, got {n1}x{m} and {n2}x{m}"
        )));
    }
    check_finite(d1, "GSVD first matrix")?;
    check_finite(d2, "GSVD second matrix")?;

    let mut stacked = DMatrix::zeros(n1 + n2, m);
    stacked.rows_mut(0, n1).copy_from(d1);
    stacked.rows_mut(n1, n2).copy_from(d2);
    let qr = stacked.qr();
    let q = qr.q();
    let r = qr.r();

    let rsv = singular_values(&r)?;
    let tol = (n1 + n2).max(m) as f64 * f64::EPSILON * rsv[0];
    let rank = rsv.iter().filter(|s| **s > tol).count();
    if rank < m {
        return Err(Error::RankDeficient { rank, expected: m });
    }

    // Cosine part: SVD of the top block.
    let q1 = q.rows(0, n1).into_owned();
    let q2 = q.rows(n1, n2).into_owned();
    let cs = svd(&q1)?;
    let alpha: Vec<f64> = cs.sigma.iter().map(|c| c.min(1.0)).collect();
    let z = cs.v;
    let u1 = cs.u;

    // Sine part: the columns of Q2 Z are mutually orthogonal with norms beta.
    let w = &q2 * &z;
    let wqr = w.qr();
    let mut u2 = wqr.q();
    let rw = wqr.r();
    let mut beta = Vec::with_capacity(m);
    for i in 0..m {
        let d = rw[(i, i)];
        if d < 0.0 {
            u2.column_mut(i).neg_mut();
        }
        beta.push(d.abs().min(1.0));
    }

    // Shared factor Z^T R = P V by an RQ factorization.
    let b = z.transpose() * r;
    let (p, v) = rq(&b);

    Ok(GsvdFactorization {
        u1,
        u2,
        alpha,
        beta,
        p,
        v,
    })
}

/// `B = P V` with `P` upper triangular (positive diagonal) and `V` orthogonal.
fn rq(b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = b.nrows();
    // QR of (J B)^T where J reverses row order.
    let flipped = DMatrix::from_fn(m, m, |i, j| b[(m - 1 - j, i)]);
    let qr = flipped.qr();
    let qc = qr.q();
    let rc = qr.r();
    let mut p = DMatrix::from_fn(m, m, |i, j| rc[(m - 1 - j, m - 1 - i)]);
    let mut v = DMatrix::from_fn(m, m, |i, j| qc[(j, m - 1 - i)]);
    for i in 0..m {
        if p[(i, i)] < 0.0 {
            p.column_mut(i).neg_mut();
            v.row_mut(i).neg_mut();
        }
    }
    (p, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    /// Generalized eigenvalues of the pencil (A^T A, B^T B) via a Cholesky
    /// reduction, independent of the QR/CS route.
    fn pencil_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
        let ga = a.transpose() * a;
        let gb = b.transpose() * b;
        let l = gb.cholesky().unwrap().l();
        let linv = l.try_inverse().unwrap();
        let c = &linv * ga * linv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    #[test]
    fn contracts_on_random_pair() {
        let d1 = gaussian(12, 4, 1);
        let d2 = gaussian(9, 4, 2);
        let f = gsvd(&d1, &d2).unwrap();
        for (a, b) in f.alpha.iter().zip(&f.beta) {
            assert!((a * a + b * b - 1.0).abs() <= 1e-10);
        }
        assert!(max_abs(&(&d1 - f.reconstruct_first())) <= 1e-8 * max_abs(&d1));
        assert!(max_abs(&(&d2 - f.reconstruct_second())) <= 1e-8 * max_abs(&d2));
        let eye = DMatrix::<f64>::identity(4, 4);
        assert!(max_abs(&(f.v.transpose() * &f.v - &eye)) <= 1e-10);
        assert!(max_abs(&(f.u1.transpose() * &f.u1 - &eye)) <= 1e-10);
        assert!(max_abs(&(f.u2.transpose() * &f.u2 - &eye)) <= 1e-10);
        for i in 0..4 {
            for j in 0..i {
                assert_eq!(f.p[(i, j)], 0.0);
            }
        }
        let g = f.gsv();
        assert!(g.windows(2).all(|w| w[0] >= w[1]) && g.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn equal_pair_gives_unit_values() {
        let d = gaussian(7, 3, 4);
        let f = gsvd(&d, &d).unwrap();
        for (g, t) in f.gsv().iter().zip(f.angular_distances()) {
            assert!((g - 1.0).abs() <= 1e-10);
            assert!(t.abs() <= 1e-10);
        }
    }

    #[test]
    fn doubled_second_matrix_halves_values() {
        let d = gaussian(10, 5, 5);
        let f = gsvd(&d, &(&d * 2.0)).unwrap();
        for g in f.gsv() {
            assert!((g - 0.5).abs() <= 1e-10);
        }
    }

    #[test]
    fn matches_pencil_oracle() {
        let d1 = gaussian(6, 3, 21);
        let d2 = gaussian(6, 3, 22);
        let f = gsvd(&d1, &d2).unwrap();
        let ev = pencil_eigenvalues(&d1, &d2);
        for (g, e) in f.gsv().iter().zip(&ev) {
            assert!((g * g - e).abs() <= 1e-8 * e.abs().max(1.0), "{g} {e}");
        }
    }

    #[test]
    fn swapping_inverts_values() {
        let d1 = gaussian(15, 5, 31);
        let d2 = gaussian(11, 5, 32);
        let a = gsvd(&d1, &d2).unwrap().gsv();
        let b = gsvd(&d2, &d1).unwrap().gsv();
        for (x, y) in a.iter().zip(b.iter().rev()) {
            assert!((x * y - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn angular_distance_limits() {
        assert_eq!(angular_distance(1.0, 1.0), 0.0);
        assert!((angular_distance(1.0, 0.0) - FRAC_PI_4).abs() < 1e-15);
        assert!((angular_distance(0.0, 1.0) + FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn shape_and_rank_errors() {
        assert!(matches!(gsvd(&gaussian(2, 3, 1), &gaussian(5, 3, 2)), Err(Error::Shape(_))));
        assert!(matches!(gsvd(&gaussian(5, 3, 1), &gaussian(5, 2, 2)), Err(Error::Shape(_))));
        let mut d1 = gaussian(6, 3, 1);
        let mut d2 = gaussian(6, 3, 2);
        d1.column_mut(2).fill(0.0);
        d2.column_mut(2).fill(0.0);
        assert!(matches!(gsvd(&d1, &d2), Err(Error::RankDeficient { rank: 2, expected: 3 })));
    }

    #[test]
    fn zero_second_block_gives_infinite_values() {
        let d1 = gaussian(5, 2, 1);
        let d2 = DMatrix::zeros(4, 2);
        let f = gsvd(&d1, &d2).unwrap();
        assert!(f.gsv().iter().all(|g| g.is_infinite()));
        assert!(f.angular_distances().iter().all(|t| (t - FRAC_PI_4).abs() < 1e-12));
    }
}
