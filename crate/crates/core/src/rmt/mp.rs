use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::SymEigen;

/// Edges `(1 -/+ sqrt(y))^2` of the Marchenko-Pastur support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpSupport {
    pub lower: f64,
    pub upper: f64,
}

impl MpSupport {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

pub fn mp_support(y: f64) -> Result<MpSupport> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::InvalidArgument(format!("aspect ratio must be positive, got {y}")));
    }
    let s = y.sqrt();
    Ok(MpSupport {
        lower: (1.0 - s).powi(2),
        upper: (1.0 + s).powi(2),
    })
}

/// Marchenko-Pastur density at `x` for aspect ratio `y`, under two
/// normalizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpDensity {
    /// `sqrt((y+ - x)(x - y-)) / (2 pi)`; integrates to `y` over the support.
    pub raw: f64,
    /// `raw / (y x)`; integrates to `min(1, 1/y)`, so together with
    /// `point_mass` the law has total mass one.
    pub normalized: f64,
    /// Atom at zero, `1 - 1/y` when `y > 1`, else 0.
    pub point_mass: f64,
}

pub fn mp_density(x: f64, y: f64) -> Result<MpDensity> {
    let sup = mp_support(y)?;
    let point_mass = if y > 1.0 { 1.0 - 1.0 / y } else { 0.0 };
    let inside = x > sup.lower && x < sup.upper;
    let raw = if inside {
        ((sup.upper - x) * (x - sup.lower)).sqrt() / (2.0 * PI)
    } else {
        0.0
    };
    let normalized = if inside && x > 0.0 { raw / (y * x) } else { 0.0 };
    Ok(MpDensity {
        raw,
        normalized,
        point_mass,
    })
}

/// Low-rank reconstruction from a chosen subset of eigenpairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    pub matrix: DMatrix<f64>,
    pub retained: Vec<usize>,
}

impl Denoised {
    /// True when no eigenpair was retained; the matrix is then zero.
    pub fn is_empty(&self) -> bool {
        self.retained.is_empty()
    }
}

/// `sum_{j in indices} lambda_j e_j e_j^T`, symmetrized.
pub fn denoise(eigen: &SymEigen, indices: &[usize]) -> Result<Denoised> {
    let p = eigen.values.len();
    if let Some(bad) = indices.iter().find(|&&j| j >= p) {
        return Err(Error::InvalidArgument(format!("eigen index {bad} out of range 0..{p}")));
    }
    let m = eigen.partial_sum(indices);
    let matrix = (&m + m.transpose()) * 0.5;
    Ok(Denoised {
        matrix,
        retained: indices.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, sym_eigen};

    /// Composite Simpson on `[a, b]`.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    /// Integral over the support after `x = lo + (hi - lo) sin^2 t`, which
    /// removes the square-root and `1/x` endpoint behaviour.
    fn integrate_support(y: f64, normalized: bool) -> f64 {
        let sup = mp_support(y).unwrap();
        let (lo, hi) = (sup.lower, sup.upper);
        let g = |t: f64| {
            let x = lo + (hi - lo) * t.sin().powi(2);
            let dx = 2.0 * (hi - lo) * t.sin() * t.cos();
            let root = (hi - lo) * t.sin() * t.cos();
            let raw = root / (2.0 * PI);
            if normalized {
                if x <= 0.0 {
                    // y = 1 limit at t = 0: raw * dx / (y x) -> 4 cos^2 t / pi
                    return 4.0 * t.cos().powi(2) / PI;
                }
                raw * dx / (y * x)
            } else {
                raw * dx
            }
        };
        simpson(g, 0.0, PI / 2.0, 20_000)
    }

    #[test]
    fn support_reference_values() {
        let s = mp_support(0.767123).unwrap();
        assert!((s.upper - 3.519).abs() < 5e-4);
        assert!((s.lower - 0.0154).abs() < 5e-5);
        let s = mp_support(1.0).unwrap();
        assert_eq!((s.lower, s.upper), (0.0, 4.0));
        let s = mp_support(1e-12).unwrap();
        assert!((s.lower - 1.0).abs() < 1e-5 && (s.upper - 1.0).abs() < 1e-5);
        assert!(mp_support(0.0).is_err());
        assert!(mp_support(-1.0).is_err());
    }

    #[test]
    fn edges_are_zero() {
        let s = mp_support(0.3).unwrap();
        assert_eq!(mp_density(s.lower, 0.3).unwrap().raw, 0.0);
        assert_eq!(mp_density(s.upper, 0.3).unwrap().raw, 0.0);
        assert_eq!(mp_density(s.upper + 1.0, 0.3).unwrap().normalized, 0.0);
        assert_eq!(mp_density(2.0, 2.0).unwrap().point_mass, 0.5);
        assert_eq!(mp_density(1.0, 0.5).unwrap().point_mass, 0.0);
    }

    #[test]
    fn raw_formula_integrates_to_aspect_ratio() {
        for y in [0.25, 0.767123, 1.0, 2.0] {
            let m = integrate_support(y, false);
            assert!((m - y).abs() < 1e-8, "y={y} mass={m}");
        }
    }

    #[test]
    fn normalized_law_has_unit_mass() {
        for y in [0.25, 0.767123, 1.0, 2.0, 4.0] {
            let cont = integrate_support(y, true);
            let atom = mp_density(1.0, y).unwrap().point_mass;
            assert!((cont + atom - 1.0).abs() < 1e-8, "y={y} total={}", cont + atom);
        }
    }

    #[test]
    fn denoise_cases() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
        let e = sym_eigen(&r).unwrap();
        let all = denoise(&e, &[0, 1]).unwrap();
        assert!(max_abs(&(&all.matrix - &r)) < 1e-8);
        let none = denoise(&e, &[]).unwrap();
        assert!(none.is_empty() && none.matrix.iter().all(|v| *v == 0.0));
        let top = denoise(&e, &[0]).unwrap();
        let expect = DMatrix::from_element(2, 2, 0.95);
        assert!(max_abs(&(&top.matrix - expect)) < 1e-12);
        assert!(denoise(&e, &[2]).is_err());
    }

    #[test]
    fn denoising_is_stable() {
        let r = DMatrix::from_fn(5, 5, |i, j| 0.8f64.powi((i as i32 - j as i32).abs()));
        let e = sym_eigen(&r).unwrap();
        let once = denoise(&e, &[0, 1]).unwrap().matrix;
        let twice = denoise(&sym_eigen(&once).unwrap(), &[0, 1]).unwrap().matrix;
        assert!(max_abs(&(&once - &twice)) < 1e-8);
    }
}
