use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

use super::mp::mp_support;

/// Probabilities 0, 0.1, ..., 1 used for the per-matrix quantile summary.
pub const DECILE_PROBS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Empirical spectral distribution `F(x) = #{lambda_i <= x} / n`.
pub fn esd_cdf(eigenvalues: &[f64], x: f64) -> f64 {
    if eigenvalues.is_empty() {
        return 0.0;
    }
    let below = eigenvalues.iter().filter(|&&l| l <= x).count();
    below as f64 / eigenvalues.len() as f64
}

/// Spectrum of a correlation matrix built from `n_obs` rows and `p_dim`
/// columns, with Marchenko-Pastur significance flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// Non-increasing.
    pub eigenvalues: Vec<f64>,
    pub n_obs: usize,
    pub p_dim: usize,
    /// Quantiles at `DECILE_PROBS`, non-decreasing.
    pub quantiles: [f64; 11],
    /// Indices into `eigenvalues` lying strictly outside the MP support.
    pub significant: Vec<usize>,
}

impl SpectralSummary {
    pub fn new(mut eigenvalues: Vec<f64>, n_obs: usize, p_dim: usize) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("spectral summary of no eigenvalues".into()));
        }
        if n_obs == 0 || p_dim == 0 {
            return Err(Error::InvalidArgument("spectral summary needs n_obs, p_dim >= 1".into()));
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("eigenvalues"));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let mut asc = eigenvalues.clone();
        asc.reverse();
        let mut quantiles = [0.0; 11];
        for (q, p) in quantiles.iter_mut().zip(DECILE_PROBS) {
            *q = quantile_sorted(&asc, p);
        }
        let support = mp_support(p_dim as f64 / n_obs as f64)?;
        let significant = eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > support.upper || l < support.lower)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            eigenvalues,
            n_obs,
            p_dim,
            quantiles,
            significant,
        })
    }

    /// Aspect ratio `y = p / n`.
    pub fn aspect(&self) -> f64 {
        self.p_dim as f64 / self.n_obs as f64
    }

    pub fn cdf(&self, x: f64) -> f64 {
        esd_cdf(&self.eigenvalues, x)
    }

    pub fn significant_eigs(&self) -> &[usize] {
        &self.significant
    }

    pub fn significant_count(&self) -> usize {
        self.significant.len()
    }

    pub fn median(&self) -> f64 {
        self.quantiles[5]
    }

    pub fn top(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Fraction of eigenvalues inside the closed MP support.
    pub fn inside_fraction(&self) -> f64 {
        1.0 - self.significant.len() as f64 / self.eigenvalues.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn step_function_values() {
        let e = [0.5, 1.5];
        assert_eq!(esd_cdf(&e, 1.0), 0.5);
        assert_eq!(esd_cdf(&e, 0.1), 0.0);
        assert_eq!(esd_cdf(&e, 1.5), 1.0);
        assert_eq!(esd_cdf(&e, 0.5), 0.5);
        assert_eq!(esd_cdf(&e, f64::INFINITY), 1.0);
    }

    #[test]
    fn matches_counting_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let e: Vec<f64> = (0..20).map(|_| rng.random::<f64>() * 4.0).collect();
        let s = SpectralSummary::new(e.clone(), 50, 20).unwrap();
        for k in 0..100 {
            let x = -0.2 + 4.4 * k as f64 / 99.0;
            let mut count = 0;
            for v in &e {
                if *v <= x {
                    count += 1;
                }
            }
            assert_eq!(s.cdf(x), count as f64 / 20.0);
        }
        assert!(s.quantiles.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(s.quantiles[0], s.eigenvalues[19]);
        assert_eq!(s.quantiles[10], s.eigenvalues[0]);
    }

    #[test]
    fn unit_spectrum_not_significant() {
        let s = SpectralSummary::new(vec![1.0; 10], 20, 10).unwrap();
        assert_eq!(s.significant_count(), 0);
        let s = SpectralSummary::new(vec![5.0, 1.0, 1.0, 0.001], 8, 4).unwrap();
        assert_eq!(s.significant_eigs(), &[0, 3]);
    }

    #[test]
    fn empty_rejected() {
        assert!(SpectralSummary::new(vec![], 10, 3).is_err());
    }
}
