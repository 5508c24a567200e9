//! Random-matrix tools: empirical spectral distributions, the
//! Marchenko-Pastur law and its support, eigen-denoising, and empirical null
//! distributions for singular and generalized singular values.

mod esd;
mod mp;
mod null;

pub use esd::{esd_cdf, SpectralSummary, DECILE_PROBS};
pub use mp::{denoise, mp_density, mp_support, Denoised, MpDensity, MpSupport};
pub use null::{
    gsv_of_permuted, permutation_gsv_null, simulate_gsv_null, simulate_sv_null, CriticalBand,
    EmpiricalNull, NullKind, PermutationScheme, DEFAULT_LEVEL,
};
