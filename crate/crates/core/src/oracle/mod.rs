//! Independent checks of the series: Monte Carlo, the Mellin transform, its
//! functional equation and its first residue.

pub mod gamma;
pub mod mellin;
pub mod montecarlo;
pub mod quad;

pub use mellin::{MellinPipeline, MellinPoint, PoleFamily, PoleSpec, UPPER_SPLIT};
pub use montecarlo::{mc_supremum_cdf, path_supremum, rho_from_skewness, skewness_from_rho, CmsSampler, EmpiricalCdf, McConfig};
