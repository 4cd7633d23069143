//! Parallel Monte Carlo driver. Each path draws from its own stream, so the result
//! does not depend on the thread count.

use rayon::prelude::*;
use supdens_core::coefficients::StableParams;
use supdens_core::density::{Evaluator, ExtCache, Mode};
use supdens_core::oracle::{path_supremum, CmsSampler, EmpiricalCdf, McConfig};
use supdens_core::Result;

pub fn mc_supremum_cdf_par(params: &StableParams, cfg: &McConfig) -> Result<EmpiricalCdf> {
    cfg.validate()?;
    let sampler = CmsSampler::new(params, cfg.steps)?;
    let maxima: Vec<f64> =
        (0..cfg.paths as u64).into_par_iter().map(|p| path_supremum(&sampler, cfg.seed, p, cfg.steps)).collect();
    Ok(EmpiricalCdf::from_maxima(maxima, &cfg.grid, cfg.steps))
}

/// Series CDF on a grid, sharing extended-precision coefficients between points.
pub fn series_cdf(ev: &Evaluator, grid: &[f64], eps: f64) -> Result<Vec<f64>> {
    let mut cache = ExtCache::new();
    grid.iter().map(|&x| ev.cdf_with(x, eps, Mode::Auto, &mut cache).map(|r| r.value)).collect()
}

/// Comparison of an empirical CDF against the series.
#[derive(Clone, Debug, PartialEq)]
pub struct Dominance {
    pub sup_norm: f64,
    /// Largest `F_series - F_emp` in standard errors (floored at one path).
    pub worst_z: f64,
    pub dominated: bool,
}

pub fn dominance(emp: &EmpiricalCdf, f_series: &[f64]) -> Dominance {
    let floor = 1.0 / emp.paths as f64;
    let mut sup = 0.0f64;
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for ((&fe, &se), &fs) in emp.f_emp.iter().zip(&emp.stderr).zip(f_series) {
        sup = sup.max((fe - fs).abs());
        worst = worst.max((fs - fe) / se.max(floor));
        ok &= fe >= fs - 3.0 * se;
    }
    Dominance { sup_norm: sup, worst_z: worst, dominated: ok }
}
