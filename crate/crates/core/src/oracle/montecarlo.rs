//! Random-walk simulation of the supremum.
//!
//! Increments are Chambers-Mulholland-Stuck draws for the law with
//! `E exp(i z X_1) = exp(-|z|^alpha exp(pi i alpha (1/2 - rho) sgn z))`, i.e. skewness
//! `beta = tan(pi alpha (rho - 1/2)) / tan(pi alpha / 2)` and scale `cos(pi alpha (rho - 1/2))^{1/alpha}`.
//! The walk only sees the process at grid times, so its maximum is stochastically
//! smaller than `S_1`.

use alloc::vec::Vec;

use libm::{atan, cos, exp, log, pow, sin, tan};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::coefficients::StableParams;
use crate::error::{Error, Result};

const PI: f64 = core::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub grid: Vec<f64>,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 1000 {
            return Err(Error::Domain(alloc::format!("paths = {} must be at least 1000", self.paths)));
        }
        if self.steps < 100 {
            return Err(Error::Domain(alloc::format!("steps = {} must be at least 100", self.steps)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    pub grid: Vec<f64>,
    pub f_emp: Vec<f64>,
    /// Binomial standard error `sqrt(F (1 - F) / paths)`.
    pub stderr: Vec<f64>,
    pub paths: usize,
    pub steps: usize,
}

impl EmpiricalCdf {
    /// Empirical CDF of `maxima` on `grid`.
    pub fn from_maxima(mut maxima: Vec<f64>, grid: &[f64], steps: usize) -> Self {
        maxima.sort_by(|a, b| a.total_cmp(b));
        let n = maxima.len() as f64;
        let mut f_emp = Vec::with_capacity(grid.len());
        let mut stderr = Vec::with_capacity(grid.len());
        for &x in grid {
            let count = maxima.partition_point(|m| *m <= x) as f64;
            let f = count / n;
            f_emp.push(f);
            stderr.push(libm::sqrt(f * (1.0 - f) / n));
        }
        EmpiricalCdf { grid: grid.to_vec(), f_emp, stderr, paths: maxima.len(), steps }
    }
}

/// Skewness implied by `rho`.
pub fn skewness_from_rho(alpha: f64, rho: f64) -> Result<f64> {
    let beta = tan(PI * alpha * (rho - 0.5)) / tan(PI * alpha / 2.0);
    if !(beta.abs() <= 1.0 + 1e-12) {
        return Err(Error::SkewnessBridge { beta });
    }
    Ok(beta.clamp(-1.0, 1.0))
}

/// `rho = 1/2 + atan(beta tan(pi alpha / 2)) / (pi alpha)`.
pub fn rho_from_skewness(alpha: f64, beta: f64) -> f64 {
    0.5 + atan(beta * tan(PI * alpha / 2.0)) / (PI * alpha)
}

/// Stable increments for a walk of `steps` steps over `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmsSampler {
    alpha: f64,
    shift: f64,
    factor: f64,
}

impl CmsSampler {
    pub fn new(params: &StableParams, steps: usize) -> Result<Self> {
        let alpha = params.alpha();
        let beta = skewness_from_rho(alpha, params.rho())?;
        let t = tan(PI * alpha / 2.0);
        let shift = atan(beta * t) / alpha;
        let cms_scale = pow(1.0 + beta * beta * t * t, 1.0 / (2.0 * alpha));
        let law_scale = pow(cos(PI * alpha * (params.rho() - 0.5)), 1.0 / alpha);
        let step_scale = pow(steps as f64, -1.0 / alpha);
        Ok(CmsSampler { alpha, shift, factor: cms_scale * law_scale * step_scale })
    }

    /// One increment from two uniforms in `(0, 1)`.
    pub fn draw(&self, u1: f64, u2: f64) -> f64 {
        let a = self.alpha;
        let u = PI * (u1 - 0.5);
        let w = -log(u2);
        let au = a * (u + self.shift);
        let log_part = -log(cos(u)) / a + (1.0 - a) / a * (log(cos(u - au)) - log(w));
        self.factor * sin(au) * exp(log_part)
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Maximum over `k <= steps` of the walk (including 0) for one path; the stream depends
/// only on `(seed, path)`.
pub fn path_supremum(sampler: &CmsSampler, seed: u64, path: u64, steps: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    let mut s = 0.0f64;
    let mut best = 0.0f64;
    for _ in 0..steps {
        let u1 = uniform(&mut rng);
        let u2 = uniform(&mut rng);
        s += sampler.draw(u1, u2);
        if s > best {
            best = s;
        }
    }
    best
}

/// Serial driver.
pub fn mc_supremum_cdf(params: &StableParams, cfg: &McConfig) -> Result<EmpiricalCdf> {
    cfg.validate()?;
    let sampler = CmsSampler::new(params, cfg.steps)?;
    let maxima = (0..cfg.paths as u64).map(|p| path_supremum(&sampler, cfg.seed, p, cfg.steps)).collect();
    Ok(EmpiricalCdf::from_maxima(maxima, &cfg.grid, cfg.steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::RealSpec;

    #[test]
    fn bridge_round_trip() {
        for (alpha, rho) in [(1.4, 0.5), (1.5, 0.4), (0.7, 0.4), (0.5, 0.9)] {
            let beta = skewness_from_rho(alpha, rho).unwrap();
            assert!((rho_from_skewness(alpha, beta) - rho).abs() < 1e-14);
        }
        assert_eq!(skewness_from_rho(1.4, 0.5).unwrap(), 0.0);
        assert!(matches!(skewness_from_rho(1.5, 0.2), Err(Error::SkewnessBridge { .. })));
    }

    #[test]
    fn positivity_fraction_matches_rho() {
        let params = StableParams::new(RealSpec::sqrt(2).unwrap().reciprocal().unwrap(), 0.4).unwrap();
        let sampler = CmsSampler::new(&params, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let pos = (0..n).filter(|_| sampler.draw(uniform(&mut rng), uniform(&mut rng)) > 0.0).count();
        let f = pos as f64 / n as f64;
        assert!((f - 0.4).abs() < 4.0 * libm::sqrt(0.24 / n as f64), "{f}");
    }

    #[test]
    fn symmetric_walk_stays_negative_with_sparre_andersen_probability() {
        // P(S_1, ..., S_n <= 0) = C(2n, n) / 4^n for symmetric continuous steps
        let params = StableParams::new(RealSpec::sqrt(2).unwrap(), 0.5).unwrap();
        let steps = 100;
        let cfg = McConfig { paths: 40_000, steps, seed: 11, grid: alloc::vec![1e-9] };
        let emp = mc_supremum_cdf(&params, &cfg).unwrap();
        let mut exact = 1.0;
        for k in 1..=steps {
            exact *= (2 * k - 1) as f64 / (2 * k) as f64;
        }
        assert!((emp.f_emp[0] - exact).abs() <= 4.0 * emp.stderr[0], "{} vs {exact}", emp.f_emp[0]);
    }

    #[test]
    fn deterministic_and_path_local() {
        let params = StableParams::new(RealSpec::sqrt(2).unwrap(), 0.5).unwrap();
        let cfg = McConfig { paths: 1000, steps: 100, seed: 3, grid: alloc::vec![0.5, 1.0, 2.0] };
        assert_eq!(mc_supremum_cdf(&params, &cfg).unwrap(), mc_supremum_cdf(&params, &cfg).unwrap());
        let sampler = CmsSampler::new(&params, 100).unwrap();
        let a = path_supremum(&sampler, 3, 17, 100);
        assert_eq!(a.to_bits(), path_supremum(&sampler, 3, 17, 100).to_bits());
        assert_ne!(a.to_bits(), path_supremum(&sampler, 3, 18, 100).to_bits());
        assert!(McConfig { paths: 10, ..cfg.clone() }.validate().is_err());
        assert!(McConfig { steps: 10, ..cfg }.validate().is_err());
    }
}
