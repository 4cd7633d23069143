//! Mellin transform `M(s) = E[S_1^{s-1}]` of the computed density.
//!
//! `M(s)` splits at `lo < hi`: below `lo` the `a`-series and above `hi` the
//! `b`-series are integrated term by term, and the middle is done by
//! Gauss-Legendre quadrature of the density. The term-wise pieces are
//! meromorphic in `s`, which gives the continuation past the strip.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::gamma::gamma;
use super::quad::gauss_legendre;
use crate::coefficients::{coeff_a, coeff_b, CoeffKind, CoefficientTable};
use crate::density::{Evaluator, ExtCache, Mode, LOOKAHEAD};
use crate::error::{Error, Result};
use crate::sigloc::SignedLogValue;

/// Upper split for `alpha in (1, 2)`.
pub const UPPER_SPLIT: f64 = 10.0;

const GL_POINTS: usize = 20;
const SAMPLE_EPS: f64 = 1e-13;
/// Agreement required between the last two quadrature levels at `s = 1`.
const QUAD_TOL: f64 = 1e-11;
const MAX_LEVELS: usize = 6;
/// Guard distance from poles and zeros of the gamma and sine factors.
pub const SINGULAR_GUARD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MellinPoint {
    pub s: Complex64,
    pub value: Complex64,
    /// Absolute error estimate.
    pub est_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoleFamily {
    /// `s = m + alpha n`, residue `-b_{m-1,n}`.
    Plus,
    /// `s = 1 - alpha rho - m - alpha n`, residue `a_{m,n}`.
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoleSpec {
    pub family: PoleFamily,
    pub m: u32,
    pub n: u32,
    pub location: f64,
    pub residue_ref: SignedLogValue,
}

impl PoleSpec {
    pub fn minus(ev: &Evaluator, m: u32, n: u32) -> Result<Self> {
        let p = ev.params();
        Ok(PoleSpec {
            family: PoleFamily::Minus,
            m,
            n,
            location: 1.0 - p.alpha() * p.rho() - m as f64 - p.alpha() * n as f64,
            residue_ref: coeff_a(p, m as u64, n as u64)?,
        })
    }

    pub fn plus(ev: &Evaluator, m: u32, n: u32) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Domain("plus-family poles need m >= 1 and n >= 1".into()));
        }
        let p = ev.params();
        Ok(PoleSpec {
            family: PoleFamily::Plus,
            m,
            n,
            location: m as f64 + p.alpha() * n as f64,
            residue_ref: coeff_b(p, m as u64 - 1, n as u64)?.neg(),
        })
    }
}

/// Density samples on nested Gauss-Legendre panels, shared by every `s`.
#[derive(Clone, Debug)]
pub struct MellinPipeline<'a> {
    ev: &'a Evaluator,
    lo: f64,
    hi: f64,
    /// `(x, w)` of the finest and the previous level, with `p(x)` folded into `w`.
    fine: Vec<(f64, f64)>,
    coarse: Vec<(f64, f64)>,
    /// Absolute quadrature error of the middle mass.
    sample_err: f64,
}

impl<'a> MellinPipeline<'a> {
    /// Split points: `[1, 10]` for `alpha > 1`; for `alpha < 1` the upper point is 1 and the lower
    /// one is where the small-`x` expansion reaches the sampling tolerance.
    pub fn new(ev: &'a Evaluator) -> Result<Self> {
        let (lo, hi) = if ev.params().upper_regime() {
            (1.0, UPPER_SPLIT)
        } else {
            (ev.total_mass(SAMPLE_EPS)?.split, 1.0)
        };
        Self::with_split(ev, lo, hi)
    }

    pub fn with_split(ev: &'a Evaluator, lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Domain("split points must satisfy 0 < lo < hi".into()));
        }
        let rule = gauss_legendre(GL_POINTS);
        let mut cache = ExtCache::new();
        let mut panels = 2usize;
        let mut coarse = sample_level(ev, &rule, lo, hi, panels, &mut cache)?;
        let mut fine;
        let mut level = 1;
        loop {
            panels *= 2;
            fine = sample_level(ev, &rule, lo, hi, panels, &mut cache)?;
            let diff = (mass(&fine) - mass(&coarse)).abs();
            level += 1;
            if diff <= QUAD_TOL || level >= MAX_LEVELS {
                break;
            }
            coarse = fine;
        }
        let sample_err = fine.iter().map(|p| p.1.abs()).sum::<f64>() * SAMPLE_EPS;
        Ok(MellinPipeline { ev, lo, hi, fine, coarse, sample_err })
    }

    pub fn split(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Open strip `(1 - alpha rho, 1 + alpha)`.
    pub fn strip(&self) -> (f64, f64) {
        let p = self.ev.params();
        (1.0 - p.alpha() * p.rho(), 1.0 + p.alpha())
    }

    /// `M(s)` for `s` inside the strip.
    pub fn mellin(&self, s: Complex64) -> Result<MellinPoint> {
        let (lo, hi) = self.strip();
        if !(s.re > lo && s.re < hi) {
            return Err(Error::OutsideStrip { re: s.re, lo, hi });
        }
        self.continued(s)
    }

    /// Meromorphic continuation of `M(s)`; equal to [`MellinPipeline::mellin`] inside the strip.
    pub fn continued(&self, s: Complex64) -> Result<MellinPoint> {
        let p = self.ev.params();
        let ar = p.alpha() * p.rho();
        let (head, head_err) = termwise(self.ev.table(CoeffKind::A), self.lo, ar - 1.0, 1.0, s, p.upper_regime())?;
        let (tail, tail_err) = termwise(self.ev.table(CoeffKind::B), self.hi, 1.0 + p.alpha(), -1.0, s, !p.upper_regime())?;
        let mid_f = middle(&self.fine, s);
        let mid_c = middle(&self.coarse, s);
        let scale = libm::pow(self.hi, (s.re - 1.0).max(0.0)) + libm::pow(self.lo, (s.re - 1.0).min(0.0));
        let est = head_err + tail_err + (mid_f - mid_c).norm() + self.sample_err * scale;
        Ok(MellinPoint { s, value: head + mid_f + tail, est_error: est })
    }

    /// `|LHS - RHS| / (|LHS| + |RHS|)` for
    /// `M(s)/(G(s) G((1-s)/a)) = -M(s+1)/(G(s+1) G(-s/a)) sin(pi(1-s)/a) / sin(pi(a rho - 1 + s)/a)`.
    /// `s` must lie in the strip; `s + 1` may lie beyond it.
    pub fn functional_eq_residual(&self, s: Complex64) -> Result<f64> {
        let p = self.ev.params();
        let a = p.alpha();
        let one = Complex64::new(1.0, 0.0);
        let u = (one - s) / a;
        let v = (s + (a * p.rho() - 1.0)) / a;
        let poles = [("Gamma(s)", s), ("Gamma((1-s)/alpha)", u), ("Gamma(s+1)", s + 1.0), ("Gamma(-s/alpha)", -s / a)];
        for (factor, z) in poles {
            if z.re < 0.5 {
                guard(factor, z)?;
            }
        }
        guard("sin(pi(1-s)/alpha)", u)?;
        guard("sin(pi(alpha rho - 1 + s)/alpha)", v)?;
        let m0 = self.mellin(s)?;
        let m1 = self.continued(s + 1.0)?;
        let pi = core::f64::consts::PI;
        let lhs = m0.value / (gamma(s) * gamma(u));
        let rhs = -m1.value / (gamma(s + 1.0) * gamma(-s / a)) * (u * pi).sin() / (v * pi).sin();
        Ok((lhs - rhs).norm() / (lhs.norm() + rhs.norm()))
    }

    /// Richardson extrapolation of `(s - s0) M(s)` from `s = s0 + delta`, `delta in {0.1, 0.05, 0.025}`.
    pub fn residue_estimate(&self, pole: &PoleSpec) -> Result<f64> {
        let f = |d: f64| -> Result<f64> {
            let s = Complex64::new(pole.location + d, 0.0);
            let m = if pole.family == PoleFamily::Minus && pole.m == 0 && pole.n == 0 {
                self.mellin(s)?
            } else {
                self.continued(s)?
            };
            Ok(d * m.value.re)
        };
        let (f1, f2, f4) = (f(0.1)?, f(0.05)?, f(0.025)?);
        let r1 = 2.0 * f2 - f1;
        let r2 = 2.0 * f4 - f2;
        Ok((4.0 * r2 - r1) / 3.0)
    }

    /// Raw `(s - s0) M(s)` values behind [`MellinPipeline::residue_estimate`].
    pub fn residue_samples(&self, location: f64) -> Result<[(f64, f64); 3]> {
        let mut out = [(0.0, 0.0); 3];
        for (slot, d) in out.iter_mut().zip([0.1, 0.05, 0.025]) {
            let m = self.continued(Complex64::new(location + d, 0.0))?;
            *slot = (d, d * m.value.re);
        }
        Ok(out)
    }
}

fn guard(factor: &'static str, z: Complex64) -> Result<()> {
    let k = libm::round(z.re);
    let distance = Complex64::new(z.re - k, z.im).norm();
    if distance < SINGULAR_GUARD {
        return Err(Error::NearSingularPoint { factor, distance });
    }
    Ok(())
}

fn sample_level(ev: &Evaluator, rule: &[(f64, f64)], lo: f64, hi: f64, panels: usize, cache: &mut ExtCache) -> Result<Vec<(f64, f64)>> {
    // panels are uniform in ln x; dx = x dt
    let (a, b) = (libm::log(lo), libm::log(hi));
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.len());
    for k in 0..panels {
        let c = a + h * (k as f64 + 0.5);
        for &(t, w) in rule {
            let x = libm::exp(c + 0.5 * h * t);
            let p = ev.density_with(x, SAMPLE_EPS, Mode::Auto, cache)?.value;
            out.push((x, 0.5 * h * w * x * p));
        }
    }
    Ok(out)
}

fn mass(level: &[(f64, f64)]) -> f64 {
    level.iter().map(|p| p.1).sum()
}

fn middle(level: &[(f64, f64)], s: Complex64) -> Complex64 {
    let sm1 = s - 1.0;
    level.iter().map(|&(x, w)| (sm1 * libm::log(x)).exp() * w).sum()
}

/// `sum coef * X^{sigma z} / z` with `z = c + power + sigma s`, `sigma = +-1`: the integral of the series
/// over `[0, X]` (`sigma = 1`, `a`-series) or `[X, inf)` (`sigma = -1`, `b`-series).
/// A convergent sum runs until two shells are negligible; otherwise it stops before its
/// smallest shell. Returns the sum and an absolute error estimate.
fn termwise(table: &CoefficientTable, x: f64, c: f64, sigma: f64, s: Complex64, convergent: bool) -> Result<(Complex64, f64)> {
    let ln_x = libm::log(x);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut shells: Vec<(f64, Complex64)> = Vec::new();
    let mut small = 0;
    let mut best: Option<usize> = None;
    for k in 0..table.shell_count() {
        let mut part = Complex64::new(0.0, 0.0);
        let mut abs = 0.0;
        for e in table.shell(k) {
            if e.value.is_zero() {
                continue;
            }
            let z = s * sigma + (c + e.power);
            if z.norm() < SINGULAR_GUARD {
                return Err(Error::NearSingularPoint { factor: "series pole", distance: z.norm() });
            }
            let mag = SignedLogValue { sign: e.value.sign, logabs: e.value.logabs + sigma * (c + e.power) * ln_x };
            let t = (s * ln_x).exp() * mag.to_f64() / z;
            abs += t.norm();
            part += t;
        }
        shells.push((abs, sum));
        sum += part;
        if k == 0 {
            continue;
        }
        if convergent {
            small = if abs <= 1e-17 * sum.norm() { small + 1 } else { 0 };
            if small >= 2 {
                return Ok((sum, abs + 1e-15 * sum.norm()));
            }
        } else {
            match best {
                Some(b) if shells[b].0 <= abs => {
                    if k - b >= LOOKAHEAD {
                        break;
                    }
                }
                _ => best = Some(k),
            }
        }
    }
    if convergent {
        let last = shells.last().map(|s| s.0).unwrap_or(0.0);
        return Ok((sum, last + 1e-15 * sum.norm()));
    }
    let b = best.unwrap_or(shells.len() - 1).max(1);
    // shells[b].1 is the sum of shells before b
    Ok((shells[b].1, shells[b].0 + 1e-15 * shells[b].1.norm()))
}
