//! The double-series coefficients `a_{m,n}` and `b_{m,n}`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use libm::{floor, lgamma_r, log};
use num_bigint::BigInt;

use crate::diophantine::{classify_l, LClassification, LVerdict, Phase, RealSpec};
use crate::error::{Error, Result};
use crate::sigloc::{SignedLogValue, POLE_TOL};

/// Sine denominators closer than this to zero mark a numerically rational `alpha`.
pub const SINE_TOL: f64 = 1e-14;

/// Default depth for classifying `alpha` at construction.
pub const DEFAULT_CLASS_DEPTH: usize = 40;

/// Default search radius for [`detect_ckl`].
pub const DEFAULT_K_MAX: i64 = 50;

const LN_PI: f64 = 1.1447298858494002;

/// A validated `(alpha, rho)` pair.
#[derive(Clone, Debug)]
pub struct StableParams {
    alpha: RealSpec,
    rho: f64,
    alpha_class: LClassification,
    alpha_f: f64,
    inv_alpha_f: f64,
    ph_alpha: Phase,
    ph_inv_alpha: Phase,
    ph_rho: Phase,
    ph_alpha_rho: Phase,
}

impl StableParams {
    pub fn new(alpha: RealSpec, rho: f64) -> Result<Self> {
        Self::with_depth(alpha, rho, DEFAULT_CLASS_DEPTH)
    }

    /// Validate and classify `alpha` to the given continued-fraction depth.
    pub fn with_depth(alpha: RealSpec, rho: f64, depth: usize) -> Result<Self> {
        let a = alpha.approx();
        if !a.is_finite() || !rho.is_finite() {
            return Err(Error::InvalidParams("alpha and rho must be finite".into()));
        }
        if a == 1.0 {
            return Err(Error::InvalidParams("alpha = 1 is rational".into()));
        }
        let slack = 1e-14;
        if a > 0.0 && a < 1.0 {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::InvalidParams(format!("rho = {rho} must lie in (0, 1) for alpha in (0, 1)")));
            }
        } else if a > 1.0 && a < 2.0 {
            let (lo, hi) = (1.0 - 1.0 / a, 1.0 / a);
            if rho < lo - slack || rho > hi + slack {
                return Err(Error::InvalidParams(format!("rho = {rho} must lie in [{lo}, {hi}] for alpha = {a}")));
            }
        } else {
            return Err(Error::InvalidParams(format!("alpha = {a} must lie in (0, 1) or (1, 2)")));
        }
        let alpha_class = classify_l(&alpha, depth.max(2))?;
        if alpha_class.verdict == LVerdict::Rational {
            return Err(Error::InvalidParams(format!("alpha = {alpha} is rational")));
        }
        let value = alpha.value();
        let inv = value.recip()?;
        let ph_rho = Phase::from_f64(rho);
        // alpha * rho mod 2: rho = M 2^E exactly, so this is a shifted integer product
        let (mant, exp) = dyadic(rho);
        let bits = 384u32;
        let prod = alpha.scaled(bits) * BigInt::from(mant);
        let ph_alpha_rho = Phase::from_scaled(&prod, (bits as i64 - exp) as u32);
        Ok(StableParams {
            alpha_f: a,
            inv_alpha_f: inv.to_f64(),
            ph_alpha: value.phase(),
            ph_inv_alpha: inv.phase(),
            ph_rho,
            ph_alpha_rho,
            alpha,
            rho,
            alpha_class,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_f
    }

    pub fn alpha_spec(&self) -> &RealSpec {
        &self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn inv_alpha(&self) -> f64 {
        self.inv_alpha_f
    }

    pub fn alpha_class(&self) -> &LClassification {
        &self.alpha_class
    }

    /// `alpha in (1, 2)`.
    pub fn upper_regime(&self) -> bool {
        self.alpha_f > 1.0
    }

    /// Phase of `rho + (j - 1)/alpha`, the numerator of the row factor.
    pub fn row_num_phase(&self, j: u64) -> Phase {
        self.ph_rho + self.ph_inv_alpha.mul_u64(j - 1)
    }

    /// Phase of `j/alpha`.
    pub fn row_den_phase(&self, j: u64) -> Phase {
        self.ph_inv_alpha.mul_u64(j)
    }

    /// Phase of `alpha (rho + j - 1)`.
    pub fn col_num_phase(&self, j: u64) -> Phase {
        self.ph_alpha_rho + self.ph_alpha.mul_u64(j - 1)
    }

    /// Phase of `alpha j`.
    pub fn col_den_phase(&self, j: u64) -> Phase {
        self.ph_alpha.mul_u64(j)
    }

    pub fn phase_alpha(&self) -> Phase {
        self.ph_alpha
    }

    pub fn phase_inv_alpha(&self) -> Phase {
        self.ph_inv_alpha
    }

    pub fn phase_rho(&self) -> Phase {
        self.ph_rho
    }
}

/// `v = mant * 2^exp` exactly.
fn dyadic(v: f64) -> (i64, i64) {
    if v == 0.0 {
        return (0, 0);
    }
    let b = v.abs().to_bits();
    let raw = ((b >> 52) & 0x7ff) as i64;
    let (m, e) = if raw == 0 { (b & ((1 << 52) - 1), -1074) } else { ((b & ((1 << 52) - 1)) | (1 << 52), raw - 1075) };
    (if v < 0.0 { -(m as i64) } else { m as i64 }, e)
}

fn ln_sin(ph: Phase) -> SignedLogValue {
    let (s, mag) = ph.sinpi();
    if s == 0 {
        SignedLogValue::ZERO
    } else {
        SignedLogValue { sign: s, logabs: log(mag) }
    }
}

/// Cumulative row products `R_0..=R_m`, `R_j = prod sin(pi(rho + (i-1)/alpha)) / sin(pi i/alpha)`.
pub fn row_products(params: &StableParams, m: u64) -> Result<Vec<SignedLogValue>> {
    let mut out = Vec::with_capacity(m as usize + 1);
    let mut acc = SignedLogValue::ONE;
    out.push(acc);
    for j in 1..=m {
        let den = params.row_den_phase(j);
        if den.dist_to_integer() < SINE_TOL {
            return Err(Error::NearRationalAlpha { j });
        }
        acc = acc * ln_sin(params.row_num_phase(j)) * ln_sin(den).recip()?;
        out.push(acc);
    }
    Ok(out)
}

/// Cumulative column products `C_0..=C_n`, `C_j = prod sin(pi alpha(rho + i - 1)) / sin(pi alpha i)`.
pub fn col_products(params: &StableParams, n: u64) -> Result<Vec<SignedLogValue>> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = SignedLogValue::ONE;
    out.push(acc);
    for j in 1..=n {
        let den = params.col_den_phase(j);
        if den.dist_to_integer() < SINE_TOL {
            return Err(Error::NearRationalAlpha { j });
        }
        acc = acc * ln_sin(params.col_num_phase(j)) * ln_sin(den).recip()?;
        out.push(acc);
    }
    Ok(out)
}

/// `1/Gamma(z)` where `ph` is `z mod 2` held exactly; zero at the poles.
fn recip_gamma_phase(z: f64, ph: Phase) -> SignedLogValue {
    if z < 0.5 && ph.dist_to_integer() < POLE_TOL {
        return SignedLogValue::ZERO;
    }
    if z > 0.0 {
        let (lg, _) = lgamma_r(z);
        return SignedLogValue { sign: 1, logabs: -lg };
    }
    // 1/Gamma(z) = sin(pi z) Gamma(1 - z) / pi
    let s = ln_sin(ph);
    let (lg, _) = lgamma_r(1.0 - z);
    SignedLogValue { sign: s.sign, logabs: s.logabs + lg - LN_PI }
}

/// Argument `1 - rho - n - m/alpha` and its phase.
fn a_gamma_arg(params: &StableParams, m: u64, n: u64) -> (f64, Phase) {
    let z = 1.0 - params.rho - n as f64 - m as f64 * params.inv_alpha_f;
    let ph = Phase::ONE - params.ph_rho - Phase::integer(n as i64) - params.ph_inv_alpha.mul_u64(m);
    (z, ph)
}

/// Argument `-m - alpha n` and its phase.
fn b_gamma_arg(params: &StableParams, m: u64, n: u64) -> (f64, Phase) {
    let z = -(m as f64) - params.alpha_f * n as f64;
    let ph = -(Phase::integer(m as i64) + params.ph_alpha.mul_u64(n));
    (z, ph)
}

fn parity(m: u64, n: u64) -> i8 {
    if (m + n) % 2 == 0 {
        1
    } else {
        -1
    }
}

fn a_from_products(params: &StableParams, m: u64, n: u64, r: SignedLogValue, c: SignedLogValue) -> SignedLogValue {
    let (z, ph) = a_gamma_arg(params, m, n);
    let g1 = recip_gamma_phase(z, ph);
    let (lg, _) = lgamma_r(params.alpha_f * params.rho + m as f64 + params.alpha_f * n as f64);
    let g2 = SignedLogValue { sign: 1, logabs: -lg };
    SignedLogValue::new(parity(m, n), 0.0) * g1 * g2 * r * c
}

fn b_from_products(params: &StableParams, m: u64, n: u64, r: SignedLogValue, c: SignedLogValue) -> Result<SignedLogValue> {
    let (z, ph) = b_gamma_arg(params, m, n);
    if ph.dist_to_integer() < POLE_TOL {
        return Err(Error::GammaPole(libm::round(-z) as u64));
    }
    let g1 = recip_gamma_phase(z, ph);
    let (lg, _) = lgamma_r(1.0 + n as f64 + m as f64 * params.inv_alpha_f);
    let g2 = SignedLogValue { sign: 1, logabs: -lg };
    Ok(SignedLogValue::new(parity(m, n), 0.0) * g1 * g2 * r * c)
}

/// `a_{m,n}`; exactly zero when `1 - rho - n - m/alpha` sits on a gamma pole.
pub fn coeff_a(params: &StableParams, m: u64, n: u64) -> Result<SignedLogValue> {
    let r = row_products(params, m)?;
    let c = col_products(params, n)?;
    Ok(a_from_products(params, m, n, r[m as usize], c[n as usize]))
}

/// `b_{m,n}` for `n >= 1`, from the form with the common gamma pair cancelled.
pub fn coeff_b(params: &StableParams, m: u64, n: u64) -> Result<SignedLogValue> {
    if n == 0 {
        return Err(Error::Domain("b_{m,n} needs n >= 1".into()));
    }
    let r = row_products(params, m)?;
    let c = col_products(params, n)?;
    b_from_products(params, m, n, r[m as usize], c[n as usize])
}

/// `b_{m,n}` as the gamma ratio times `a_{m,n}`; fails where that product is `0 * inf`.
pub fn coeff_b_uncancelled(params: &StableParams, m: u64, n: u64) -> Result<SignedLogValue> {
    let a = coeff_a(params, m, n)?;
    let (z, ph) = a_gamma_arg(params, m, n);
    if a.is_zero() {
        return Err(Error::GammaPole(libm::round(-z) as u64));
    }
    let g_a1 = recip_gamma_phase(z, ph).recip()?;
    let (lg, _) = lgamma_r(params.alpha_f * params.rho + m as f64 + params.alpha_f * n as f64);
    let g_a2 = SignedLogValue { sign: 1, logabs: lg };
    let (zb, phb) = b_gamma_arg(params, m, n);
    let g_b1 = recip_gamma_phase(zb, phb);
    let (lgb, _) = lgamma_r(1.0 + n as f64 + m as f64 * params.inv_alpha_f);
    let g_b2 = SignedLogValue { sign: 1, logabs: -lgb };
    Ok(a * g_a1 * g_a2 * g_b1 * g_b2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoeffKind {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableEntry {
    pub m: u32,
    pub n: u32,
    /// Power of `x` carried by the entry in its series:
    /// `m + alpha n` for `a_{m,n}`, `m + alpha (n - 1)` for `b_{m,n}`.
    pub power: f64,
    /// `ceil(power)`; shell `k` holds powers in `(k - 1, k]`.
    pub shell: u32,
    pub value: SignedLogValue,
}

/// Coefficients over the triangle `power <= T`, ordered by power.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    pub params: StableParams,
    pub kind: CoeffKind,
    pub t_bound: f64,
    pub entries: Vec<TableEntry>,
    pub row_sin_cache: Vec<SignedLogValue>,
    pub col_sin_cache: Vec<SignedLogValue>,
    index: BTreeMap<(u32, u32), usize>,
    shell_starts: Vec<usize>,
}

impl CoefficientTable {
    pub fn get(&self, m: u32, n: u32) -> Option<SignedLogValue> {
        self.index.get(&(m, n)).map(|i| self.entries[*i].value)
    }

    /// Position of `(m, n)` in `entries`.
    pub fn index_of(&self, m: u32, n: u32) -> Option<usize> {
        self.index.get(&(m, n)).copied()
    }

    /// Positions in `entries` of shell `k`.
    pub fn shell_range(&self, k: usize) -> core::ops::Range<usize> {
        match (self.shell_starts.get(k), self.shell_starts.get(k + 1)) {
            (Some(a), Some(b)) => *a..*b,
            _ => 0..0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of shells (the last one possibly partial).
    pub fn shell_count(&self) -> usize {
        self.shell_starts.len().saturating_sub(1)
    }

    /// Entries in shell `k`.
    pub fn shell(&self, k: usize) -> &[TableEntry] {
        &self.entries[self.shell_range(k)]
    }
}

/// All coefficients with power at most `t`.
pub fn build_table(params: &StableParams, kind: CoeffKind, t: f64) -> Result<CoefficientTable> {
    if !(t >= 0.0) {
        return Err(Error::Domain("T must be non-negative".into()));
    }
    let alpha = params.alpha_f;
    let m_max = floor(t) as u64;
    let n_max = floor(t / alpha) as u64 + if kind == CoeffKind::B { 1 } else { 0 };
    let rows = row_products(params, m_max)?;
    let cols = col_products(params, n_max)?;
    let mut entries = Vec::new();
    for m in 0..=m_max {
        let n_lo = if kind == CoeffKind::B { 1 } else { 0 };
        for n in n_lo..=n_max {
            let power = m as f64 + alpha * (n - n_lo) as f64;
            if power > t {
                break;
            }
            let value = match kind {
                CoeffKind::A => a_from_products(params, m, n, rows[m as usize], cols[n as usize]),
                CoeffKind::B => b_from_products(params, m, n, rows[m as usize], cols[n as usize])?,
            };
            let shell = libm::ceil(power) as u32;
            entries.push(TableEntry { m: m as u32, n: n as u32, power, shell, value });
        }
    }
    entries.sort_by(|a, b| a.power.partial_cmp(&b.power).unwrap_or(core::cmp::Ordering::Equal).then(a.m.cmp(&b.m)));
    let index = entries.iter().enumerate().map(|(i, e)| ((e.m, e.n), i)).collect();
    let mut shell_starts = Vec::new();
    let mut i = 0;
    let last_shell = entries.last().map(|e| e.shell).unwrap_or(0);
    for k in 0..=last_shell {
        shell_starts.push(i);
        while i < entries.len() && entries[i].shell == k {
            i += 1;
        }
    }
    shell_starts.push(entries.len());
    Ok(CoefficientTable {
        params: params.clone(),
        kind,
        t_bound: t,
        entries,
        row_sin_cache: rows,
        col_sin_cache: cols,
        index,
        shell_starts,
    })
}

/// How close the sine denominators come to zero up to `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    /// `(min |sin(pi j/alpha)|, argmin j)` over `1 <= j <= T`.
    pub min_sin_inv_alpha: (f64, u64),
    /// `(min |sin(pi alpha j)|, argmin j)` over `1 <= j <= T/alpha`.
    pub min_sin_alpha: (f64, u64),
    /// `log10` of the worst combined denominator amplification.
    pub amplification_log10: f64,
    pub verdict: LVerdict,
    /// Amplification beyond `10^8`.
    pub severe: bool,
}

pub fn condition_report(params: &StableParams, t: f64) -> ConditionReport {
    let scan = |count: u64, f: &dyn Fn(u64) -> Phase| {
        let mut best = (f64::INFINITY, 0u64);
        for j in 1..=count {
            let (_, mag) = f(j).sinpi();
            if mag < best.0 {
                best = (mag, j);
            }
        }
        best
    };
    let n1 = floor(t).max(1.0) as u64;
    let n2 = floor(t / params.alpha_f).max(1.0) as u64;
    let s1 = scan(n1, &|j| params.row_den_phase(j));
    let s2 = scan(n2, &|j| params.col_den_phase(j));
    let amp = -libm::log10(s1.0) - libm::log10(s2.0);
    ConditionReport {
        min_sin_inv_alpha: s1,
        min_sin_alpha: s2,
        amplification_log10: amp,
        verdict: params.alpha_class.verdict,
        severe: amp > 8.0,
    }
}

/// Membership in `rho + k = l/alpha` for some small `(k, l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CklTag {
    pub in_class: bool,
    pub k: i64,
    pub l: i64,
}

/// Search `|k| <= k_max`, `1 <= |l| <= 2(k_max + 1)`, ordered by `|k|`, then `|l|`, positive first.
pub fn detect_ckl(params: &StableParams, k_max: i64) -> CklTag {
    let bits = 192u32;
    let inv = params.alpha.value().recip().expect("alpha is nonzero").scaled(bits);
    let (mant, exp) = dyadic(params.rho);
    let rho_fixed = BigInt::from(mant) << (bits as i64 + exp) as usize;
    let one = BigInt::from(1u8) << bits as usize;
    let l_max = 2 * (k_max + 1);
    let tol = 1e-12;
    for ka in 0..=k_max {
        let ks: &[i64] = if ka == 0 { &[0] } else { &[ka, -ka] };
        for &k in ks {
            for la in 1..=l_max {
                for l in [la, -la] {
                    let diff = &rho_fixed + &one * BigInt::from(k) - &inv * BigInt::from(l);
                    if crate::diophantine::real::fixed_to_f64(&diff, bits).abs() <= tol {
                        return CklTag { in_class: true, k, l };
                    }
                }
            }
        }
    }
    CklTag { in_class: false, k: 0, l: 0 }
}
