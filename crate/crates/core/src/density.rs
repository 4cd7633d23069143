//! Density, distribution function and quantiles of the supremum `S_1`.
//!
//! Two double series are available. With `y = x` the `a`-series
//! `x^{alpha rho - 1} sum a_{m,n} x^{m + alpha n}` converges for `alpha in (1, 2)`
//! and is the small-`x` expansion otherwise; with `y = 1/x` the `b`-series
//! `x^{-1-alpha} sum b_{m,n+1} x^{-m - alpha n}` converges for `alpha in (0, 1)`
//! and is the large-`x` expansion otherwise.

use alloc::vec::Vec;

use astro_float::BigFloat;
use libm::{exp, fabs, log, log10, sqrt};

use crate::coefficients::{build_table, CoeffKind, CoefficientTable, StableParams};
use crate::diophantine::LVerdict;
use crate::error::{Error, Result};
use crate::sigloc::ext::{to_slv, ExtContext};
use crate::sigloc::{Accumulator, SignedLogValue};

/// Largest shell bound used by any summation.
pub const T_MAX: f64 = 400.0;

/// Shells examined past the smallest one before an asymptotic sum is cut.
pub const LOOKAHEAD: usize = 15;

const MAX_EXT_DIGITS: u32 = 2000;
const F64_EPS: f64 = f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Auto,
    Convergent,
    Asymptotic,
}

impl core::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Mode::Auto),
            "convergent" => Ok(Mode::Convergent),
            "asymptotic" => Ok(Mode::Asymptotic),
            _ => Err(Error::Parse(alloc::format!("unknown mode `{s}`"))),
        }
    }
}

/// Which expansion an asymptotic evaluation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Expansion {
    /// `x -> 0`, the `a`-series.
    Small,
    /// `x -> infinity`, the `b`-series.
    Large,
}

impl Expansion {
    fn kind(self) -> CoeffKind {
        match self {
            Expansion::Small => CoeffKind::A,
            Expansion::Large => CoeffKind::B,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeriesMode {
    Convergent,
    Asymptotic,
}

impl SeriesMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SeriesMode::Convergent => "convergent",
            SeriesMode::Asymptotic => "asymptotic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    NotConverged,
    AsymptoticFloor,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::NotConverged => "NotConverged",
            Status::AsymptoticFloor => "AsymptoticFloor",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesResult {
    pub value: f64,
    pub mode: SeriesMode,
    /// Which coefficient family was summed.
    pub kind: CoeffKind,
    /// Upper end of the last shell summed.
    pub t_used: f64,
    pub terms_used: usize,
    /// Estimated relative error of `value`.
    pub est_error: f64,
    pub status: Status,
    pub peak_log10_term: f64,
    /// Decimal digits of the extended re-run, if one was needed.
    pub ext_digits: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Quantity {
    Density,
    Cdf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Policy {
    Convergent,
    Asymptotic,
}

/// A raw series sum before the outer power of `x` is applied.
#[derive(Clone, Copy, Debug)]
struct RawSum {
    sum: SignedLogValue,
    /// Absolute error estimate of `sum`, as a log.
    est_log: f64,
    /// Rounding part of `est_log`.
    round_log: f64,
    peak: f64,
    t_used: f64,
    terms: usize,
    status: Status,
    ext_digits: Option<u32>,
}

fn lse(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + libm::log1p(exp(lo - hi))
}

/// Coefficients at extended precision, reusable across evaluations.
#[derive(Default)]
pub struct ExtCache {
    a: Option<ExtCoeffs>,
    b: Option<ExtCoeffs>,
}

impl core::fmt::Debug for ExtCache {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ExtCache")
            .field("a_digits", &self.a.as_ref().map(|c| c.ctx.digits()))
            .field("b_digits", &self.b.as_ref().map(|c| c.ctx.digits()))
            .finish()
    }
}

impl ExtCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&mut self, kind: CoeffKind) -> &mut Option<ExtCoeffs> {
        match kind {
            CoeffKind::A => &mut self.a,
            CoeffKind::B => &mut self.b,
        }
    }
}

struct ExtCoeffs {
    ctx: ExtContext,
    alpha: BigFloat,
    /// Indexed like the table entries.
    coeffs: Vec<BigFloat>,
}

fn build_ext(table: &CoefficientTable, digits: u32) -> ExtCoeffs {
    let params = &table.params;
    let mut ctx = ExtContext::new(digits);
    let bits = ctx.precision() as u32 + 64;
    let alpha = ctx.from_scaled(&params.alpha_spec().scaled(bits), bits);
    let one = ctx.from_i64(1);
    let inv = ctx.div(&one, &alpha);
    let rho = ctx.from_f64(params.rho());
    let alpha_rho = ctx.mul(&alpha, &rho);
    let m_max = table.entries.iter().map(|e| e.m).max().unwrap_or(0) as usize;
    let n_max = table.entries.iter().map(|e| e.n).max().unwrap_or(0) as usize;

    let mut rows = Vec::with_capacity(m_max + 1);
    rows.push(one.clone());
    for j in 1..=m_max {
        let jm1 = ctx.from_i64(j as i64 - 1);
        let num_arg = ctx.add(&rho, &ctx.mul(&jm1, &inv));
        let den_arg = ctx.mul(&ctx.from_i64(j as i64), &inv);
        let num = ctx.sinpi(&num_arg);
        let den = ctx.sinpi(&den_arg);
        let r = ctx.div(&ctx.mul(&rows[j - 1], &num), &den);
        rows.push(r);
    }
    let mut cols = Vec::with_capacity(n_max + 1);
    cols.push(one.clone());
    for j in 1..=n_max {
        let jm1 = ctx.from_i64(j as i64 - 1);
        let num_arg = ctx.mul(&alpha, &ctx.add(&rho, &jm1));
        let den_arg = ctx.mul(&alpha, &ctx.from_i64(j as i64));
        let num = ctx.sinpi(&num_arg);
        let den = ctx.sinpi(&den_arg);
        let c = ctx.div(&ctx.mul(&cols[j - 1], &num), &den);
        cols.push(c);
    }

    let zero = ctx.from_i64(0);
    let mut coeffs = alloc::vec![zero.clone(); table.entries.len()];
    match table.kind {
        CoeffKind::A => {
            // g2(m, n) = 1/Gamma(alpha rho + alpha n + m), stepped in m
            let mut g2: Vec<BigFloat> = (0..=n_max)
                .map(|n| {
                    let z = ctx.add(&alpha_rho, &ctx.mul(&alpha, &ctx.from_i64(n as i64)));
                    ctx.recip_gamma(&z, None)
                })
                .collect();
            for m in 0..=m_max {
                let mf = ctx.from_i64(m as i64);
                // w0 = 1 - rho - m/alpha; g1(m, n) = 1/Gamma(w0 - n) = (w0 - n) g1(m, n-1)
                let w0 = ctx.sub(&ctx.sub(&one, &rho), &ctx.mul(&mf, &inv));
                let mut g1 = ctx.recip_gamma(&w0, None);
                for n in 0..=n_max {
                    if n > 0 {
                        let f = ctx.sub(&w0, &ctx.from_i64(n as i64));
                        g1 = ctx.mul(&g1, &f);
                    }
                    if let Some(idx) = table_index(table, m, n) {
                        if !table.entries[idx].value.is_zero() {
                            let mut v = ctx.mul(&ctx.mul(&g1, &g2[n]), &ctx.mul(&rows[m], &cols[n]));
                            if (m + n) % 2 == 1 {
                                v = v.neg();
                            }
                            coeffs[idx] = v;
                        }
                    }
                    let z = ctx.add(&ctx.add(&alpha_rho, &ctx.mul(&alpha, &ctx.from_i64(n as i64))), &mf);
                    g2[n] = ctx.div(&g2[n], &z);
                }
            }
        }
        CoeffKind::B => {
            // h2(m, n) = 1/Gamma(-alpha n - m) = (-alpha n - m) h2(m-1, n)... stepped in m
            let mut h2: Vec<BigFloat> = (0..=n_max)
                .map(|n| {
                    if n == 0 {
                        return zero.clone();
                    }
                    let z = ctx.mul(&alpha, &ctx.from_i64(n as i64)).neg();
                    ctx.recip_gamma(&z, None)
                })
                .collect();
            for m in 0..=m_max {
                let mf = ctx.from_i64(m as i64);
                // u0 = 1 + m/alpha; h1(m, n) = 1/Gamma(u0 + n)
                let u0 = ctx.add(&one, &ctx.mul(&mf, &inv));
                let z1 = ctx.add(&u0, &one);
                let mut h1 = ctx.recip_gamma(&z1, None);
                for n in 1..=n_max {
                    if n > 1 {
                        let z = ctx.add(&u0, &ctx.from_i64(n as i64 - 1));
                        h1 = ctx.div(&h1, &z);
                    }
                    if m > 0 {
                        // 1/Gamma(z - 1) = (z - 1)/Gamma(z), z = -alpha n - m + 1
                        let z = ctx.sub(&ctx.mul(&alpha, &ctx.from_i64(n as i64)).neg(), &mf);
                        h2[n] = ctx.mul(&h2[n], &z);
                    }
                    if let Some(idx) = table_index(table, m, n) {
                        let mut v = ctx.mul(&ctx.mul(&h1, &h2[n]), &ctx.mul(&rows[m], &cols[n]));
                        if (m + n) % 2 == 1 {
                            v = v.neg();
                        }
                        coeffs[idx] = v;
                    }
                }
            }
        }
    }
    ExtCoeffs { ctx, alpha, coeffs }
}

fn table_index(table: &CoefficientTable, m: usize, n: usize) -> Option<usize> {
    table.index_of(m as u32, n as u32)
}

/// Evaluator holding both coefficient tables for one parameter pair.
#[derive(Clone, Debug)]
pub struct Evaluator {
    params: StableParams,
    a: CoefficientTable,
    b: CoefficientTable,
    t_max: f64,
}

/// Total mass from the distribution function split at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassReport {
    pub mass: f64,
    pub split: f64,
    /// `P(S_1 <= split)`.
    pub head: SeriesResult,
    /// `P(S_1 > split)`.
    pub tail: SeriesResult,
    /// Absolute error estimate of `mass`.
    pub est_abs: f64,
}

impl Evaluator {
    pub fn new(params: StableParams) -> Result<Self> {
        Self::with_t_max(params, T_MAX)
    }

    pub fn with_t_max(params: StableParams, t_max: f64) -> Result<Self> {
        let a = build_table(&params, CoeffKind::A, t_max)?;
        let b = build_table(&params, CoeffKind::B, t_max)?;
        Ok(Evaluator { params, a, b, t_max })
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn table(&self, kind: CoeffKind) -> &CoefficientTable {
        match kind {
            CoeffKind::A => &self.a,
            CoeffKind::B => &self.b,
        }
    }

    /// The family that converges for this `alpha`.
    pub fn convergent_kind(&self) -> CoeffKind {
        if self.params.upper_regime() {
            CoeffKind::A
        } else {
            CoeffKind::B
        }
    }

    fn witnessed(&self) -> bool {
        self.params.alpha_class().verdict == LVerdict::InLWitnessed
    }

    pub fn density(&self, x: f64, eps: f64, mode: Mode) -> Result<SeriesResult> {
        self.density_with(x, eps, mode, &mut ExtCache::new())
    }

    /// As [`Evaluator::density`], reusing extended-precision coefficients across calls.
    pub fn density_with(&self, x: f64, eps: f64, mode: Mode, cache: &mut ExtCache) -> Result<SeriesResult> {
        self.evaluate(Quantity::Density, x, eps, mode, cache)
    }

    /// Optimally truncated expansion, forced to one side.
    pub fn asymptotic(&self, x: f64, eps: f64, side: Expansion) -> Result<SeriesResult> {
        check_inputs(x, eps)?;
        self.series(side.kind(), Quantity::Density, x, eps, Policy::Asymptotic, &mut ExtCache::new())
    }

    /// Density of `S_t`: `t^{-1/alpha} p(t^{-1/alpha} x)`.
    pub fn density_at_time(&self, t: f64, x: f64, eps: f64, mode: Mode) -> Result<SeriesResult> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain("t must be positive".into()));
        }
        let s = libm::pow(t, -self.params.inv_alpha());
        let mut r = self.density(s * x, eps, mode)?;
        r.value *= s;
        Ok(r)
    }

    pub fn cdf(&self, x: f64, eps: f64) -> Result<SeriesResult> {
        self.cdf_with(x, eps, Mode::Auto, &mut ExtCache::new())
    }

    pub fn cdf_with(&self, x: f64, eps: f64, mode: Mode, cache: &mut ExtCache) -> Result<SeriesResult> {
        self.evaluate(Quantity::Cdf, x, eps, mode, cache)
    }

    /// Smallest `x` with `|cdf(x) - u| <= eps`, by bisection in `ln x` and a Newton polish.
    pub fn quantile(&self, u: f64, eps: f64) -> Result<f64> {
        if !(u > 1e-8 && u < 1.0 - 1e-8) {
            return Err(Error::Domain(alloc::format!("u = {u} must lie in (1e-8, 1 - 1e-8)")));
        }
        if !(eps > 0.0) {
            return Err(Error::Domain("eps must be positive".into()));
        }
        let ceps = (eps * 0.1).clamp(1e-13, 1e-3);
        let mut cache = ExtCache::new();
        let f = |x: f64, cache: &mut ExtCache| -> Result<f64> { Ok(self.cdf_with(x, ceps, Mode::Auto, cache)?.value) };
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        let mut flo = f(lo, &mut cache)?;
        while flo > u {
            lo *= 0.25;
            if lo < 1e-60 {
                return Err(Error::Bracket { u });
            }
            flo = f(lo, &mut cache)?;
        }
        let mut fhi = flo;
        while fhi < u {
            hi *= 4.0;
            if hi > 1e60 {
                return Err(Error::Bracket { u });
            }
            fhi = f(hi, &mut cache)?;
        }
        for _ in 0..200 {
            let mid = sqrt(lo * hi);
            let fm = f(mid, &mut cache)?;
            if fabs(fm - u) <= eps * 0.25 || hi / lo - 1.0 < 1e-12 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = sqrt(lo * hi);
        for _ in 0..3 {
            let fx = f(x, &mut cache)?;
            if fabs(fx - u) <= eps * 0.25 {
                break;
            }
            let p = self.density_with(x, ceps, Mode::Auto, &mut cache)?.value;
            if !(p > 0.0) {
                break;
            }
            let next = x - (fx - u) / p;
            if !(next > 0.0) {
                break;
            }
            x = next;
        }
        Ok(x)
    }

    /// `P(S_1 <= X) + P(S_1 > X)` with each side summed where it is accurate.
    pub fn total_mass(&self, eps: f64) -> Result<MassReport> {
        let conv = self.convergent_kind();
        let mut cache = ExtCache::new();
        // walk away from 1 until the expansion on the far side meets the tolerance
        let mut x: f64 = 1.0;
        let step: f64 = if conv == CoeffKind::A { 1.25 } else { 0.8 };
        let far = if conv == CoeffKind::A { CoeffKind::B } else { CoeffKind::A };
        let mut best: Option<(f64, SeriesResult)> = None;
        for _ in 0..40 {
            x *= step;
            let r = self.series(far, Quantity::Cdf, x, eps, Policy::Asymptotic, &mut cache)?;
            let r_err = fabs(cdf_side_abs(&r, far));
            if best.as_ref().map(|b| r_err < fabs(cdf_side_abs(&b.1, far))).unwrap_or(true) {
                best = Some((x, r));
            }
            if r_err <= eps * 0.5 {
                break;
            }
        }
        let (split, far_r) = best.expect("at least one split examined");
        let near_r = self.series(conv, Quantity::Cdf, split, eps, Policy::Convergent, &mut cache)?;
        let (head, tail) = if conv == CoeffKind::A { (near_r, far_r) } else { (far_r, near_r) };
        let head_p = head.value;
        let tail_p = 1.0 - tail.value;
        let est_abs = cdf_side_abs(&head, CoeffKind::A) + cdf_side_abs(&tail, CoeffKind::B);
        let mut tail_out = tail;
        tail_out.value = tail_p;
        Ok(MassReport { mass: head_p + tail_p, split, head, tail: tail_out, est_abs })
    }

    fn evaluate(&self, q: Quantity, x: f64, eps: f64, mode: Mode, cache: &mut ExtCache) -> Result<SeriesResult> {
        check_inputs(x, eps)?;
        let conv = self.convergent_kind();
        let side = if x < 1.0 { CoeffKind::A } else { CoeffKind::B };
        match mode {
            Mode::Convergent => {
                if self.witnessed() {
                    return Err(Error::Hypothesis("alpha is witnessed in the exceptional set; the series need not converge".into()));
                }
                self.series(conv, q, x, eps, Policy::Convergent, cache)
            }
            Mode::Asymptotic => self.series(side, q, x, eps, Policy::Asymptotic, cache),
            Mode::Auto => {
                if self.witnessed() {
                    return self.series(side, q, x, eps, Policy::Asymptotic, cache);
                }
                let far = if conv == CoeffKind::A { CoeffKind::B } else { CoeffKind::A };
                let on_far_side = if conv == CoeffKind::A { x >= 1.0 } else { x <= 1.0 };
                let asym = if on_far_side {
                    let r = self.series(far, q, x, eps, Policy::Asymptotic, cache)?;
                    if r.status == Status::Converged {
                        return Ok(r);
                    }
                    Some(r)
                } else {
                    None
                };
                let c = self.series(conv, q, x, eps, Policy::Convergent, cache)?;
                match asym {
                    Some(a) if c.status != Status::Converged && !(c.est_error <= a.est_error) => Ok(a),
                    _ => Ok(c),
                }
            }
        }
    }

    fn series(&self, kind: CoeffKind, q: Quantity, x: f64, eps: f64, policy: Policy, cache: &mut ExtCache) -> Result<SeriesResult> {
        let table = self.table(kind);
        let ln_x = log(x);
        let ln_y = if kind == CoeffKind::A { ln_x } else { -ln_x };
        let mut raw = self.sum_f64(table, q, ln_y, eps, policy);
        if policy == Policy::Convergent {
            // re-run in extended precision while rounding takes more than a tenth of the budget
            let mut attempts = 0;
            while raw.round_log - raw.sum.logabs > log(eps * 0.1) && attempts < 3 {
                let garbage = raw.sum.sign == 0 || raw.round_log >= raw.sum.logabs;
                let excess = if garbage {
                    // the sum is noise, so its size says nothing; assume a tiny result
                    raw.peak / core::f64::consts::LN_10 + 30.0
                } else {
                    (raw.peak - raw.sum.logabs) / core::f64::consts::LN_10
                };
                let need = (excess.max(0.0) + 15.0).max(excess + log10(1.0 / eps) + 5.0);
                let digits = (need.ceil() as u32).max(34).max(raw.ext_digits.map(|d| d + 20).unwrap_or(0));
                if raw.ext_digits.is_some_and(|d| d >= MAX_EXT_DIGITS) {
                    break;
                }
                raw = self.sum_ext(table, q, x, eps, digits.min(MAX_EXT_DIGITS), cache);
                attempts += 1;
            }
        }
        Ok(self.finish(kind, q, x, ln_x, policy, raw))
    }

    fn finish(&self, kind: CoeffKind, q: Quantity, _x: f64, ln_x: f64, policy: Policy, raw: RawSum) -> SeriesResult {
        let alpha = self.params.alpha();
        let ar = alpha * self.params.rho();
        let outer = match (q, kind) {
            (Quantity::Density, CoeffKind::A) => ar - 1.0,
            (Quantity::Density, CoeffKind::B) => -1.0 - alpha,
            (Quantity::Cdf, CoeffKind::A) => ar,
            (Quantity::Cdf, CoeffKind::B) => -alpha,
        };
        let scaled = SignedLogValue { sign: raw.sum.sign, logabs: raw.sum.logabs + outer * ln_x };
        let est_abs_log = raw.est_log + outer * ln_x;
        let value = match (q, kind) {
            (Quantity::Cdf, CoeffKind::B) => 1.0 - scaled.to_f64(),
            _ => scaled.to_f64(),
        };
        let est_error = if value == 0.0 { f64::INFINITY } else { exp(est_abs_log) / fabs(value) };
        let mut status = raw.status;
        if status == Status::Converged && !(est_error <= 1.0) {
            status = if policy == Policy::Convergent { Status::NotConverged } else { Status::AsymptoticFloor };
        }
        SeriesResult {
            value,
            mode: if policy == Policy::Convergent { SeriesMode::Convergent } else { SeriesMode::Asymptotic },
            kind,
            t_used: raw.t_used,
            terms_used: raw.terms,
            est_error,
            status,
            peak_log10_term: (raw.peak + outer * ln_x) / core::f64::consts::LN_10,
            ext_digits: raw.ext_digits,
        }
    }

    fn weight_offset(&self, kind: CoeffKind) -> f64 {
        match kind {
            CoeffKind::A => self.params.alpha() * self.params.rho(),
            CoeffKind::B => self.params.alpha(),
        }
    }

    fn sum_f64(&self, table: &CoefficientTable, q: Quantity, ln_y: f64, eps: f64, policy: Policy) -> RawSum {
        let c = self.weight_offset(table.kind);
        let ln_eps = log(eps);
        let mut acc = Accumulator::new();
        let mut shells: Vec<f64> = Vec::new();
        let mut partials: Vec<SignedLogValue> = Vec::new();
        let mut terms_at: Vec<usize> = Vec::new();
        let mut small_run = 0;
        // sum of |t| (10 + |ln coefficient| + |power ln y|), the per-term rounding scale
        let mut round_acc = f64::NEG_INFINITY;
        let mut round_at: Vec<f64> = Vec::new();
        let mut best: Option<usize> = None;
        let mut outcome: Option<(usize, Status)> = None;
        let n_shells = table.shell_count();
        for k in 0..n_shells {
            let mut s = f64::NEG_INFINITY;
            for e in table.shell(k) {
                if e.value.is_zero() {
                    continue;
                }
                let mut t = e.value.scale_pow(ln_y, e.power);
                if q == Quantity::Cdf {
                    t.logabs -= log(c + e.power);
                }
                round_acc = lse(round_acc, t.logabs + log(10.0 + fabs(e.value.logabs) + fabs(e.power * ln_y)));
                s = lse(s, t.logabs);
                acc.push(t);
            }
            shells.push(s);
            let partial = acc.value();
            partials.push(partial);
            terms_at.push(acc.terms());
            round_at.push(round_acc);
            if k == 0 {
                continue;
            }
            let small = s < ln_eps + partial.logabs;
            small_run = if small { small_run + 1 } else { 0 };
            if small_run >= 2 && trunc_est(&shells, k) - partial.logabs <= ln_eps {
                outcome = Some((k, Status::Converged));
                break;
            }
            if policy == Policy::Asymptotic {
                match best {
                    Some(b) if shells[b] <= s => {
                        if k - b >= LOOKAHEAD {
                            break;
                        }
                    }
                    _ => best = Some(k),
                }
            }
        }
        let rounding = |k: usize| round_at[k] + log(F64_EPS);
        match (outcome, policy) {
            (Some((k, status)), _) => RawSum {
                sum: partials[k],
                est_log: lse(trunc_est(&shells, k), rounding(k)),
                round_log: rounding(k),
                peak: acc.peak_logabs(),
                t_used: k as f64,
                terms: terms_at[k],
                status,
                ext_digits: None,
            },
            (None, Policy::Convergent) => {
                let k = shells.len() - 1;
                RawSum {
                    sum: partials[k],
                    est_log: lse(trunc_est(&shells, k), rounding(k)),
                    round_log: rounding(k),
                    peak: acc.peak_logabs(),
                    t_used: k as f64,
                    terms: terms_at[k],
                    status: Status::NotConverged,
                    ext_digits: None,
                }
            }
            (None, Policy::Asymptotic) => {
                let b = best.unwrap_or(shells.len() - 1).max(1);
                RawSum {
                    sum: partials[b - 1],
                    est_log: lse(shells[b], rounding(b - 1)),
                    round_log: rounding(b - 1),
                    peak: acc.peak_logabs(),
                    t_used: (b - 1) as f64,
                    terms: terms_at[b - 1],
                    status: Status::AsymptoticFloor,
                    ext_digits: None,
                }
            }
        }
    }

    fn sum_ext(&self, table: &CoefficientTable, q: Quantity, x: f64, eps: f64, digits: u32, cache: &mut ExtCache) -> RawSum {
        let slot = cache.slot(table.kind);
        if slot.as_ref().map(|c| c.ctx.digits() < digits || c.coeffs.len() != table.entries.len()).unwrap_or(true) {
            *slot = Some(build_ext(table, digits));
        }
        let ext = slot.as_mut().expect("just built");
        let used_digits = ext.ctx.digits();
        let ctx = &mut ext.ctx;
        let xe = ctx.from_f64(x);
        let ln_x = ctx.ln(&xe);
        let ln_y = if table.kind == CoeffKind::A { ln_x } else { ln_x.neg() };
        let ln_y_f = if table.kind == CoeffKind::A { log(x) } else { -log(x) };
        let m_max = table.entries.iter().map(|e| e.m).max().unwrap_or(0) as usize;
        let n_max = table.entries.iter().map(|e| e.n).max().unwrap_or(0) as usize;
        let n_shift = if table.kind == CoeffKind::B { 1 } else { 0 };
        let y = ctx.exp(&ln_y);
        let mut ym = Vec::with_capacity(m_max + 1);
        ym.push(ctx.from_i64(1));
        for m in 1..=m_max {
            let v = ctx.mul(&ym[m - 1], &y);
            ym.push(v);
        }
        let mut yn = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let e = ctx.mul(&ext.alpha, &ctx.from_i64((n as i64 - n_shift).max(0)));
            let v = ctx.mul(&ln_y, &e);
            yn.push(ctx.exp(&v));
        }
        let c_f = self.weight_offset(table.kind);
        let c_e = match table.kind {
            CoeffKind::A => ctx.mul(&ext.alpha, &ctx.from_f64(self.params.rho())),
            CoeffKind::B => ext.alpha.clone(),
        };
        let ln_eps = log(eps);
        let mut sum = ctx.from_i64(0);
        let mut shells: Vec<f64> = Vec::new();
        let mut peak = f64::NEG_INFINITY;
        let mut terms = 0usize;
        let mut small_run = 0;
        let mut status = Status::NotConverged;
        let mut k_end = 0;
        let mut partial = SignedLogValue::ZERO;
        for k in 0..table.shell_count() {
            let mut s = f64::NEG_INFINITY;
            for idx in table.shell_range(k) {
                let e = &table.entries[idx];
                if e.value.is_zero() {
                    continue;
                }
                let mut t = e.value.scale_pow(ln_y_f, e.power);
                let mut v = ctx.mul(&ext.coeffs[idx], &ctx.mul(&ym[e.m as usize], &yn[e.n as usize]));
                if q == Quantity::Cdf {
                    t.logabs -= log(c_f + e.power);
                    let pw = ctx.add(&ctx.from_i64(e.m as i64), &ctx.mul(&ext.alpha, &ctx.from_i64(e.n as i64 - n_shift)));
                    v = ctx.div(&v, &ctx.add(&c_e, &pw));
                }
                peak = peak.max(t.logabs);
                s = lse(s, t.logabs);
                sum = ctx.add(&sum, &v);
                terms += 1;
            }
            shells.push(s);
            partial = to_slv(&sum);
            k_end = k;
            if k == 0 {
                continue;
            }
            let small = s < ln_eps + partial.logabs;
            small_run = if small { small_run + 1 } else { 0 };
            if small_run >= 2 && trunc_est(&shells, k) - partial.logabs <= ln_eps {
                status = Status::Converged;
                break;
            }
        }
        let rounding = peak - used_digits as f64 * core::f64::consts::LN_10 + 0.5 * log(terms.max(1) as f64) + 2.0;
        RawSum {
            sum: partial,
            est_log: lse(trunc_est(&shells, k_end), rounding),
            round_log: rounding,
            peak,
            t_used: k_end as f64,
            terms,
            status,
            ext_digits: Some(used_digits),
        }
    }
}

/// Truncation estimate after shell `k`: last shell plus a geometric tail, as a log.
fn trunc_est(shells: &[f64], k: usize) -> f64 {
    let s = shells[k];
    if s == f64::NEG_INFINITY {
        return s;
    }
    let prev = if k > 0 { shells[k - 1] } else { f64::NEG_INFINITY };
    let r = if prev == f64::NEG_INFINITY { 0.0 } else { exp(s - prev).min(0.9) };
    s - log(1.0 - r)
}

/// Absolute error carried by one side of a split distribution function.
fn cdf_side_abs(r: &SeriesResult, kind: CoeffKind) -> f64 {
    let e = r.est_error * fabs(r.value);
    if e.is_finite() {
        e
    } else {
        // no usable estimate: the whole side is in doubt
        fabs(match kind {
            CoeffKind::A => r.value,
            CoeffKind::B => 1.0 - r.value,
        })
    }
}

fn check_inputs(x: f64, eps: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(alloc::format!("x = {x} must be positive and finite")));
    }
    if !(1e-14..=1e-2).contains(&eps) {
        return Err(Error::Domain(alloc::format!("eps = {eps} must lie in [1e-14, 1e-2]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::coeff_b;
    use crate::diophantine::RealSpec;

    fn fixture1() -> Evaluator {
        Evaluator::new(StableParams::new(RealSpec::sqrt(2).unwrap(), 0.5).unwrap()).unwrap()
    }

    fn fixture2() -> Evaluator {
        Evaluator::new(StableParams::new(RealSpec::sqrt(2).unwrap().reciprocal().unwrap(), 0.4).unwrap()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        fabs(a - b) / fabs(b)
    }

    #[test]
    fn values_against_high_precision_sums() {
        // 40-digit sums of the convergent series
        let ev = fixture1();
        let p1 = ev.density(1.0, 1e-13, Mode::Convergent).unwrap();
        assert_eq!(p1.status, Status::Converged);
        assert!(rel(p1.value, 0.35981877986707189611) < 1e-12);
        let p01 = ev.density(0.1, 1e-13, Mode::Auto).unwrap();
        assert!(rel(p01.value, 0.89010759663889775489) < 1e-12);
    }

    #[test]
    fn tolerance_refinement_is_consistent() {
        let ev = fixture1();
        let coarse = ev.density(1.0, 1e-10, Mode::Auto).unwrap();
        let fine = ev.density(1.0, 1e-13, Mode::Auto).unwrap();
        assert_eq!(coarse.status, Status::Converged);
        assert!(coarse.est_error <= 1e-10);
        assert!(rel(coarse.value, fine.value) <= 1e-9);
    }

    #[test]
    fn extended_rerun_at_large_x() {
        let ev = fixture1();
        let c = ev.density(5.0, 1e-12, Mode::Convergent).unwrap();
        assert!(c.ext_digits.is_some());
        assert_eq!(c.status, Status::Converged);
        let a = ev.asymptotic(5.0, 1e-12, Expansion::Large).unwrap();
        assert!(rel(c.value, a.value) <= 1e-10_f64.max(a.est_error));
        // the series has not reached its largest terms by the shell cap
        let far = ev.density(10.0, 1e-12, Mode::Convergent).unwrap();
        assert_eq!(far.status, Status::NotConverged);
        let auto = ev.density(10.0, 1e-12, Mode::Auto).unwrap();
        assert_eq!((auto.mode, auto.status), (SeriesMode::Asymptotic, Status::Converged));
    }

    #[test]
    fn leading_order_limits() {
        let ev = fixture1();
        let p = ev.params();
        let ar = p.alpha() * p.rho();
        let a00 = ev.table(CoeffKind::A).get(0, 0).unwrap().to_f64();
        let b01 = coeff_b(p, 0, 1).unwrap().to_f64();
        let small = ev.density(1e-4, 1e-12, Mode::Auto).unwrap().value * libm::pow(1e-4, 1.0 - ar);
        assert!(rel(small, a00) <= 1e-3);
        let large = ev.density(1e4, 1e-12, Mode::Auto).unwrap().value * libm::pow(1e4, 1.0 + p.alpha());
        assert!(rel(large, b01) <= 1e-3);
    }

    #[test]
    fn scaling_in_time() {
        let ev = fixture1();
        let t = 2.0;
        let s = libm::pow(t, -1.0 / core::f64::consts::SQRT_2);
        let direct = s * ev.density(s, 1e-13, Mode::Auto).unwrap().value;
        let via = ev.density_at_time(t, 1.0, 1e-13, Mode::Auto).unwrap().value;
        assert!(rel(via, direct) <= 1e-12);
        assert!(ev.density_at_time(0.0, 1.0, 1e-10, Mode::Auto).is_err());
    }

    #[test]
    fn normalisation_both_fixtures() {
        for ev in [fixture1(), fixture2()] {
            let m = ev.total_mass(1e-12).unwrap();
            assert!(fabs(m.mass - 1.0) <= 1e-8, "{m:?}");
            assert!(m.est_abs <= 1e-10);
        }
    }

    #[test]
    fn cdf_axioms_and_derivative() {
        let ev = fixture1();
        let mut prev = 0.0;
        for i in 0..100 {
            let x = libm::pow(10.0, -3.0 + 6.0 * i as f64 / 99.0);
            let c = ev.cdf(x, 1e-10).unwrap();
            assert!((0.0..=1.0).contains(&c.value));
            assert!(c.value >= prev);
            prev = c.value;
        }
        assert!(fabs(ev.cdf(1e6, 1e-10).unwrap().value - 1.0) <= 1e-6);
        let h = 1e-4;
        let d = (ev.cdf(1.0 + h, 1e-13).unwrap().value - ev.cdf(1.0 - h, 1e-13).unwrap().value) / (2.0 * h);
        assert!(fabs(d - ev.density(1.0, 1e-13, Mode::Auto).unwrap().value) <= 1e-6);
    }

    #[test]
    fn quantile_round_trip() {
        let ev = fixture1();
        for x0 in [0.1, 1.0, 5.0] {
            let u = ev.cdf(x0, 1e-13).unwrap().value;
            let q = ev.quantile(u, 1e-12).unwrap();
            assert!(fabs(q - x0) <= 1e-6, "{x0} -> {q}");
        }
        let med = ev.quantile(0.5, 1e-10).unwrap();
        assert!(med > 0.0);
        let lo = ev.quantile(0.25, 1e-10).unwrap();
        let hi = ev.quantile(0.75, 1e-10).unwrap();
        assert!(lo < med && med < hi);
        assert!(ev.quantile(0.0, 1e-10).is_err());
        assert!(ev.quantile(1.0 - 1e-9, 1e-10).is_err());
    }

    #[test]
    fn positivity_on_log_grid() {
        for ev in [fixture1(), fixture2()] {
            for i in 0..=60 {
                let x = libm::pow(10.0, -3.0 + 6.0 * i as f64 / 60.0);
                let p = ev.density(x, 1e-10, Mode::Auto).unwrap();
                assert_eq!(p.status, Status::Converged, "x = {x}");
                assert!(p.value >= -1e-12 * libm::pow(10.0, p.peak_log10_term), "x = {x}");
            }
        }
    }

    #[test]
    fn input_errors() {
        let ev = fixture1();
        assert!(matches!(ev.density(0.0, 1e-10, Mode::Auto), Err(Error::Domain(_))));
        assert!(matches!(ev.density(-1.0, 1e-10, Mode::Auto), Err(Error::Domain(_))));
        assert!(matches!(ev.density(1.0, 1e-16, Mode::Auto), Err(Error::Domain(_))));
        assert!(matches!(ev.cdf(f64::NAN, 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn exceptional_alpha_refuses_convergent_mode() {
        use crate::diophantine::{construct_l_member, ContinuedFraction, Termination};
        let prefix = ContinuedFraction::from_u64(1, &[2], Termination::Exact);
        let alpha = construct_l_member(&prefix, 2).unwrap().to_real().unwrap();
        let ev = Evaluator::with_t_max(StableParams::new(alpha, 0.5).unwrap(), 60.0).unwrap();
        assert!(matches!(ev.density(1.0, 1e-8, Mode::Convergent), Err(Error::Hypothesis(_))));
        let r = ev.density(1e-3, 1e-8, Mode::Auto).unwrap();
        assert_eq!(r.mode, SeriesMode::Asymptotic);
    }
}
