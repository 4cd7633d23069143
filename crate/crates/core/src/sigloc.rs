//! Signed-logarithmic reals and sign-tracked special functions.

use core::cmp::Ordering;
use core::f64::consts::PI;
use core::fmt;

use crate::diophantine::Phase;
use crate::error::{Error, Result};

pub mod ext;

/// Distance to a gamma pole below which arguments are rejected.
pub const POLE_TOL: f64 = 1e-12;

/// A real number stored as a sign and the natural log of its magnitude.
///
/// `sign == 0` is exactly zero and `logabs` is then meaningless.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedLogValue {
    pub sign: i8,
    pub logabs: f64,
}

impl SignedLogValue {
    pub const ZERO: SignedLogValue = SignedLogValue { sign: 0, logabs: 0.0 };
    pub const ONE: SignedLogValue = SignedLogValue { sign: 1, logabs: 0.0 };

    pub fn new(sign: i8, logabs: f64) -> Self {
        if sign == 0 {
            Self::ZERO
        } else {
            SignedLogValue { sign: sign.signum(), logabs }
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else if v > 0.0 {
            SignedLogValue { sign: 1, logabs: libm::log(v) }
        } else {
            SignedLogValue { sign: -1, logabs: libm::log(-v) }
        }
    }

    /// Back to binary64; overflows to infinity and underflows to zero.
    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * libm::exp(self.logabs),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn log10_abs(&self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.logabs / core::f64::consts::LN_10
        }
    }

    pub fn neg(self) -> Self {
        SignedLogValue { sign: -self.sign, logabs: self.logabs }
    }

    pub fn abs(self) -> Self {
        SignedLogValue { sign: self.sign.abs(), logabs: self.logabs }
    }

    pub fn recip(self) -> Result<Self> {
        if self.sign == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(SignedLogValue { sign: self.sign, logabs: -self.logabs })
    }

    /// Multiply by `x^e` for `x > 0`.
    pub fn scale_pow(self, ln_x: f64, e: f64) -> Self {
        if self.sign == 0 {
            self
        } else {
            SignedLogValue { sign: self.sign, logabs: self.logabs + e * ln_x }
        }
    }

    /// Compare magnitudes; zero is the smallest.
    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        match (self.sign == 0, other.sign == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self.logabs.partial_cmp(&other.logabs).unwrap_or(Ordering::Equal),
        }
    }
}

impl fmt::Display for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}exp({})", if s < 0 { "-" } else { "" }, self.logabs),
        }
    }
}

pub fn slv_mul(a: SignedLogValue, b: SignedLogValue) -> SignedLogValue {
    if a.sign == 0 || b.sign == 0 {
        return SignedLogValue::ZERO;
    }
    SignedLogValue { sign: a.sign * b.sign, logabs: a.logabs + b.logabs }
}

pub fn slv_div(a: SignedLogValue, b: SignedLogValue) -> Result<SignedLogValue> {
    Ok(slv_mul(a, b.recip()?))
}

impl core::ops::Mul for SignedLogValue {
    type Output = SignedLogValue;
    fn mul(self, rhs: SignedLogValue) -> SignedLogValue {
        slv_mul(self, rhs)
    }
}

/// Compensated (Neumaier) summation in binary64.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    fn scale(&mut self, f: f64) {
        self.sum *= f;
        self.comp *= f;
    }
}

/// Signed log-sum-exp of a finite sequence, factoring out the largest magnitude.
pub fn slv_accumulate<'a, I>(terms: I) -> SignedLogValue
where
    I: IntoIterator<Item = &'a SignedLogValue>,
    I::IntoIter: Clone,
{
    let iter = terms.into_iter();
    let peak = iter
        .clone()
        .filter(|t| t.sign != 0)
        .map(|t| t.logabs)
        .fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return SignedLogValue::ZERO;
    }
    let mut acc = Neumaier::new();
    for t in iter.filter(|t| t.sign != 0) {
        acc.add(t.sign as f64 * libm::exp(t.logabs - peak));
    }
    let s = acc.value();
    if s == 0.0 {
        SignedLogValue::ZERO
    } else {
        SignedLogValue { sign: if s > 0.0 { 1 } else { -1 }, logabs: peak + libm::log(s.abs()) }
    }
}

/// Streaming version of [`slv_accumulate`] that rescales when a larger term arrives.
#[derive(Clone, Copy, Debug)]
pub struct Accumulator {
    scale: f64,
    acc: Neumaier,
    peak: f64,
    count: usize,
}

impl Default for Accumulator {
    fn default() -> Self {
        Accumulator { scale: f64::NEG_INFINITY, acc: Neumaier::new(), peak: f64::NEG_INFINITY, count: 0 }
    }
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: SignedLogValue) {
        if t.sign == 0 {
            return;
        }
        self.count += 1;
        if t.logabs > self.peak {
            self.peak = t.logabs;
        }
        if t.logabs > self.scale {
            if self.scale.is_finite() {
                self.acc.scale(libm::exp(self.scale - t.logabs));
            }
            self.scale = t.logabs;
        }
        self.acc.add(t.sign as f64 * libm::exp(t.logabs - self.scale));
    }

    pub fn value(&self) -> SignedLogValue {
        let s = self.acc.value();
        if s == 0.0 || !self.scale.is_finite() {
            SignedLogValue::ZERO
        } else {
            SignedLogValue { sign: if s > 0.0 { 1 } else { -1 }, logabs: self.scale + libm::log(s.abs()) }
        }
    }

    /// Largest `logabs` pushed so far.
    pub fn peak_logabs(&self) -> f64 {
        self.peak
    }

    pub fn terms(&self) -> usize {
        self.count
    }
}

fn check_pole(x: f64) -> Result<()> {
    if x <= 0.5 {
        let k = libm::round(x);
        if (x - k).abs() < POLE_TOL {
            return Err(Error::GammaPole((-k) as u64));
        }
    }
    Ok(())
}

/// `Gamma(x)` as a signed-log value, using reflection for negative arguments.
pub fn log_gamma_signed(x: f64) -> Result<SignedLogValue> {
    check_pole(x)?;
    if x > 0.0 {
        let (lg, _) = libm::lgamma_r(x);
        return Ok(SignedLogValue { sign: 1, logabs: lg });
    }
    log_gamma_reflected(x, sinpi_signed(x, None))
}

/// Reflection `Gamma(x) = pi / (sin(pi x) Gamma(1 - x))` with a caller-supplied sine,
/// so that exactly reduced sines can be used for large negative arguments.
pub fn log_gamma_reflected(x: f64, sin_pi_x: SignedLogValue) -> Result<SignedLogValue> {
    if sin_pi_x.sign == 0 {
        return Err(Error::GammaPole((-libm::round(x)) as u64));
    }
    let (lg, _) = libm::lgamma_r(1.0 - x);
    Ok(SignedLogValue { sign: sin_pi_x.sign, logabs: libm::log(PI) - sin_pi_x.logabs - lg })
}

/// `1 / Gamma(x)`; exactly zero at the poles (within [`POLE_TOL`]).
pub fn recip_gamma_signed(x: f64) -> SignedLogValue {
    match log_gamma_signed(x) {
        Ok(g) => SignedLogValue { sign: g.sign, logabs: -g.logabs },
        Err(_) => SignedLogValue::ZERO,
    }
}

/// `sin(pi y)`. With an exact phase the reduction modulo 2 is done in fixed point.
pub fn sinpi_signed(y: f64, y_exact: Option<&Phase>) -> SignedLogValue {
    let phase = match y_exact {
        Some(p) => *p,
        None => Phase::from_f64(y),
    };
    let (s, mag) = phase.sinpi();
    if s == 0 {
        SignedLogValue::ZERO
    } else {
        SignedLogValue { sign: s, logabs: libm::log(mag) }
    }
}
