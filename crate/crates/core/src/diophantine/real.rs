use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::phase::Phase;
use crate::error::{Error, Result};

/// Extra guard bits carried when a surd is rounded to fixed point.
const GUARD: u32 = 64;

/// An exactly specified real number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RealKind {
    /// `digits / 10^scale`, remembered as the literal it came from.
    Decimal { numer: BigInt, scale: u32 },
    /// `(p + q sqrt(d)) / r` with `d >= 2` non-square and `r != 0`.
    Surd { p: BigInt, q: BigInt, d: BigUint, r: BigInt },
    /// `[a0; a1, a2, ...]`. `open` marks a prefix of a longer (unknown) expansion.
    Quotients { a0: BigInt, terms: Vec<BigUint>, open: bool },
}

/// A real number given exactly, with a cached binary64 approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSpec {
    kind: RealKind,
    approx: f64,
}

/// The arithmetic value behind a [`RealSpec`]: a rational or a quadratic surd.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactValue {
    /// `num / den` with `den > 0`.
    Rational { num: BigInt, den: BigInt },
    /// `(p + q sqrt(d)) / r` with `r > 0`.
    Surd { p: BigInt, q: BigInt, d: BigUint, r: BigInt },
}

impl RealSpec {
    pub fn new(kind: RealKind) -> Result<Self> {
        match &kind {
            RealKind::Surd { d, r, .. } => {
                if r.is_zero() {
                    return Err(Error::Parse("surd denominator is zero".into()));
                }
                if d < &BigUint::from(2u8) || is_square(d) {
                    return Err(Error::Parse(format!("surd radicand {d} must be a non-square >= 2")));
                }
            }
            RealKind::Quotients { terms, .. } => {
                if terms.iter().any(|t| t.is_zero()) {
                    return Err(Error::Parse("partial quotients after a0 must be >= 1".into()));
                }
            }
            RealKind::Decimal { .. } => {}
        }
        let mut spec = RealSpec { kind, approx: 0.0 };
        spec.approx = match &spec.kind {
            RealKind::Decimal { .. } => spec.to_string().parse::<f64>().unwrap_or(f64::NAN),
            _ => fixed_to_f64(&spec.value().scaled(256), 256),
        };
        Ok(spec)
    }

    pub fn sqrt(d: u64) -> Result<Self> {
        Self::surd(0, 1, d, 1)
    }

    pub fn surd(p: i64, q: i64, d: u64, r: i64) -> Result<Self> {
        Self::new(RealKind::Surd { p: p.into(), q: q.into(), d: d.into(), r: r.into() })
    }

    pub fn golden_ratio() -> Self {
        Self::surd(1, 1, 5, 2).expect("valid surd")
    }

    pub fn quotients(a0: i64, terms: &[u64], open: bool) -> Result<Self> {
        Self::new(RealKind::Quotients { a0: a0.into(), terms: terms.iter().map(|t| BigUint::from(*t)).collect(), open })
    }

    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        let (terms, a0) = rational_quotients(&BigInt::from(num), &BigInt::from(den));
        Self::new(RealKind::Quotients { a0, terms, open: false })
    }

    pub fn kind(&self) -> &RealKind {
        &self.kind
    }

    /// Cached binary64 value.
    pub fn approx(&self) -> f64 {
        self.approx
    }

    pub fn is_decimal(&self) -> bool {
        matches!(self.kind, RealKind::Decimal { .. })
    }

    /// Exact arithmetic value. Open quotient lists use their last convergent.
    pub fn value(&self) -> ExactValue {
        match &self.kind {
            RealKind::Decimal { numer, scale } => {
                ExactValue::rational(numer.clone(), BigInt::from(10u8).pow(*scale))
            }
            RealKind::Surd { p, q, d, r } => ExactValue::surd(p.clone(), q.clone(), d.clone(), r.clone()),
            RealKind::Quotients { a0, terms, .. } => {
                let (p, q) = evaluate_quotients(a0, terms);
                ExactValue::rational(p, q)
            }
        }
    }

    /// `floor(x * 2^bits)`.
    pub fn scaled(&self, bits: u32) -> BigInt {
        self.value().scaled(bits)
    }

    /// `x mod 2` in fixed point.
    pub fn phase(&self) -> Phase {
        self.value().phase()
    }

    /// `(num / den) * x + shift`, keeping the exact kind where possible.
    pub fn affine(&self, num: i64, den: i64, shift: i64) -> Result<RealSpec> {
        if den == 0 || num == 0 {
            return Err(Error::Domain("affine map must be invertible".into()));
        }
        let (n, dn, s) = (BigInt::from(num), BigInt::from(den), BigInt::from(shift));
        match &self.kind {
            RealKind::Surd { p, q, d, r } => {
                // (num (p + q sqrt d) + shift den r) / (den r)
                RealSpec::new(RealKind::Surd { p: &n * p + &s * &dn * r, q: &n * q, d: d.clone(), r: &dn * r })
            }
            RealKind::Decimal { numer, scale } if den == 1 => {
                RealSpec::new(RealKind::Decimal { numer: &n * numer + s * BigInt::from(10u8).pow(*scale), scale: *scale })
            }
            _ => {
                let open = matches!(self.kind, RealKind::Quotients { open: true, .. });
                let ExactValue::Rational { num: a, den: b } = self.value() else { unreachable!() };
                let (terms, a0) = rational_quotients(&(&n * &a + &s * &dn * &b), &(&dn * &b));
                RealSpec::new(RealKind::Quotients { a0, terms, open })
            }
        }
    }

    pub fn reciprocal(&self) -> Result<RealSpec> {
        match &self.kind {
            RealKind::Surd { .. } => {
                let ExactValue::Surd { p, q, d, r } = self.value() else { unreachable!() };
                // r / (p + q sqrt d) = r (p - q sqrt d) / (p^2 - q^2 d)
                let den = &p * &p - &q * &q * BigInt::from(d.clone());
                RealSpec::new(RealKind::Surd { p: &r * &p, q: -(&r * &q), d, r: den })
            }
            _ => {
                let ExactValue::Rational { num, den } = self.value() else { unreachable!() };
                if num.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                let open = matches!(self.kind, RealKind::Quotients { open: true, .. });
                let (terms, a0) = rational_quotients(&den, &num);
                RealSpec::new(RealKind::Quotients { a0, terms, open })
            }
        }
    }
}

impl ExactValue {
    fn rational(num: BigInt, den: BigInt) -> Self {
        let g = num.gcd(&den);
        let (mut num, mut den) = if g.is_zero() { (num, den) } else { (num / &g, den / &g) };
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        ExactValue::Rational { num, den }
    }

    fn surd(p: BigInt, q: BigInt, d: BigUint, r: BigInt) -> Self {
        if r.is_negative() {
            ExactValue::Surd { p: -p, q: -q, d, r: -r }
        } else {
            ExactValue::Surd { p, q, d, r }
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, ExactValue::Rational { .. })
    }

    /// `floor(x * 2^bits)`, exact for rationals and correct to one unit for surds.
    pub fn scaled(&self, bits: u32) -> BigInt {
        match self {
            ExactValue::Rational { num, den } => (num << bits as usize).div_floor(den),
            ExactValue::Surd { p, q, d, r } => {
                let b = bits + GUARD;
                let s = BigInt::from((d << (2 * b as usize)).sqrt());
                let num = (p << b as usize) + q * s;
                num.div_floor(r) >> GUARD as usize
            }
        }
    }

    pub fn phase(&self) -> Phase {
        match self {
            ExactValue::Rational { num, den } => {
                let two_den = den * 2u8;
                let reduced = num.mod_floor(&two_den);
                Phase::from_scaled(&(reduced << 320usize).div_floor(den), 320)
            }
            _ => Phase::from_scaled(&self.scaled(320), 320),
        }
    }

    pub fn to_f64(&self) -> f64 {
        fixed_to_f64(&self.scaled(256), 256)
    }

    pub fn recip(&self) -> Result<ExactValue> {
        match self {
            ExactValue::Rational { num, den } => {
                if num.is_zero() {
                    return Err(Error::DivisionByZero);
                }
                Ok(ExactValue::rational(den.clone(), num.clone()))
            }
            ExactValue::Surd { p, q, d, r } => {
                let den = p * p - q * q * BigInt::from(d.clone());
                Ok(ExactValue::surd(r * p, -(r * q), d.clone(), den))
            }
        }
    }
}

/// Round `x / 2^bits` to binary64.
pub(crate) fn fixed_to_f64(x: &BigInt, bits: u32) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let mag = x.magnitude();
    let nb = mag.bits();
    let (top, shift) = if nb > 64 {
        let t = (mag >> (nb - 64) as usize).to_u64().unwrap_or(u64::MAX);
        let sticky = !(mag & ((BigUint::one() << (nb - 64) as usize) - 1u8)).is_zero();
        (t | sticky as u64, nb as i64 - 64)
    } else {
        (mag.to_u64().unwrap_or(0), 0)
    };
    let v = top as f64 * libm::exp2((shift - bits as i64) as f64);
    if x.sign() == Sign::Minus {
        -v
    } else {
        v
    }
}

/// Natural log of a positive big integer, to binary64 accuracy.
pub(crate) fn big_ln(v: &BigUint) -> f64 {
    let nb = v.bits();
    if nb <= 64 {
        return libm::log(v.to_u64().unwrap_or(0) as f64);
    }
    let top = (v >> (nb - 64) as usize).to_u64().unwrap_or(u64::MAX);
    libm::log(top as f64) + (nb - 64) as f64 * core::f64::consts::LN_2
}

fn is_square(d: &BigUint) -> bool {
    let s = d.sqrt();
    &(&s * &s) == d
}

/// Value `p/q` of a finite continued fraction.
pub(crate) fn evaluate_quotients(a0: &BigInt, terms: &[BigUint]) -> (BigInt, BigInt) {
    let (mut p, mut q) = (BigInt::one(), BigInt::zero());
    for a in terms.iter().rev() {
        // x = a + 1/x_prev
        let np = BigInt::from(a.clone()) * &p + &q;
        q = p;
        p = np;
    }
    // a0 + q/p
    if terms.is_empty() {
        (a0.clone(), BigInt::one())
    } else {
        (a0 * &p + &q, p)
    }
}

/// Euclid on `num/den`, returning `(terms, a0)`. The last term is at least 2
/// unless the expansion is just `[a0; 1]`-free.
pub(crate) fn rational_quotients(num: &BigInt, den: &BigInt) -> (Vec<BigUint>, BigInt) {
    let (mut n, mut d) = if den.is_negative() { (-num, -den) } else { (num.clone(), den.clone()) };
    let a0 = n.div_floor(&d);
    let mut terms = Vec::new();
    n -= &a0 * &d;
    while !n.is_zero() {
        core::mem::swap(&mut n, &mut d);
        let (a, r) = n.div_mod_floor(&d);
        terms.push(a.to_biguint().expect("positive quotient"));
        n = r;
    }
    (terms, a0)
}

fn parse_int(s: &str) -> Result<BigInt> {
    let t = s.trim();
    let t = t.strip_prefix('+').unwrap_or(t);
    BigInt::from_str(t).map_err(|_| Error::Parse(format!("bad integer `{s}`")))
}

fn parse_surd(body: &str) -> Result<RealSpec> {
    // (P+Q*sqrt:D)/R, (P-Q*sqrt:D), Q*sqrt:D, ...
    let (inner, r) = match body.rsplit_once(")/") {
        Some((head, r)) => (head.strip_prefix('(').ok_or_else(|| Error::Parse(body.into()))?, parse_int(r)?),
        None => match body.strip_prefix('(').and_then(|b| b.strip_suffix(')')) {
            Some(b) => (b, BigInt::one()),
            None => (body, BigInt::one()),
        },
    };
    let (left, d) = inner.split_once("sqrt:").ok_or_else(|| Error::Parse(format!("missing sqrt: in `{body}`")))?;
    let d = BigUint::from_str(d.trim()).map_err(|_| Error::Parse(format!("bad radicand in `{body}`")))?;
    let left = left.trim();
    let left = left.strip_suffix('*').unwrap_or(left).trim();
    // split P and signed Q at the last +/- that is not leading
    let cut = left.char_indices().skip(1).filter(|(_, c)| *c == '+' || *c == '-').map(|(i, _)| i).last();
    let (p, q) = match cut {
        Some(i) => {
            let qs = &left[i..];
            let q = if qs == "+" || qs == "-" { parse_int(&format!("{qs}1"))? } else { parse_int(qs)? };
            (parse_int(&left[..i])?, q)
        }
        None if left.is_empty() || left == "+" => (BigInt::zero(), BigInt::one()),
        None if left == "-" => (BigInt::zero(), -BigInt::one()),
        None => (BigInt::zero(), parse_int(left)?),
    };
    RealSpec::new(RealKind::Surd { p, q, d, r })
}

fn parse_cf(body: &str) -> Result<RealSpec> {
    let inner = body
        .trim()
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("expected [a0; a1, ...], got `{body}`")))?;
    let (head, tail) = match inner.split_once(';') {
        Some((h, t)) => (h, t),
        None => (inner, ""),
    };
    let a0 = parse_int(head)?;
    let mut terms = Vec::new();
    let mut open = false;
    for tok in tail.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if open {
            return Err(Error::Parse("`...` must be the last entry".into()));
        }
        if tok == "..." || tok == "…" {
            open = true;
            continue;
        }
        let a = BigUint::from_str(tok).map_err(|_| Error::Parse(format!("bad partial quotient `{tok}`")))?;
        terms.push(a);
    }
    RealSpec::new(RealKind::Quotients { a0, terms, open })
}

fn parse_decimal(s: &str) -> Result<RealSpec> {
    let t = s.trim();
    let (neg, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !int.bytes().all(|b| b.is_ascii_digit())
        || !frac.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(Error::Parse(format!("`{s}` is not a decimal, surd:, sqrt: or cf: literal")));
    }
    let digits: String = [int, frac].concat();
    let mut numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).expect("digits");
    if neg {
        numer = -numer;
    }
    RealSpec::new(RealKind::Decimal { numer, scale: frac.len() as u32 })
}

impl FromStr for RealSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("surd:") {
            parse_surd(rest)
        } else if let Some(rest) = s.strip_prefix("sqrt:") {
            let d = BigUint::from_str(rest.trim()).map_err(|_| Error::Parse(format!("bad radicand `{rest}`")))?;
            RealSpec::new(RealKind::Surd { p: BigInt::zero(), q: BigInt::one(), d, r: BigInt::one() })
        } else if let Some(rest) = s.strip_prefix("cf:") {
            parse_cf(rest)
        } else {
            parse_decimal(s)
        }
    }
}

impl fmt::Display for RealSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RealKind::Decimal { numer, scale } => {
                let digits = numer.magnitude().to_string();
                let sign = if numer.is_negative() { "-" } else { "" };
                let scale = *scale as usize;
                if scale == 0 {
                    write!(f, "{sign}{digits}")
                } else {
                    let padded = if digits.len() <= scale {
                        format!("{}{}", "0".repeat(scale + 1 - digits.len()), digits)
                    } else {
                        digits
                    };
                    let (i, fr) = padded.split_at(padded.len() - scale);
                    write!(f, "{sign}{i}.{fr}")
                }
            }
            RealKind::Surd { p, q, d, r } => {
                if p.is_zero() && q.is_one() && r.is_one() {
                    write!(f, "sqrt:{d}")
                } else {
                    let qs = if q.is_negative() { format!("{q}") } else { format!("+{q}") };
                    write!(f, "surd:({p}{qs}*sqrt:{d})/{r}")
                }
            }
            RealKind::Quotients { a0, terms, open } => {
                write!(f, "cf:[{a0}")?;
                for (i, t) in terms.iter().enumerate() {
                    write!(f, "{}{t}", if i == 0 { ";" } else { "," })?;
                }
                if *open {
                    write!(f, "{}...", if terms.is_empty() { ";" } else { "," })?;
                }
                write!(f, "]")
            }
        }
    }
}
