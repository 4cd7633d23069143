use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::real::{fixed_to_f64, rational_quotients, ExactValue, RealKind, RealSpec};
use crate::error::{Error, Result};

/// Why an expansion stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    /// More quotients exist; only `max_terms` were produced (or the list is a prefix).
    Open,
    /// The input is rational and the expansion is complete.
    Exact,
    /// A decimal literal ran out of trustworthy digits.
    PrecisionLimit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContinuedFraction {
    pub a0: BigInt,
    pub terms: Vec<BigUint>,
    pub termination: Termination,
}

impl ContinuedFraction {
    pub fn new(a0: BigInt, terms: Vec<BigUint>, termination: Termination) -> Self {
        ContinuedFraction { a0, terms, termination }
    }

    pub fn from_u64(a0: i64, terms: &[u64], termination: Termination) -> Self {
        Self::new(BigInt::from(a0), terms.iter().map(|t| BigUint::from(*t)).collect(), termination)
    }

    /// True when the expansion terminated, for either reason.
    pub fn exhausted(&self) -> bool {
        self.termination != Termination::Open
    }

    pub fn is_exact_rational(&self) -> bool {
        self.termination == Termination::Exact
    }

    /// Quotient `a_n` (with `a_0` for `n == 0`).
    pub fn quotient(&self, n: usize) -> Option<BigInt> {
        if n == 0 {
            Some(self.a0.clone())
        } else {
            self.terms.get(n - 1).map(|t| BigInt::from(t.clone()))
        }
    }

    /// The same expansion as a [`RealSpec`] quotient list.
    pub fn to_real(&self) -> Result<RealSpec> {
        RealSpec::new(RealKind::Quotients {
            a0: self.a0.clone(),
            terms: self.terms.clone(),
            open: self.termination == Termination::Open,
        })
    }
}

impl fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.a0)?;
        for (i, t) in self.terms.iter().enumerate() {
            write!(f, "{}{}", if i == 0 { "; " } else { ", " }, t)?;
        }
        if self.termination == Termination::Open {
            write!(f, "{}...", if self.terms.is_empty() { "; " } else { ", " })?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub n: usize,
    pub p: BigInt,
    pub q: BigUint,
}

/// Expand `x` into at most `max_terms` partial quotients after `a0`.
pub fn cf_expand(x: &RealSpec, max_terms: usize) -> ContinuedFraction {
    match x.kind() {
        RealKind::Quotients { a0, terms, open } => {
            let mut out = ContinuedFraction::new(
                a0.clone(),
                terms.clone(),
                if *open { Termination::Open } else { Termination::Exact },
            );
            if out.terms.len() > max_terms {
                out.terms.truncate(max_terms);
                out.termination = Termination::Open;
            }
            out
        }
        RealKind::Decimal { numer, scale } => {
            let den = BigInt::from(10u8).pow(*scale);
            let (terms, a0) = rational_quotients(numer, &den);
            let limit = BigUint::from(10u8).pow(*scale);
            let (mut q_prev, mut q) = (BigUint::zero(), BigUint::one());
            let mut kept = Vec::new();
            let mut termination = Termination::Exact;
            for a in terms.into_iter() {
                let next = &a * &q + &q_prev;
                if &next * &next > limit {
                    termination = Termination::PrecisionLimit;
                    break;
                }
                if kept.len() == max_terms {
                    termination = Termination::Open;
                    break;
                }
                kept.push(a);
                q_prev = core::mem::replace(&mut q, next);
            }
            ContinuedFraction::new(a0, kept, termination)
        }
        RealKind::Surd { .. } => {
            let ExactValue::Surd { p, q, d, r } = x.value() else { unreachable!() };
            surd_expand(p, q, d, r, max_terms)
        }
    }
}

/// Periodic algorithm on `(P + sqrt D) / Q` with `Q | D - P^2`.
fn surd_expand(p: BigInt, q: BigInt, d: BigUint, r: BigInt, max_terms: usize) -> ContinuedFraction {
    // (p + q sqrt d)/r  ->  (P + sqrt D)/Q
    let sign = if q.is_negative() { -BigInt::one() } else { BigInt::one() };
    let mut dd = &q * &q * BigInt::from(d);
    let mut pp = &sign * &p;
    let mut qq = &sign * &r;
    if !(&dd - &pp * &pp).is_multiple_of(&qq) {
        let aq = qq.abs();
        dd = dd * &aq * &aq;
        pp *= &aq;
        qq *= &aq;
    }
    let s = BigInt::from(dd.magnitude().sqrt());
    let next = |pp: &mut BigInt, qq: &mut BigInt| -> BigInt {
        let a = if qq.is_positive() { (&*pp + &s).div_floor(qq) } else { (&*pp + &s + 1u8).div_floor(qq) };
        let np = &a * &*qq - &*pp;
        let nq = (&dd - &np * &np) / &*qq;
        *pp = np;
        *qq = nq;
        a
    };
    let a0 = next(&mut pp, &mut qq);
    let mut terms = Vec::with_capacity(max_terms);
    for _ in 0..max_terms {
        let a = next(&mut pp, &mut qq);
        terms.push(a.to_biguint().expect("positive quotient"));
    }
    ContinuedFraction::new(a0, terms, Termination::Open)
}

/// Convergents `p_k / q_k` for `k = 0..=n`.
pub fn convergents(cf: &ContinuedFraction, n: usize) -> Result<Vec<Convergent>> {
    if n > cf.terms.len() {
        return Err(Error::DepthExceedsExpansion { requested: n, available: cf.terms.len() });
    }
    let mut out = Vec::with_capacity(n + 1);
    let (mut p2, mut p1) = (BigInt::zero(), BigInt::one());
    let (mut q2, mut q1) = (BigUint::one(), BigUint::zero());
    for k in 0..=n {
        let a = cf.quotient(k).expect("index checked");
        let p = &a * &p1 + &p2;
        let q = (&a * BigInt::from(q1.clone()) + BigInt::from(q2.clone())).to_biguint().expect("q positive");
        p2 = core::mem::replace(&mut p1, p.clone());
        q2 = core::mem::replace(&mut q1, q.clone());
        out.push(Convergent { n: k, p, q });
    }
    Ok(out)
}

/// The error sandwich `1/(q_n (q_n + q_{n+1})) < |x - p_n/q_n| < 1/(q_n q_{n+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBounds {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    pub actual: f64,
    /// Both strict inequalities, checked in exact integer arithmetic.
    pub strict: bool,
}

/// Bounds for `|x - p_n/q_n|` together with the actual value.
pub fn approx_error_bounds(x: &RealSpec, n: usize) -> Result<ErrorBounds> {
    let cf = cf_expand(x, n + 1);
    let cv = convergents(&cf, n + 1)?;
    let (p, q, q1) = (&cv[n].p, BigInt::from(cv[n].q.clone()), BigInt::from(cv[n + 1].q.clone()));
    let value = x.value();
    // delta = |q x - p| in fixed point with enough bits to resolve 1/q_{n+1}
    let bits = (2 * q1.bits() + 128) as u32;
    let one = BigInt::one() << bits as usize;
    let (lo, hi) = match &value {
        ExactValue::Rational { num, den } => {
            let exact = (&q * num - p * den).abs();
            // exact comparison: delta = exact / den
            let strict_lower = &exact * (&q + &q1) > *den;
            let strict_upper = &exact * &q1 < *den;
            let actual = fixed_to_f64(&((exact << bits as usize) / den), bits) / fixed_to_f64(&q, 0);
            return Ok(ErrorBounds {
                n,
                lower: 1.0 / fixed_to_f64(&(&q * (&q + &q1)), 0),
                upper: 1.0 / fixed_to_f64(&(&q * &q1), 0),
                actual,
                strict: strict_lower && strict_upper,
            });
        }
        ExactValue::Surd { .. } => {
            let xs = value.scaled(bits);
            let d = &q * &xs - (p << bits as usize);
            // xs is floor(x 2^bits) up to one unit, so q x 2^bits lies within (d - q, d + 2q)
            let a = &d - &q;
            let b = &d + &q * 2u8;
            if a.is_positive() || b.is_negative() {
                let (a, b) = (a.abs(), b.abs());
                (a.clone().min(b.clone()), a.max(b))
            } else {
                (BigInt::zero(), a.abs().max(b.abs()))
            }
        }
    };
    let strict_lower = &lo * (&q + &q1) > one;
    let strict_upper = &hi * &q1 < one;
    let mid = (&lo + &hi) / 2u8;
    let actual = fixed_to_f64(&mid, bits) / fixed_to_f64(&q, 0);
    Ok(ErrorBounds {
        n,
        lower: 1.0 / fixed_to_f64(&(&q * (&q + &q1)), 0),
        upper: 1.0 / fixed_to_f64(&(&q * &q1), 0),
        actual,
        strict: strict_lower && strict_upper,
    })
}
