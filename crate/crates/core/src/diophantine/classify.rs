use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::cf::{cf_expand, convergents, ContinuedFraction, Termination};
use super::real::{big_ln, ExactValue, RealSpec};
use crate::error::{Error, Result};

/// Smallest `q_n` whose witness counts towards the verdict.
pub const WITNESS_MIN_Q: u64 = 5;

/// Default bit budget for [`construct_l_member`].
pub const DEFAULT_BIT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LVerdict {
    InLWitnessed,
    NotInLToDepth,
    Rational,
}

impl LVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            LVerdict::InLWitnessed => "InL-witnessed",
            LVerdict::NotInLToDepth => "NotInL-to-depth",
            LVerdict::Rational => "Rational",
        }
    }
}

impl core::fmt::Display for LVerdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An index with `a_{n+1} >= 2^{q_n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub n: usize,
    pub quotient: BigUint,
    pub q_n: BigUint,
    /// `a_{n+1}^{1/q_n}`.
    pub base: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePoint {
    pub q: f64,
    /// `ln<q x> / q`.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LClassification {
    pub verdict: LVerdict,
    pub depth_examined: usize,
    pub witnesses: Vec<Witness>,
    pub profile: Vec<ProfilePoint>,
}

impl LClassification {
    /// Witnesses that count towards the verdict.
    pub fn strong_witnesses(&self) -> impl Iterator<Item = &Witness> {
        self.witnesses.iter().filter(|w| w.q_n >= BigUint::from(WITNESS_MIN_Q))
    }
}

/// Scan the expansion of `x` up to index `depth` for witnesses of membership in the
/// exceptional set. The verdict only speaks about the examined depth.
pub fn classify_l(x: &RealSpec, depth: usize) -> Result<LClassification> {
    if depth < 2 {
        return Err(Error::Domain("classification depth must be at least 2".into()));
    }
    let cf = cf_expand(x, depth + 1);
    classify_expansion(x, &cf, depth)
}

fn classify_expansion(x: &RealSpec, cf: &ContinuedFraction, depth: usize) -> Result<LClassification> {
    let available = cf.terms.len();
    let cv = convergents(cf, available)?;
    let last = depth.min(available.saturating_sub(1));
    let mut witnesses = Vec::new();
    if available > 0 {
        for n in 0..=last {
            let q = &cv[n].q;
            let a = &cf.terms[n];
            if q < &BigUint::from(2u8) {
                continue;
            }
            let Some(qn) = q.to_u64() else { continue };
            // a >= 2^q  <=>  bits(a) > q
            if a.bits() > qn {
                witnesses.push(Witness { n, quotient: a.clone(), q_n: q.clone(), base: libm::exp(big_ln(a) / qn as f64) });
            }
        }
    }
    let strong = witnesses.iter().any(|w| w.q_n >= BigUint::from(WITNESS_MIN_Q));
    let verdict = if strong {
        LVerdict::InLWitnessed
    } else if cf.termination == Termination::Exact {
        LVerdict::Rational
    } else {
        LVerdict::NotInLToDepth
    };
    let value = x.value();
    let mut profile = Vec::new();
    for (n, c) in cv.iter().enumerate().take(last + 2) {
        let next_q = cv.get(n + 1).map(|c| c.q.bits()).unwrap_or(2 * c.q.bits());
        if let Some(v) = log_dist_over_q(&value, &c.p, &c.q, next_q) {
            profile.push(ProfilePoint { q: crate::diophantine::real::fixed_to_f64(&BigInt::from(c.q.clone()), 0), value: v });
        }
    }
    Ok(LClassification { verdict, depth_examined: last, witnesses, profile })
}

/// `ln<q x> / q` using the convergent numerator `p`; `None` when `q x` is an integer
/// or the distance cannot be resolved.
fn log_dist_over_q(x: &ExactValue, p: &BigInt, q: &BigUint, next_q_bits: u64) -> Option<f64> {
    let qi = BigInt::from(q.clone());
    let ln_q = big_ln(q);
    let ln_delta = match x {
        ExactValue::Rational { num, den } => {
            let mut d = (&qi * num - p * den).abs();
            if d.is_zero() {
                return None;
            }
            if &d * 2u8 > *den {
                d = den - &d;
            }
            big_ln(d.magnitude()) - big_ln(den.magnitude())
        }
        ExactValue::Surd { .. } => {
            let bits = (2 * next_q_bits.max(q.bits()) + 128) as u32;
            let xs = x.scaled(bits);
            let one = BigInt::one() << bits as usize;
            let mut d = (&qi * xs - (p << bits as usize)).abs();
            if &d * 2u8 > one {
                d = &one - &d;
            }
            if d <= qi {
                return None;
            }
            big_ln(d.magnitude()) - bits as f64 * core::f64::consts::LN_2
        }
    };
    Some(ln_delta / libm::exp(ln_q))
}

/// Extend `prefix` by `stages` quotients `a_{n+1} = 2^{q_n}`.
pub fn construct_l_member(prefix: &ContinuedFraction, stages: usize) -> Result<ContinuedFraction> {
    construct_l_member_with_budget(prefix, stages, DEFAULT_BIT_BUDGET)
}

pub fn construct_l_member_with_budget(prefix: &ContinuedFraction, stages: usize, budget: u64) -> Result<ContinuedFraction> {
    if stages == 0 {
        return Err(Error::Domain("at least one stage is required".into()));
    }
    let cv = convergents(prefix, prefix.terms.len())?;
    let mut q_prev = if cv.len() >= 2 { cv[cv.len() - 2].q.clone() } else { BigUint::one() };
    let mut q = cv.last().expect("at least a0").q.clone();
    let mut terms = prefix.terms.clone();
    for _ in 0..stages {
        let bits = match q.to_u64() {
            Some(b) if b <= budget => b,
            _ => return Err(Error::BitBudget { bits: q.bits(), budget }),
        };
        let a = BigUint::one() << bits as usize;
        let next = &a * &q + &q_prev;
        terms.push(a);
        q_prev = core::mem::replace(&mut q, next);
    }
    Ok(ContinuedFraction::new(prefix.a0.clone(), terms, Termination::Open))
}

/// Decade maxima of `|ln<q x>| / q` over `q` in `[q_lo, q_hi]`, by direct scan.
/// Each entry is `(decade start, decade end, maximum)`.
pub fn limit_profile_decades(x: &RealSpec, q_lo: u64, q_hi: u64) -> Vec<(u64, u64, f64)> {
    let step = x.phase();
    let mut ph = step.mul_u64(q_lo.max(1));
    let mut out: Vec<(u64, u64, f64)> = Vec::new();
    let mut q = q_lo.max(1);
    while q <= q_hi {
        let decade = libm::floor(libm::log10(q as f64) + 1e-12) as u32;
        let start = 10u64.pow(decade);
        let end = (start.saturating_mul(10) - 1).min(q_hi);
        let dist = ph.dist_to_integer();
        let v = if dist > 0.0 { -libm::log(dist) / q as f64 } else { f64::INFINITY };
        match out.last_mut() {
            Some(last) if last.0 == start => last.2 = last.2.max(v),
            _ => out.push((start, end, v)),
        }
        ph = ph + step;
        q += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt2_has_no_witnesses() {
        for depth in [2, 10, 50, 200] {
            let c = classify_l(&RealSpec::sqrt(2).unwrap(), depth).unwrap();
            assert_eq!(c.verdict, LVerdict::NotInLToDepth);
            assert!(c.witnesses.is_empty());
            assert_eq!(c.depth_examined, depth);
        }
    }

    #[test]
    fn rational_and_decimal() {
        assert_eq!(classify_l(&"0.5".parse().unwrap(), 5).unwrap().verdict, LVerdict::Rational);
        assert_eq!(classify_l(&"cf:[1;2,2]".parse().unwrap(), 5).unwrap().verdict, LVerdict::Rational);
        assert_eq!(classify_l(&"1.4142135623".parse().unwrap(), 10).unwrap().verdict, LVerdict::NotInLToDepth);
        assert!(classify_l(&RealSpec::sqrt(2).unwrap(), 1).is_err());
    }

    #[test]
    fn construction_examples() {
        let prefix = ContinuedFraction::from_u64(0, &[2], Termination::Exact);
        let one = construct_l_member(&prefix, 1).unwrap();
        assert_eq!(one.terms, [BigUint::from(2u8), BigUint::from(4u8)]);
        let two = construct_l_member(&prefix, 2).unwrap();
        assert_eq!(two.terms, [BigUint::from(2u8), BigUint::from(4u8), BigUint::from(512u16)]);
        let three = construct_l_member(&prefix, 3).unwrap();
        assert_eq!(three.terms[3], BigUint::one() << 4610usize);
        for (cf, stages) in [(&two, 2), (&three, 3)] {
            let c = classify_l(&cf.to_real().unwrap(), cf.terms.len() + 2).unwrap();
            assert_eq!(c.verdict, LVerdict::InLWitnessed);
            assert_eq!(c.witnesses.len(), stages);
            assert!(c.witnesses.iter().all(|w| (w.base - 2.0).abs() < 1e-12));
        }
        assert!(matches!(construct_l_member_with_budget(&prefix, 4, 1000), Err(Error::BitBudget { .. })));
    }

    #[test]
    fn cli_literal_is_witnessed() {
        let c = classify_l(&"cf:[0;2,4,512]".parse().unwrap(), 10).unwrap();
        assert_eq!(c.verdict, LVerdict::InLWitnessed);
        assert_eq!(c.strong_witnesses().count(), 1);
    }

    #[test]
    fn rational_shift_closure() {
        let prefix = ContinuedFraction::from_u64(0, &[2], Termination::Exact);
        let x = construct_l_member(&prefix, 3).unwrap().to_real().unwrap();
        let depth = 4;
        assert_eq!(classify_l(&x, depth).unwrap().verdict, LVerdict::InLWitnessed);
        for (num, den, shift) in [(1, 1, 1), (2, 1, 0)] {
            let y = x.affine(num, den, shift).unwrap();
            assert_eq!(classify_l(&y, depth + 2).unwrap().verdict, LVerdict::InLWitnessed, "{num}/{den} x + {shift}");
        }
    }

    #[test]
    fn profile_shrinks_for_badly_approximable() {
        for x in [RealSpec::sqrt(2).unwrap(), RealSpec::golden_ratio()] {
            let dec = limit_profile_decades(&x, 100, 100_000);
            assert_eq!(dec.len(), 4);
            assert!(dec.iter().all(|d| d.2 <= 0.15));
            assert!(dec.windows(2).all(|w| w[1].2 < w[0].2));
            let c = classify_l(&x, 30).unwrap();
            assert!(c.profile.iter().all(|p| p.value < 0.0 && p.value > -1.0));
        }
    }
}
