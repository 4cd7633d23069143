//! Software extended precision on top of `astro-float`.
//!
//! Only what the series re-summation needs: arithmetic, `ln`, `exp`,
//! `sin(pi y)`, log-gamma and reciprocal gamma for real arguments.

use alloc::vec::Vec;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::SignedLogValue;

const RM: RoundingMode = RoundingMode::ToEven;

/// A precision setting plus the cached constants it needs.
pub struct ExtContext {
    prec: usize,
    digits: u32,
    cc: Consts,
    pi: BigFloat,
    half_ln_2pi: BigFloat,
    // B_{2k} / (2k (2k - 1)) for k = 1..
    stirling: Vec<BigFloat>,
    shift: u64,
}

impl core::fmt::Debug for ExtContext {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ExtContext").field("digits", &self.digits).field("prec", &self.prec).finish()
    }
}

impl ExtContext {
    /// Context carrying at least `digits` significant decimal digits.
    pub fn new(digits: u32) -> Self {
        let digits = digits.max(20);
        let bits = (digits as f64 * core::f64::consts::LOG2_10) as usize + 64;
        let prec = bits.div_ceil(64) * 64;
        let mut cc = Consts::new().expect("astro-float constants");
        let pi = cc.pi(prec, RM);
        let two_pi = pi.mul(&BigFloat::from_u64(2, prec), prec, RM);
        let half_ln_2pi = two_pi.ln(prec, RM, &mut cc).div(&BigFloat::from_u64(2, prec), prec, RM);
        // Stirling tail after K terms is about (K / (pi e z))^(2K); z >= digits and
        // K = digits / 2 leave it below 10^-digits.
        let k_terms = (digits as usize).div_ceil(2) + 2;
        let stirling = stirling_coefficients(k_terms, prec);
        ExtContext { prec, digits, cc, pi, half_ln_2pi, stirling, shift: digits as u64 + 10 }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    pub fn pi(&self) -> &BigFloat {
        &self.pi
    }

    pub fn from_f64(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.prec)
    }

    pub fn from_i64(&self, v: i64) -> BigFloat {
        BigFloat::from_i64(v, self.prec)
    }

    /// Exact conversion of a big integer (rounded to the working precision).
    pub fn from_bigint(&self, v: &BigInt) -> BigFloat {
        bigint_to_bf(v, self.prec)
    }

    /// `v / 2^bits` for a fixed-point big integer.
    pub fn from_scaled(&self, v: &BigInt, bits: u32) -> BigFloat {
        let num = self.from_bigint(v);
        let den = BigFloat::from_u64(2, self.prec).powi(bits as usize, self.prec, RM);
        num.div(&den, self.prec, RM)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.prec, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.prec, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.prec, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.prec, RM)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.prec, RM, &mut self.cc)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.prec, RM, &mut self.cc)
    }

    pub fn sin(&mut self, a: &BigFloat) -> BigFloat {
        a.sin(self.prec, RM, &mut self.cc)
    }

    /// `sin(pi y)`.
    pub fn sinpi(&mut self, y: &BigFloat) -> BigFloat {
        let r = y.rem(&BigFloat::from_u64(2, self.prec));
        let arg = self.mul(&self.pi.clone(), &r);
        self.sin(&arg)
    }

    /// `ln Gamma(x)` for `x > 0`.
    pub fn ln_gamma_pos(&mut self, x: &BigFloat) -> BigFloat {
        let prec = self.prec;
        // shift up to z = x + N >= digits + 10
        let mut z = x.clone();
        let mut prod = BigFloat::from_u64(1, prec);
        let target = BigFloat::from_u64(self.shift, prec);
        let one = BigFloat::from_u64(1, prec);
        while z.cmp(&target).map(|c| c < 0).unwrap_or(false) {
            prod = prod.mul(&z, prec, RM);
            z = z.add(&one, prec, RM);
        }
        let ln_z = self.ln(&z);
        let half = BigFloat::from_f64(0.5, prec);
        let mut acc = z.sub(&half, prec, RM).mul(&ln_z, prec, RM).sub(&z, prec, RM).add(&self.half_ln_2pi, prec, RM);
        let z2 = z.mul(&z, prec, RM);
        let mut zpow = z.clone();
        for c in &self.stirling {
            let term = c.div(&zpow, prec, RM);
            acc = acc.add(&term, prec, RM);
            zpow = zpow.mul(&z2, prec, RM);
        }
        let ln_prod = self.ln(&prod);
        acc.sub(&ln_prod, prec, RM)
    }

    /// `1 / Gamma(x)` for any real `x`, using `sin(pi x)` supplied by the caller
    /// when `x <= 0` (exact zero gives zero, matching the poles).
    pub fn recip_gamma(&mut self, x: &BigFloat, sin_pi_x: Option<&BigFloat>) -> BigFloat {
        let prec = self.prec;
        if x.is_positive() && !x.is_zero() {
            let lg = self.ln_gamma_pos(x);
            return self.exp(&lg.neg());
        }
        // 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi
        let s = match sin_pi_x {
            Some(s) => s.clone(),
            None => self.sinpi(x),
        };
        if s.is_zero() {
            return BigFloat::from_u64(0, prec);
        }
        let one = BigFloat::from_u64(1, prec);
        let lg = self.ln_gamma_pos(&one.sub(x, prec, RM));
        let g = self.exp(&lg);
        s.mul(&g, prec, RM).div(&self.pi, prec, RM)
    }

    /// `x^e` for `x > 0`.
    pub fn powf(&mut self, x: &BigFloat, e: &BigFloat) -> BigFloat {
        let l = self.ln(x);
        let p = self.mul(&l, e);
        self.exp(&p)
    }
}

/// Nearest binary64 value.
pub fn to_f64(v: &BigFloat) -> f64 {
    let Some((words, _, sign, exp, _)) = v.as_raw_parts() else {
        return f64::NAN;
    };
    let Some(top) = words.iter().rposition(|w| *w != 0) else {
        return 0.0;
    };
    // mantissa is normalised: value = 0.w_top w_{top-1} ... * 2^exp
    let hi = words[top];
    let sticky = words[..top].iter().any(|w| *w != 0) as u64;
    let m = (hi | sticky) as f64 / 18446744073709551616.0;
    let drop = (words.len() - 1 - top) as i32 * 64;
    let mag = m * libm::exp2((exp - drop) as f64);
    if sign == Sign::Neg {
        -mag
    } else {
        mag
    }
}

/// Signed-log view of an extended value (the log is good to binary64 accuracy).
pub fn to_slv(v: &BigFloat) -> SignedLogValue {
    let Some((words, _, sign, exp, _)) = v.as_raw_parts() else {
        return SignedLogValue::ZERO;
    };
    let Some(top) = words.iter().rposition(|w| *w != 0) else {
        return SignedLogValue::ZERO;
    };
    let m = words[top] as f64 / 18446744073709551616.0;
    let drop = (words.len() - 1 - top) as i64 * 64;
    let logabs = libm::log(m) + (exp as i64 - drop) as f64 * core::f64::consts::LN_2;
    SignedLogValue { sign: if sign == Sign::Neg { -1 } else { 1 }, logabs }
}

fn bigint_to_bf(v: &BigInt, prec: usize) -> BigFloat {
    if v.is_zero() {
        return BigFloat::from_u64(0, prec);
    }
    let (_, digits) = v.abs().to_u64_digits();
    // exact while the integer fits in `prec` bits; rounded otherwise
    let wprec = prec.max(digits.len() * 64 + 64);
    let base = BigFloat::from_u64(1 << 32, wprec).mul(&BigFloat::from_u64(1 << 32, wprec), wprec, RM);
    let mut acc = BigFloat::from_u64(0, wprec);
    for d in digits.iter().rev() {
        acc = acc.mul(&base, wprec, RM).add(&BigFloat::from_u64(*d, wprec), wprec, RM);
    }
    let mut out = acc;
    out.set_precision(prec, RM).expect("precision");
    if v.is_negative() {
        out.neg()
    } else {
        out
    }
}

/// Tangent numbers give the Bernoulli numbers in integer arithmetic:
/// `B_2k = (-1)^(k-1) 2k T_k / (4^k (4^k - 1))`.
fn stirling_coefficients(k_max: usize, prec: usize) -> Vec<BigFloat> {
    let mut t: Vec<BigInt> = alloc::vec![BigInt::zero(); k_max + 1];
    t[1] = BigInt::from(1u8);
    for k in 2..=k_max {
        t[k] = &t[k - 1] * BigInt::from(k - 1);
    }
    for k in 2..=k_max {
        for j in k..=k_max {
            t[j] = &t[j - 1] * BigInt::from(j - k) + &t[j] * BigInt::from(j - k + 2);
        }
    }
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let four_k = BigInt::from(1u8) << (2 * k);
        let num = &t[k] * BigInt::from(2 * k);
        let den = &four_k * (&four_k - 1u8) * BigInt::from(2 * k) * BigInt::from(2 * k - 1);
        let wprec = prec + 64;
        let mut c = bigint_to_bf(&num, wprec).div(&bigint_to_bf(&den, wprec), wprec, RM);
        if k % 2 == 0 {
            c = c.neg();
        }
        c.set_precision(prec, RM).expect("precision");
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        let ctx = ExtContext::new(40);
        for v in [1.0, -2.5, 1e-300, 123456.789, -7e200] {
            assert_eq!(to_f64(&ctx.from_f64(v)), v);
            let s = to_slv(&ctx.from_f64(v));
            assert!((s.to_f64() - v).abs() <= 1e-12 * v.abs());
        }
        let big = BigInt::from(3u8) << 200usize;
        let f = ctx.from_bigint(&big);
        assert!((to_f64(&f) / (3.0 * libm::exp2(200.0)) - 1.0).abs() < 1e-16);
        assert_eq!(to_f64(&ctx.from_scaled(&BigInt::from(3u8), 2)), 0.75);
    }

    #[test]
    fn bernoulli_prefix() {
        let c = stirling_coefficients(4, 128);
        // 1/12, -1/360, 1/1260, -1/1680
        let want = [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0];
        for (g, w) in c.iter().zip(want) {
            assert!((to_f64(g) - w).abs() < 1e-17);
        }
    }

    #[test]
    fn gamma_values() {
        let mut ctx = ExtContext::new(40);
        // ln Gamma(1/2) = ln(pi)/2
        let lg = ctx.ln_gamma_pos(&ctx.from_f64(0.5));
        let pi = ctx.pi().clone();
        let want = ctx.ln(&pi);
        let want = ctx.div(&want, &ctx.from_i64(2));
        let diff = to_f64(&ctx.sub(&lg, &want));
        assert!(diff.abs() < 1e-38, "{diff}");
        // 1/Gamma(5) = 1/24
        let r = ctx.recip_gamma(&ctx.from_i64(5), None);
        let d = to_f64(&ctx.sub(&ctx.mul(&r, &ctx.from_i64(24)), &ctx.from_i64(1)));
        assert!(d.abs() < 1e-38);
        // 1/Gamma(-1/2) = -1/(2 sqrt(pi))
        let r = to_f64(&ctx.recip_gamma(&ctx.from_f64(-0.5), None));
        assert!((r + 0.5 / libm::sqrt(core::f64::consts::PI)).abs() < 1e-16);
        assert!(ctx.recip_gamma(&ctx.from_i64(-3), Some(&ctx.from_i64(0))).is_zero());
    }
}
