use core::ops::{Add, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::Zero;

/// Number of fractional bits carried by a [`Phase`].
pub const PHASE_FRAC_BITS: u32 = 255;

/// A real number reduced modulo 2, held as a 256-bit fixed-point value with
/// 255 fractional bits.
///
/// Wrapping arithmetic on the limbs is arithmetic modulo 2, so integer
/// multiples `j * y mod 2` are exact once `y` itself has been reduced. This is
/// what the sine factors need: `sin(pi * y)` only depends on `y mod 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase([u64; 4]);

impl Phase {
    pub const ZERO: Phase = Phase([0; 4]);
    pub const HALF: Phase = Phase([0, 0, 0, 1 << 62]);
    pub const ONE: Phase = Phase([0, 0, 0, 1 << 63]);

    pub fn from_limbs(limbs: [u64; 4]) -> Self {
        Phase(limbs)
    }

    pub fn limbs(&self) -> [u64; 4] {
        self.0
    }

    /// Exact reduction of a binary64 value. Bits below 2^-255 are dropped.
    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 || !v.is_finite() {
            return Phase::ZERO;
        }
        let bits = v.abs().to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let (mant, exp) = if raw_exp == 0 {
            (bits & ((1 << 52) - 1), -1074)
        } else {
            ((bits & ((1 << 52) - 1)) | (1 << 52), raw_exp - 1075)
        };
        // |v| * 2^255 = mant * 2^(exp + 255)
        let shift = exp + PHASE_FRAC_BITS as i32;
        let mag = if shift >= 256 {
            Phase::ZERO
        } else if shift >= 0 {
            Phase::shl_u64(mant, shift as u32)
        } else if shift > -64 {
            Phase([mant >> (-shift) as u32, 0, 0, 0])
        } else {
            Phase::ZERO
        };
        if v < 0.0 {
            -mag
        } else {
            mag
        }
    }

    /// Reduce `x / 2^bits` modulo 2 (floor rounding at the last bit).
    pub fn from_scaled(x: &BigInt, bits: u32) -> Self {
        let shifted = if bits >= PHASE_FRAC_BITS {
            x >> (bits - PHASE_FRAC_BITS) as usize
        } else {
            x << (PHASE_FRAC_BITS - bits) as usize
        };
        let modulus = BigInt::from(1u8) << 256usize;
        let reduced = shifted.mod_floor(&modulus);
        let mut limbs = [0u64; 4];
        if !reduced.is_zero() {
            let (_, digits) = reduced.to_u64_digits();
            for (slot, d) in limbs.iter_mut().zip(digits) {
                *slot = d;
            }
        }
        Phase(limbs)
    }

    /// The reduced value as a signed big integer scaled by 2^255, in [0, 2^256).
    pub fn to_scaled(&self) -> BigInt {
        let mut words = self.0.to_vec();
        while words.last() == Some(&0) {
            words.pop();
        }
        if words.is_empty() {
            return BigInt::zero();
        }
        BigInt::from_slice(
            Sign::Plus,
            &words
                .iter()
                .flat_map(|w| [*w as u32, (*w >> 32) as u32])
                .collect::<alloc::vec::Vec<u32>>(),
        )
    }

    fn shl_u64(v: u64, shift: u32) -> Self {
        let mut limbs = [0u64; 4];
        let word = (shift / 64) as usize;
        let bit = shift % 64;
        if word < 4 {
            limbs[word] = v << bit;
            if bit != 0 && word + 1 < 4 {
                limbs[word + 1] = v >> (64 - bit);
            }
        }
        Phase(limbs)
    }

    /// `j * self mod 2`.
    pub fn mul_u64(&self, j: u64) -> Self {
        let mut out = [0u64; 4];
        let mut carry: u128 = 0;
        for (i, limb) in self.0.iter().enumerate() {
            let prod = (*limb as u128) * (j as u128) + carry;
            out[i] = prod as u64;
            carry = prod >> 64;
        }
        Phase(out)
    }

    pub fn mul_i64(&self, j: i64) -> Self {
        let p = self.mul_u64(j.unsigned_abs());
        if j < 0 {
            -p
        } else {
            p
        }
    }

    /// The phase of the integer `k` (0 or 1 modulo 2).
    pub fn integer(k: i64) -> Self {
        if k.rem_euclid(2) == 1 {
            Phase::ONE
        } else {
            Phase::ZERO
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 4]
    }

    /// True when the represented value is an integer.
    pub fn is_integer(&self) -> bool {
        self.0[0] == 0 && self.0[1] == 0 && self.0[2] == 0 && (self.0[3] << 1) == 0
    }

    /// Value in [0, 2) rounded to binary64.
    pub fn to_f64(&self) -> f64 {
        fixed_to_f64(&self.0)
    }

    /// Split into the sign of `sin(pi y)` and the folded fraction
    /// `g = <y>` in [0, 1/2], kept in fixed point.
    fn fold(&self) -> (i8, [u64; 4]) {
        let upper = self.0[3] >> 63 == 1;
        let mut frac = self.0;
        frac[3] &= !(1u64 << 63);
        if frac == [0; 4] {
            return (0, frac);
        }
        // frac > 1/2 folds to 1 - frac
        let above_half = frac[3] > (1 << 62) || (frac[3] == (1 << 62) && (frac[0] | frac[1] | frac[2]) != 0);
        let g = if above_half { (Phase::ONE - Phase(frac)).0 } else { frac };
        (if upper { -1 } else { 1 }, g)
    }

    /// Distance `<y>` to the nearest integer.
    pub fn dist_to_integer(&self) -> f64 {
        let (_, g) = self.fold();
        fixed_to_f64(&g)
    }

    /// `sin(pi y)` as (sign, magnitude). The sign is 0 only for an exact integer.
    pub fn sinpi(&self) -> (i8, f64) {
        let (sign, g) = self.fold();
        if sign == 0 {
            return (0, 0.0);
        }
        let gf = fixed_to_f64(&g);
        (sign, libm::sin(core::f64::consts::PI * gf))
    }

    /// Folded fraction `<y>` as fixed-point limbs together with the sign of `sin(pi y)`.
    pub fn folded(&self) -> (i8, Phase) {
        let (s, g) = self.fold();
        (s, Phase(g))
    }
}

/// Convert a 256-bit fixed-point value with 255 fractional bits to binary64.
fn fixed_to_f64(limbs: &[u64; 4]) -> f64 {
    let Some(top) = (0..4).rev().find(|&i| limbs[i] != 0) else {
        return 0.0;
    };
    let lz = limbs[top].leading_zeros();
    let hi_bit = top as i32 * 64 + (63 - lz as i32);
    // gather the 64 bits starting at hi_bit
    let mut window: u64 = limbs[top] << lz;
    if lz != 0 && top > 0 {
        window |= limbs[top - 1] >> (64 - lz);
    }
    let sticky = (lz != 0 && top > 0 && (limbs[top - 1] << lz) != 0)
        || (top > 1 && limbs[..top - 1].iter().any(|&w| w != 0))
        || (lz == 0 && top > 0 && limbs[..top].iter().any(|&w| w != 0));
    // collapse sticky bits into the lowest bit so the u64->f64 rounding is faithful
    let window = window | sticky as u64;
    let scale = hi_bit - 63 - PHASE_FRAC_BITS as i32;
    (window as f64) * libm::exp2(scale as f64)
}

impl Add for Phase {
    type Output = Phase;
    fn add(self, rhs: Phase) -> Phase {
        let mut out = [0u64; 4];
        let mut carry = false;
        for i in 0..4 {
            let (s1, c1) = self.0[i].overflowing_add(rhs.0[i]);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            out[i] = s2;
            carry = c1 || c2;
        }
        Phase(out)
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        let mut out = [0u64; 4];
        let mut carry = true;
        for i in 0..4 {
            let (s, c) = (!self.0[i]).overflowing_add(carry as u64);
            out[i] = s;
            carry = c;
        }
        Phase(out)
    }
}

impl Sub for Phase {
    type Output = Phase;
    fn sub(self, rhs: Phase) -> Phase {
        self + (-rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_round_trip() {
        for v in [0.5, 0.25, 1.75, 0.1, 1.0 / 3.0, 1e-20] {
            assert_eq!(Phase::from_f64(v).to_f64(), v);
        }
        assert_eq!(Phase::from_f64(-0.5).to_f64(), 1.5);
        assert_eq!(Phase::from_f64(3.25).to_f64(), 1.25);
        assert!(Phase::from_f64(4.0).is_zero());
    }

    #[test]
    fn modular_arithmetic() {
        let a = Phase::from_f64(0.75);
        assert_eq!((a + a).to_f64(), 1.5);
        assert_eq!((a + a + a).to_f64(), 0.25);
        assert_eq!(a.mul_u64(3).to_f64(), 0.25);
        assert_eq!(a.mul_i64(-1).to_f64(), 1.25);
        assert!(Phase::ONE.is_integer());
        assert!(!Phase::HALF.is_integer());
    }

    #[test]
    fn sine_signs_and_distance() {
        assert_eq!(Phase::HALF.sinpi(), (1, 1.0));
        assert_eq!(Phase::from_f64(1.5).sinpi(), (-1, 1.0));
        assert_eq!(Phase::ONE.sinpi().0, 0);
        let (s, v) = Phase::from_f64(1.0 / 6.0).sinpi();
        assert_eq!(s, 1);
        assert!((v - 0.5).abs() < 1e-16);
        assert!((Phase::from_f64(0.3).dist_to_integer() - 0.3).abs() < 1e-16);
        assert!((Phase::from_f64(0.7).dist_to_integer() - 0.3).abs() < 1e-16);
    }

    #[test]
    fn scaled_round_trip() {
        let x = BigInt::from(3u8) << 300usize; // 0.75 at 302 fractional bits
        let p = Phase::from_scaled(&x, 302);
        assert_eq!(p.to_f64(), 0.75);
        assert_eq!(Phase::from_scaled(&p.to_scaled(), PHASE_FRAC_BITS), p);
        let neg = Phase::from_scaled(&(-x), 302);
        assert_eq!(neg.to_f64(), 1.25);
    }
}
