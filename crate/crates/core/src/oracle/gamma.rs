//! Complex gamma function.

use num_complex::Complex64;

const PI: f64 = core::f64::consts::PI;

/// `ln Gamma(z)` on the principal branch of the Stirling sum (not continuous across the negative axis).
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        let s = (z * PI).sin();
        return Complex64::new(libm::log(PI), 0.0) - s.ln() - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.norm() < 18.0 {
        shift += w.ln();
        w += 1.0;
    }
    // B_{2k} / (2k (2k - 1))
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
        -3617.0 / 122400.0,
    ];
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in C {
        series += p * c;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * libm::log(2.0 * PI) + series - shift
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_and_complex_values() {
        let g = gamma(Complex64::new(0.5, 0.0));
        assert!((g.re - PI.sqrt()).abs() < 1e-14 && g.im.abs() < 1e-14);
        let g = gamma(Complex64::new(5.0, 0.0));
        assert!((g.re - 24.0).abs() < 1e-12);
        // Gamma(1 + i), independent 30-digit value
        let g = gamma(Complex64::new(1.0, 1.0));
        assert!((g.re - 0.498015668118356042713691117462).abs() < 1e-14);
        assert!((g.im + 0.154949828301810685124955130484).abs() < 1e-14);
        let g = gamma(Complex64::new(-1.5, 0.3));
        let back = gamma(Complex64::new(-0.5, 0.3)) / Complex64::new(-1.5, 0.3);
        assert!((g - back).norm() / g.norm() < 1e-13);
    }
}
