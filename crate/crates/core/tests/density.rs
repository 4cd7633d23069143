#![allow(clippy::excessive_precision)]

use std::sync::OnceLock;

use proptest::prelude::*;
use supdens_core::coefficients::StableParams;
use supdens_core::density::*;
use supdens_core::diophantine::RealSpec;

fn upper() -> &'static Evaluator {
    static EV: OnceLock<Evaluator> = OnceLock::new();
    EV.get_or_init(|| Evaluator::new(StableParams::new(RealSpec::sqrt(2).unwrap(), 0.5).unwrap()).unwrap())
}

fn lower() -> &'static Evaluator {
    static EV: OnceLock<Evaluator> = OnceLock::new();
    EV.get_or_init(|| {
        let alpha = RealSpec::sqrt(2).unwrap().reciprocal().unwrap();
        Evaluator::new(StableParams::new(alpha, 0.4).unwrap()).unwrap()
    })
}

#[test]
fn reference_values() {
    // 20-digit values of the density for alpha = sqrt 2, rho = 1/2
    for (x, want) in [(1.0, 0.35981877986707189611), (0.1, 0.89010759663889775489)] {
        let r = upper().density(x, 1e-12, Mode::Auto).unwrap();
        assert!((r.value - want).abs() <= 1e-11 * want, "p({x}) = {}", r.value);
    }
}

#[test]
fn regimes_agree_where_both_converge() {
    let ev = upper();
    let mut converged = 0;
    for x in [5.0, 6.0, 8.0, 10.0, 20.0, 50.0] {
        let conv = ev.density(x, 1e-10, Mode::Convergent).unwrap();
        let asym = ev.asymptotic(x, 1e-10, Expansion::Large).unwrap();
        if conv.status != Status::Converged {
            continue;
        }
        converged += 1;
        let tol = 1e-4f64.max(asym.est_error / asym.value.abs());
        assert!((conv.value - asym.value).abs() <= tol * asym.value.abs(), "x = {x}");
    }
    assert!(converged >= 1);
}

#[test]
fn total_mass_is_one() {
    for ev in [upper(), lower()] {
        let m = ev.total_mass(1e-10).unwrap();
        assert!((m.mass - 1.0).abs() <= 1e-8, "{}", m.mass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn density_is_nonnegative(lx in -3.0f64..3.0, which in prop::bool::ANY) {
        let ev = if which { upper() } else { lower() };
        let x = 10f64.powf(lx);
        let r = ev.density(x, 1e-10, Mode::Auto).unwrap();
        prop_assert!(r.value >= -1e-12 * (1.0 + r.est_error / 1e-10), "p({}) = {}", x, r.value);
    }

    #[test]
    fn cdf_is_monotone(lx in -3.0f64..3.0, dl in 0.001f64..0.5, which in prop::bool::ANY) {
        let ev = if which { upper() } else { lower() };
        let (a, b) = (10f64.powf(lx), 10f64.powf(lx + dl));
        let fa = ev.cdf(a, 1e-11).unwrap();
        let fb = ev.cdf(b, 1e-11).unwrap();
        prop_assert!(fb.value >= fa.value - fa.est_error - fb.est_error, "F({})={} F({})={}", a, fa.value, b, fb.value);
        prop_assert!((-1e-10..=1.0 + 1e-10).contains(&fa.value));
    }
}
