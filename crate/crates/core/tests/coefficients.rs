use proptest::prelude::*;
use supdens_core::coefficients::*;
use supdens_core::diophantine::RealSpec;

#[allow(clippy::excessive_precision)]
// 34-digit values for alpha = sqrt 2, rho = 1/2
const A_REF: [(u64, u64, f64); 14] = [
    (0, 0, 0.4383958824955773806115410297450463),
    (0, 1, -0.2202017216120515492531489975783251),
    (0, 2, -0.07322581173531046419607510984251625),
    (0, 3, 0.04091775206810442835430420429758808),
    (1, 0, 0.2439847157329978337914630376790905),
    (1, 1, -0.09862142996445779856599537814237947),
    (1, 2, -0.02895330306748437283938417556636702),
    (2, 0, -0.04165057383229892762972964392562188),
    (2, 1, 0.01460147426068163085395548140608992),
    (2, 2, 0.003895215441384201619523598472851633),
    (3, 0, 0.05770100129643825265022415248188558),
    (3, 1, -0.01819524009261776406366628532246274),
    (4, 0, 0.04950969468418394538135022902911193),
    (5, 0, 0.002676842584374090077188238019546563),
];

fn fixture() -> StableParams {
    StableParams::new(RealSpec::sqrt(2).unwrap(), 0.5).unwrap()
}

#[test]
fn low_order_a_coefficients() {
    let p = fixture();
    let table = build_table(&p, CoeffKind::A, 5.0).unwrap();
    for (m, n, want) in A_REF {
        let got = coeff_a(&p, m, n).unwrap().to_f64();
        let tol = if (m, n) == (0, 0) { 1e-12 } else { 1e-10 };
        assert!((got - want).abs() <= tol * want.abs(), "a({m},{n}) = {got} vs {want}");
        assert_eq!(table.get(m as u32, n as u32).unwrap().to_f64(), got);
    }
}

#[test]
fn zero_pattern_and_cancelled_form() {
    // 1 - rho - n - m/alpha hits -n at m = 1 when rho = 1 - 1/alpha
    let alpha = RealSpec::sqrt(2).unwrap();
    let p = StableParams::new(alpha, 1.0 - core::f64::consts::FRAC_1_SQRT_2).unwrap();
    for n in 0..6 {
        assert!(coeff_a(&p, 1, n).unwrap().is_zero(), "a(1,{n})");
        let b = coeff_b(&p, 1, n + 1).unwrap();
        assert!(b.logabs.is_finite() && !b.is_zero());
    }
}

#[test]
fn cancelled_and_uncancelled_agree() {
    let p = fixture();
    let table = build_table(&p, CoeffKind::B, 10.0).unwrap();
    for e in &table.entries {
        let u = coeff_b_uncancelled(&p, e.m as u64, e.n as u64).unwrap().to_f64();
        let c = e.value.to_f64();
        assert!((c - u).abs() <= 1e-10 * u.abs(), "({}, {}): {c} vs {u}", e.m, e.n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn builds_are_bit_identical(rho in 0.3f64..0.7, t in 2.0f64..12.0) {
        let p = fixture();
        let p = StableParams::new(p.alpha_spec().clone(), rho).unwrap();
        for kind in [CoeffKind::A, CoeffKind::B] {
            let a = build_table(&p, kind, t).unwrap();
            let b = build_table(&p, kind, t).unwrap();
            prop_assert_eq!(a.entries.len(), b.entries.len());
            for (x, y) in a.entries.iter().zip(&b.entries) {
                prop_assert_eq!((x.m, x.n, x.power.to_bits()), (y.m, y.n, y.power.to_bits()));
                prop_assert_eq!((x.value.sign, x.value.logabs.to_bits()), (y.value.sign, y.value.logabs.to_bits()));
            }
        }
    }
}
