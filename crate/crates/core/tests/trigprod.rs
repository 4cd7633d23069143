use proptest::prelude::*;
use supdens_core::diophantine::RealSpec;
use supdens_core::trigprod::*;

#[test]
fn lemma_rate_at_one_million() {
    for x in [RealSpec::sqrt(2).unwrap(), RealSpec::golden_ratio()] {
        for kind in [TrigKind::Sec, TrigKind::Csc] {
            let v = lemma1_rate(&x, kind, 1_000_000).unwrap();
            assert!((v - core::f64::consts::LN_2).abs() <= 0.01, "{kind:?} {x}: {v}");
        }
    }
}

#[test]
fn period_two() {
    let x = RealSpec::sqrt(2).unwrap();
    let y = x.affine(1, 1, 2).unwrap();
    for kind in [TrigKind::Sec, TrigKind::Csc] {
        let a = trig_log_product(kind, &x, 0.0, 5000).unwrap();
        let b = trig_log_product(kind, &y, 0.0, 5000).unwrap();
        for (p, q) in a.cumulative.iter().zip(&b.cumulative) {
            assert!((p.1 - q.1).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn traces_telescope(d in prop::sample::select(vec![2u64, 3, 5, 6, 7, 10, 11]), n in 2usize..3000, frac in 0.0f64..1.0) {
        let x = RealSpec::sqrt(d).unwrap();
        let m = ((n as f64 * frac) as usize).max(1);
        let long = trig_log_product(TrigKind::Csc, &x, 0.0, n).unwrap();
        let short = trig_log_product(TrigKind::Csc, &x, 0.0, m).unwrap();
        prop_assert_eq!(&long.cumulative[..m], &short.cumulative[..]);
    }
}
