mod common;

use common::euclid;
use hyperharm_core::specfun::{
    fl_at_one, fl_normalized, gegenbauer, hyp2f1_fl, pochhammer, zonal, zonal_all, RadialFactor, SpecfunError,
};
use proptest::prelude::*;

/// Plain Gauss series, summed term by term.
fn gauss_2f1(a: f64, b: f64, c: f64, x: f64, terms: usize) -> f64 {
    let (mut t, mut s) = (1.0, 1.0);
    for k in 0..terms {
        let k = k as f64;
        t *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x;
        s += t;
        if t == 0.0 {
            break;
        }
    }
    s
}

fn fl_oracle(l: usize, n: usize, x: f64, terms: usize) -> f64 {
    let h = n as f64 / 2.0;
    gauss_2f1(l as f64, 1.0 - h, l as f64 + h, x, terms)
}

#[test]
fn pochhammer_examples() {
    assert_eq!(pochhammer(3.0, 0), 1.0);
    assert_eq!(pochhammer(2.0, 3), 24.0);
    // (l + p)_(p - 1) with l = 1, p = 2
    assert_eq!(pochhammer(3.0, 1), 3.0);
}

#[test]
fn terminating_value_at_one() {
    // 2F1(1, -1; 3; 1) = 1 - 1/3
    let v = hyp2f1_fl(1, 4, 1.0).unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-15);
    assert!((v - fl_oracle(1, 4, 1.0, 10)).abs() < 1e-15);
}

#[test]
fn value_examples() {
    assert_eq!(hyp2f1_fl(0, 5, 0.7).unwrap(), 1.0);
    let v = hyp2f1_fl(2, 3, 0.5).unwrap();
    assert!((v - fl_oracle(2, 3, 0.5, 200)).abs() < 1e-12);
}

#[test]
fn gauss_sum_at_one() {
    for n in [4, 6, 8] {
        for l in 0..12 {
            let want = fl_oracle(l, n, 1.0, 50);
            assert!((fl_at_one(l, n) / want - 1.0).abs() < 1e-13, "n {n} l {l}");
        }
    }
    // terms decay like k^-n at x = 1
    for n in [5, 7] {
        for l in [1, 3, 6] {
            let want = fl_oracle(l, n, 1.0, 20_000);
            assert!((fl_at_one(l, n) / want - 1.0).abs() < 1e-12, "n {n} l {l}");
        }
    }
}

#[test]
fn domain_errors() {
    assert!(matches!(hyp2f1_fl(1, 3, 1.5), Err(SpecfunError::Domain(_))));
    assert!(matches!(hyp2f1_fl(1, 3, -0.1), Err(SpecfunError::Domain(_))));
    assert!(matches!(hyp2f1_fl(1, 2, 0.5), Err(SpecfunError::Dimension(2))));
}

#[test]
fn generating_function() {
    for n in 3..=6 {
        for r in [0.3f64, 0.6, 0.9] {
            let big_l = 800;
            for i in 0..21 {
                let t = -1.0 + i as f64 / 10.0;
                let z = zonal_all(big_l, n, t);
                let s: f64 = z.iter().enumerate().map(|(l, v)| r.powi(l as i32) * v).sum();
                let e = euclid(n, r, t);
                assert!((s - e).abs() <= 1e-8 * e.max(1.0), "n {n} r {r} t {t}: {s} vs {e}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_gauss_series(l in 0usize..20, n in 3usize..10, x in 0.0f64..0.9) {
        let v = hyp2f1_fl(l, n, x).unwrap();
        let want = fl_oracle(l, n, x, 5000);
        prop_assert!((v - want).abs() <= 1e-11 * want.abs().max(1.0), "{v} vs {want}");
    }

    #[test]
    fn even_dimension_terminates(l in 0usize..30, p in 2usize..6, x in 0.0f64..=1.0) {
        let n = 2 * p;
        // b = 1 - p, so only p terms survive
        let want = fl_oracle(l, n, x, p);
        let v = hyp2f1_fl(l, n, x).unwrap();
        prop_assert!((v - want).abs() <= 1e-13 * want.abs().max(1.0));
    }

    #[test]
    fn normalized_at_one(l in 0usize..60, n in 3usize..12) {
        prop_assert!((fl_normalized(l, n, 1.0).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn derivative_rule(l in 1usize..12, n in 3usize..9, x in 0.05f64..0.85) {
        let h = n as f64 / 2.0;
        let (a, b, c) = (l as f64, 1.0 - h, l as f64 + h);
        let f = RadialFactor::new(l, n).unwrap();
        let d = f.derivatives(x, 1).unwrap()[1] * f.value_at_one;
        let rule = a * b / c * gauss_2f1(a + 1.0, b + 1.0, c + 1.0, x, 5000);
        prop_assert!((d - rule).abs() <= 1e-10 * rule.abs().max(1.0), "{d} vs {rule}");
        let e = 1e-5;
        let fd = (hyp2f1_fl(l, n, x + e).unwrap() - hyp2f1_fl(l, n, x - e).unwrap()) / (2.0 * e);
        prop_assert!((fd - rule).abs() <= 1e-6 * rule.abs().max(1.0));
    }

    #[test]
    fn zonal_table_and_single_agree(lmax in 0usize..40, n in 3usize..9, t in -1.0f64..=1.0) {
        let all = zonal_all(lmax, n, t);
        prop_assert_eq!(all.len(), lmax + 1);
        prop_assert_eq!(all[0], 1.0);
        for (l, v) in all.iter().enumerate() {
            let z = zonal(l, n, t);
            prop_assert!((v - z).abs() <= 1e-12 * z.abs().max(1.0));
        }
        let lam = (n as f64 - 2.0) / 2.0;
        let g = gegenbauer(lmax, lam, 1.0);
        // C_l^lam(1) = (2 lam)_l / l!
        let exact = pochhammer(2.0 * lam, lmax) / pochhammer(1.0, lmax);
        prop_assert!((g / exact - 1.0).abs() < 1e-12);
    }
}
