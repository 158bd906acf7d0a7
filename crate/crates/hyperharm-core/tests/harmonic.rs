mod common;

use hyperharm_core::geometry::{mobius_act, BallPoint, GroupElement};
use hyperharm_core::harmonic::{HarmonicFunction, ModeOp, Sph3Coeffs, ZonalExpansion};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pole(n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    p[n - 1] = 1.0;
    p
}

fn zonal_fn(n: usize, coeffs: Vec<f64>) -> HarmonicFunction {
    HarmonicFunction::extend_zonal(&ZonalExpansion::new(n, &pole(n), coeffs).unwrap()).unwrap()
}

/// Test-side `(1 - d^2 r^2)^2 Lap f + 2 (n-2) d^2 (1 - d^2 r^2) x.grad f` by central differences.
fn d_residual<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64, delta: f64) -> f64 {
    let n = x.len();
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let w = 1.0 - delta * delta * r2;
    let c = f(x);
    let (mut lap, mut xg) = (0.0, 0.0);
    let mut p = x.to_vec();
    for i in 0..n {
        p[i] = x[i] + h;
        let a = f(&p);
        p[i] = x[i] - h;
        let b = f(&p);
        p[i] = x[i];
        lap += (a - 2.0 * c + b) / (h * h);
        xg += x[i] * (a - b) / (2.0 * h);
    }
    w * w * lap + 2.0 * (n as f64 - 2.0) * delta * delta * w * xg
}

fn point(dir: &[f64], r: f64) -> Vec<f64> {
    let s: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    dir.iter().map(|v| v * r / s).collect()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..7)
}

fn direction(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_filter("nonzero", |v| v[..3].iter().map(|a| a * a).sum::<f64>() > 0.05)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn extension_annihilated_by_d(n in 3usize..6, c in coeffs(), dir in direction(5), r in 0.05f64..0.8) {
        let u = zonal_fn(n, c);
        let x = point(&dir[..n], r);
        let res = d_residual(|y| u.eval(y).unwrap(), &x, 1e-4, 1.0);
        prop_assert!(res.abs() < 1e-5, "residual {res}");
    }

    #[test]
    fn dilates_annihilated_by_d_delta(n in 3usize..6, c in coeffs(), dir in direction(5), r in 0.05f64..0.8, d in 0.05f64..1.0) {
        let u = zonal_fn(n, c).dilate(d).unwrap();
        let x = point(&dir[..n], r);
        let res = d_residual(|y| u.eval(y).unwrap(), &x, 1e-4, d);
        prop_assert!(res.abs() < 1e-5, "residual {res}");
    }

    #[test]
    fn mobius_invariance(seed in 0u64..1000, c in coeffs(), dir in direction(3), r in 0.05f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GroupElement::random(3, 0.8, &mut rng);
        let u = zonal_fn(3, c);
        let w = |y: &[f64]| {
            let p = BallPoint::from_cartesian(y).unwrap();
            u.eval(&mobius_act(&g, &p).unwrap().cartesian()).unwrap()
        };
        let x = point(&dir, r);
        prop_assert!(d_residual(w, &x, 1e-3, 1.0).abs() < 1e-3);
    }

    #[test]
    fn n_operator_matches_ray_difference(n in 3usize..6, c in coeffs(), dir in direction(5), r in 0.05f64..0.9) {
        let u = zonal_fn(n, c);
        let x = point(&dir[..n], r);
        let h = 1e-5;
        let fd = r * (u.eval(&point(&x, r + h)).unwrap() - u.eval(&point(&x, r - h)).unwrap()) / (2.0 * h);
        let exact = u.apply_n(&x, 1).unwrap();
        prop_assert!((fd - exact).abs() < 1e-7 * exact.abs().max(1.0));
    }

    #[test]
    fn origin_mean_value(n in 3usize..6, c in coeffs(), rho in 0.1f64..0.95) {
        let u = zonal_fn(n, c.clone());
        let m = common::sphere_mean_zonal(n, |t| {
            let mut d = vec![0.0; n];
            d[0] = (1.0 - t * t).max(0.0).sqrt();
            d[n - 1] = t;
            let x: Vec<f64> = d.iter().map(|v| v * rho).collect();
            u.eval(&x).unwrap()
        });
        prop_assert!((m - c[0]).abs() < 1e-10, "mean {m} vs {}", c[0]);
        prop_assert!((u.eval(&vec![0.0; n]).unwrap() - c[0]).abs() < 1e-14);
    }

    #[test]
    fn tangential_laplacian_is_spherical(c in coeffs(), dir in direction(3), r in 0.1f64..0.9) {
        // Delta_sigma at radius r equals r^2 times the angular part of the Euclidean Laplacian.
        let u = zonal_fn(3, c);
        let x = point(&dir, r);
        let g = |y: &[f64]| u.eval(&point(y, r)).unwrap();
        let unit = point(&dir, 1.0);
        let h = 1e-4;
        let mut lap = 0.0;
        let mut p = unit.clone();
        for i in 0..3 {
            p[i] = unit[i] + h;
            let a = g(&p);
            p[i] = unit[i] - h;
            let b = g(&p);
            p[i] = unit[i];
            lap += (a - 2.0 * g(&unit) + b) / (h * h);
        }
        let exact = u.apply_lap_sigma(&x, 1).unwrap();
        prop_assert!((lap - exact).abs() < 1e-5 * exact.abs().max(1.0), "{lap} vs {exact}");
    }

    #[test]
    fn linear_in_data(c in coeffs(), s in -3.0f64..3.0, dir in direction(3), r in 0.0f64..0.99) {
        let u = zonal_fn(3, c.clone());
        let v = zonal_fn(3, c.iter().map(|a| a * s).collect());
        let x = point(&dir, r);
        prop_assert!((v.eval(&x).unwrap() - s * u.eval(&x).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn boundary_limit() {
    let c = vec![0.3, -0.7, 0.2, 0.5, -0.1, 0.05, 0.02, -0.01, 0.01];
    let u = zonal_fn(4, c);
    for t in [-1.0, -0.3, 0.4, 1.0f64] {
        let xi = vec![(1.0 - t * t).sqrt(), 0.0, 0.0, t];
        let f = u.boundary_value(&xi).unwrap();
        let near = u.eval(&point(&xi, 0.9999)).unwrap();
        assert!((near - f).abs() < 1e-3, "t={t}: {near} vs {f}");
    }
}

#[test]
fn sph3_representation_agrees_with_zonal() {
    let u = zonal_fn(3, vec![0.1, 0.4, -0.3, 0.2]);
    let s = u.to_sph3().unwrap();
    for x in [[0.1, 0.2, 0.3], [-0.5, 0.1, 0.6], [0.0, 0.0, -0.9]] {
        assert!((u.eval(&x).unwrap() - s.eval(&x).unwrap()).abs() < 1e-12);
        let a = u.grad_sq(&x, ModeOp::IDENTITY).unwrap();
        let b = s.grad_sq(&x, ModeOp::IDENTITY).unwrap();
        assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }
}

#[test]
fn sph3_extension_annihilated_by_d() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = HarmonicFunction::extend_sph3(&Sph3Coeffs::random(6, 1.0, &mut rng).unwrap()).unwrap();
    for x in [[0.1, 0.2, 0.3], [-0.5, 0.1, 0.6], [0.2, -0.7, 0.1]] {
        assert!(d_residual(|y| u.eval(y).unwrap(), &x, 1e-3, 1.0).abs() < 1e-4);
    }
}

#[test]
fn invalid_inputs_rejected() {
    assert!(ZonalExpansion::new(2, &[0.0, 1.0], vec![1.0]).is_err());
    assert!(ZonalExpansion::new(3, &[0.0, 0.0, 0.0], vec![1.0]).is_err());
    assert!(ZonalExpansion::new(3, &[0.0, 1.0], vec![1.0]).is_err());
    assert!(ZonalExpansion::new(3, &[0.0, 0.0, 1.0], vec![f64::NAN]).is_err());
    // the pole is normalized
    assert_eq!(ZonalExpansion::new(3, &[0.0, 0.0, 2.0], vec![1.0]).unwrap().pole, vec![0.0, 0.0, 1.0]);
    let u = zonal_fn(3, vec![1.0, 1.0]);
    assert!(u.eval(&[0.9, 0.9, 0.0]).is_err());
    assert!(u.dilate(1.5).is_err());
}
