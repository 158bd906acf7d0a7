use hyperharm_core::functionals::{
    compute, cone_max, littlewood_paley_g, radial_max, ray_integral_il, FnField, FunctionalGrid, FunctionalKind,
    OpField,
};
use hyperharm_core::geometry::{ray_ladder, sphere_quadrature, GridKind, SphereGrid};
use hyperharm_core::harmonic::{HarmonicFunction, ModeOp, ZonalExpansion};
use proptest::prelude::*;

fn grid3() -> SphereGrid {
    sphere_quadrature(3, 8, GridKind::Full).unwrap()
}

fn fg() -> FunctionalGrid {
    FunctionalGrid { depth: 10, ..FunctionalGrid::default() }
}

fn zonal(n: usize, coeffs: Vec<f64>) -> HarmonicFunction {
    let mut pole = vec![0.0; n];
    pole[n - 1] = 1.0;
    HarmonicFunction::extend_zonal(&ZonalExpansion::new(n, &pole, coeffs).unwrap()).unwrap()
}

fn last_coord(x: &[f64]) -> f64 {
    x[x.len() - 1]
}

fn last_coord_grad(x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    g[x.len() - 1] = 1.0;
    g
}

#[test]
fn constants() {
    let grid = grid3();
    let u = FnField::values_only(3, |_: &[f64]| -2.5);
    let m = radial_max(&u, &grid, &fg()).unwrap();
    assert!(m.values.iter().all(|v| (v - 2.5).abs() < 1e-15));
    for p in [0.5, 1.0, 2.0] {
        assert!((m.lp_quasinorm(p) - 2.5).abs() < 1e-12, "p = {p}");
    }
    let one = zonal(3, vec![1.0]);
    let f = OpField::new(&one, ModeOp::IDENTITY);
    for kind in [FunctionalKind::S(0.5), FunctionalKind::SN(0.5), FunctionalKind::G, FunctionalKind::GN] {
        let r = compute(&f, kind, &grid, &fg()).unwrap();
        assert!(r.values.iter().all(|v| v.abs() < 1e-12), "{}", kind.name());
    }
    let ma = compute(&f, FunctionalKind::MAlpha(0.5), &grid, &fg()).unwrap();
    assert!(ma.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

// |grad u| = 1 and N u = t xi_n along the ray, so both integrals are polynomial in r_max.
#[test]
fn g_of_linear_function() {
    let grid = grid3();
    let fgr = fg();
    let u = FnField { n: 3, value: last_coord, gradient: Some(last_coord_grad), pole: None };
    let r = fgr.r_max();
    let g = littlewood_paley_g(&u, &grid, &fgr, false).unwrap();
    let want = (r - r.powi(3) / 3.0).sqrt();
    assert!(g.values.iter().all(|v| (v - want).abs() < 1e-13));
    let gn = littlewood_paley_g(&u, &grid, &fgr, true).unwrap();
    for (xi, v) in grid.nodes.iter().zip(&gn.values) {
        let want = xi[2].abs() * (r.powi(3) / 3.0 - r.powi(5) / 5.0).sqrt();
        assert!((v - want).abs() < 1e-13);
    }
}

#[test]
fn area_integral_of_linear_function_is_rotation_invariant() {
    let grid = grid3();
    let u = FnField { n: 3, value: last_coord, gradient: Some(last_coord_grad), pole: None };
    let s = compute(&u, FunctionalKind::S(0.5), &grid, &fg()).unwrap();
    let lo = s.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = s.values.iter().cloned().fold(0.0, f64::max);
    assert!(lo > 0.0);
    assert!((hi - lo) / hi < 1e-2, "spread {lo} .. {hi}");
}

#[test]
fn ray_integral_of_one() {
    for l in [0.5, 1.0, 2.0, 3.5] {
        for r in [0.1, 0.5, 0.9] {
            let x = [0.0, r * 0.6, r * 0.8];
            let got = ray_integral_il(|_| 1.0, l, &x).unwrap();
            let want = (1.0 - (1.0 - r).powf(l)) / l;
            assert!((got - want).abs() < 1e-11, "l {l} r {r}: {got} vs {want}");
        }
    }
    assert!(ray_integral_il(|_| 1.0, 1.0, &[0.0, 0.0, 1.0]).is_err());
}

#[test]
fn dimension_mismatch_rejected() {
    let u = zonal(4, vec![1.0, 0.5]);
    assert!(compute(&OpField::new(&u, ModeOp::IDENTITY), FunctionalKind::M, &grid3(), &fg()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn maxima_dominate_ladder_values(c in proptest::collection::vec(-1.0f64..1.0, 1..6)) {
        let u = zonal(3, c);
        let f = OpField::new(&u, ModeOp::IDENTITY);
        let grid = grid3();
        let fgr = fg();
        let m = radial_max(&f, &grid, &fgr).unwrap();
        let ma = cone_max(&f, 0.5, &grid, &fgr).unwrap();
        for (i, xi) in grid.nodes.iter().enumerate() {
            for r in ray_ladder(fgr.depth) {
                let x: Vec<f64> = xi.iter().map(|v| v * r).collect();
                prop_assert!(m.values[i] >= u.eval(&x).unwrap().abs() - 1e-14);
            }
            prop_assert!(ma.values[i] >= m.values[i] - 1e-14);
        }
    }

    #[test]
    fn homogeneity(c in proptest::collection::vec(-1.0f64..1.0, 2..5), s in -3.0f64..3.0) {
        let u = zonal(3, c.clone());
        let v = zonal(3, c.iter().map(|a| a * s).collect());
        let grid = grid3();
        for kind in [FunctionalKind::M, FunctionalKind::MAlpha(0.5), FunctionalKind::S(0.5), FunctionalKind::G] {
            let a = compute(&OpField::new(&u, ModeOp::IDENTITY), kind, &grid, &fg()).unwrap();
            let b = compute(&OpField::new(&v, ModeOp::IDENTITY), kind, &grid, &fg()).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((s.abs() * x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{}", kind.name());
            }
        }
    }

    #[test]
    fn quasinorm_monotone_in_p(c in proptest::collection::vec(-1.0f64..1.0, 1..6), p in 0.3f64..3.0, dp in 0.01f64..2.0) {
        let u = zonal(3, c);
        let m = radial_max(&OpField::new(&u, ModeOp::IDENTITY), &grid3(), &fg()).unwrap();
        prop_assert!(m.lp_quasinorm(p) <= m.lp_quasinorm(p + dp) * (1.0 + 1e-12));
    }
}
