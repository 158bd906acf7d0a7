//! One-dimensional quadrature rules.

use nalgebra::{DMatrix, SymmetricEigen};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),
}

/// Nodes on [-1, 1] with weights normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Nodes mapped to [a, b], weights multiplied by `mass`.
    pub fn mapped(&self, a: f64, b: f64, mass: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| (mid + half * x, w * mass)).collect()
    }
}

/// Jacobi polynomial `P_N^(a,b)(x)` and its derivative.
fn jacobi_with_derivative(npts: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let eval = |deg: usize, a: f64, b: f64| -> f64 {
        let mut p0 = 1.0;
        if deg == 0 {
            return p0;
        }
        let mut p1 = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
        for k in 2..=deg {
            let kf = k as f64;
            let s = 2.0 * kf + a + b;
            let c1 = 2.0 * kf * (kf + a + b) * (s - 2.0);
            let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
            let c3 = 2.0 * (kf + a - 1.0) * (kf + b - 1.0) * s;
            let p2 = (c2 * p1 - c3 * p0) / c1;
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let p = eval(npts, a, b);
    let dp = if npts == 0 { 0.0 } else { 0.5 * (npts as f64 + a + b + 1.0) * eval(npts - 1, a + 1.0, b + 1.0) };
    (p, dp)
}

fn build_jacobi(npts: usize, a: f64, b: f64) -> GaussRule {
    assert!(npts >= 1 && a > -1.0 && b > -1.0);
    let mut jm = DMatrix::<f64>::zeros(npts, npts);
    for k in 0..npts {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        jm[(k, k)] = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        if k + 1 < npts {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let off = if k == 0 {
                (4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))).sqrt()
            } else {
                (4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0))).sqrt()
            };
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jm).eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut weights = Vec::with_capacity(npts);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = jacobi_with_derivative(npts, a, b, *x);
            if dp != 0.0 {
                let step = p / dp;
                if step.is_finite() && step.abs() < 1e-3 {
                    *x -= step;
                }
            }
        }
        let (_, dp) = jacobi_with_derivative(npts, a, b, *x);
        // Gauss-Jacobi weights are C / ((1-x^2) P_N'(x)^2) with C independent of the node.
        weights.push(1.0 / ((1.0 - *x * *x) * dp * dp));
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    GaussRule { nodes, weights }
}

type RuleKey = (usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<RuleKey, Arc<GaussRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<GaussRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Jacobi rule for the weight `(1-x)^a (1+x)^b` on [-1, 1], weights summing to one.
pub fn gauss_jacobi(npts: usize, a: f64, b: f64) -> Arc<GaussRule> {
    let key = (npts, a.to_bits(), b.to_bits());
    if let Some(r) = cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let rule = Arc::new(build_jacobi(npts, a, b));
    cache().lock().unwrap().insert(key, rule.clone());
    rule
}

/// Gauss-Legendre rule, weights summing to one.
pub fn gauss_legendre(npts: usize) -> Arc<GaussRule> {
    gauss_jacobi(npts, 0.0, 0.0)
}

/// Gauss-Gegenbauer rule for `(1-t^2)^((n-3)/2)`: the distribution of
/// `<xi, pole>` under normalized surface measure on the sphere in R^n.
pub fn sphere_zonal_rule(npts: usize, n: usize) -> Arc<GaussRule> {
    let e = (n as f64 - 3.0) / 2.0;
    gauss_jacobi(npts, e, e)
}

/// Tanh-sinh quadrature on (0, 1). The integrand receives `(s, 1 - s)` with the
/// complement computed without cancellation, so endpoint singularities such as
/// `(1 - s)^(-1/2)` are resolved.
pub fn tanh_sinh_unit<F: Fn(f64, f64) -> f64>(f: F, tol: f64, max_level: usize) -> Result<f64, QuadError> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let t_max = 4.0;
    let node = |t: f64| -> f64 {
        let s = half_pi * t.sinh();
        let e = (-2.0 * s.abs()).exp();
        // s >= 0: x = 1/(1+e), 1-x = e/(1+e); mirrored for s < 0.
        let (x, xc) = if s >= 0.0 { (1.0 / (1.0 + e), e / (1.0 + e)) } else { (e / (1.0 + e), 1.0 / (1.0 + e)) };
        if x <= 0.0 || xc <= 0.0 {
            return 0.0;
        }
        let sech = 2.0 * e.sqrt() / (1.0 + e);
        let w = 0.5 * half_pi * t.cosh() * sech * sech;
        let v = f(x, xc);
        if w == 0.0 {
            0.0
        } else {
            w * v
        }
    };
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += node(t) + node(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..max_level {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let next = sum * h;
        if !next.is_finite() {
            return Err(QuadError::QuadratureFailure("non-finite tanh-sinh sum".into()));
        }
        if (next - estimate).abs() <= tol * next.abs().max(1e-300) {
            return Ok(next);
        }
        estimate = next;
    }
    Err(QuadError::QuadratureFailure(format!("tanh-sinh did not reach {tol} in {max_level} levels")))
}

const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for i in 0..7 {
        let dx = h * GK_X[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) on [a, b] with a cap on the number of bisections.
pub fn adaptive_gk<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, max_splits: usize) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..max_splits {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= tol * total.abs().max(tol) {
            return Ok(total);
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.partial_cmp(&y.1 .2 .1).unwrap())
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
    let total: f64 = parts.iter().map(|p| p.2 .0).sum();
    let err: f64 = parts.iter().map(|p| p.2 .1).sum();
    if err <= tol * total.abs().max(tol) {
        Ok(total)
    } else {
        Err(QuadError::QuadratureFailure(format!("adaptive Gauss-Kronrod stalled at error {err:e}")))
    }
}

/// Sum by pairwise halving, which fixes the reduction order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        k => pairwise_sum(&v[..k / 2]) + pairwise_sum(&v[k / 2..]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = gauss_legendre(6);
        let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 1.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_moment() {
        // weight (1+x)^0.5 on [-1,1]; E[x] = (b-a)/(a+b+2)
        let rule = gauss_jacobi(9, 0.0, 0.5);
        let m1: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x).sum();
        assert!((m1 - 0.5 / 2.5).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_nodes() {
        let rule = gauss_jacobi(5, -0.5, -0.5);
        for (i, x) in rule.nodes.iter().enumerate() {
            let expect = -((2.0 * i as f64 + 1.0) * std::f64::consts::PI / 10.0).cos();
            assert!((x - expect).abs() < 1e-14);
            assert!((rule.weights[i] - 0.2).abs() < 1e-14);
        }
    }

    #[test]
    fn large_rule_stays_accurate() {
        let rule = gauss_legendre(400);
        let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * (3.0 * x).cos()).sum();
        let exact = (3.0f64).sin() / 3.0;
        assert!((s - exact).abs() < 1e-13);
    }

    #[test]
    fn tanh_sinh_inverse_sqrt_endpoint() {
        let v = tanh_sinh_unit(|_, c| 1.0 / c.sqrt(), 1e-12, 12).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn gk_smooth() {
        let v = adaptive_gk(|x: f64| x.exp(), 0.0, 1.0, 1e-13, 50).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn gk_reports_failure() {
        let r = adaptive_gk(|x: f64| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 1e-14, 3);
        assert!(r.is_err());
    }
}
