#![allow(dead_code)]
//! Independent closed forms and quadrature used as oracles.

pub fn euclid(n: usize, r: f64, t: f64) -> f64 {
    (1.0 - r * r) / (1.0 - 2.0 * r * t + r * r).powf(n as f64 / 2.0)
}

pub fn hyp(n: usize, r: f64, t: f64) -> f64 {
    ((1.0 - r * r) / (1.0 - 2.0 * r * t + r * r)).powi(n as i32 - 1)
}

/// Gegenbauer polynomial from the explicit finite sum, with the sum of the
/// absolute terms (the scale of its rounding error).
pub fn gegenbauer_sum(l: usize, lambda: f64, t: f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut abs = 0.0;
    for k in 0..=l / 2 {
        let mut c = if k % 2 == 0 { 1.0 } else { -1.0 };
        // Gamma(l - k + lambda) / (Gamma(lambda) k! (l - 2k)!)
        for i in 0..(l - k) {
            c *= lambda + i as f64;
        }
        for i in 1..=k {
            c /= i as f64;
        }
        for i in 1..=(l - 2 * k) {
            c /= i as f64;
        }
        let term = c * (2.0 * t).powi((l - 2 * k) as i32);
        s += term;
        abs += term.abs();
    }
    (s, abs)
}

pub fn zonal_sum(l: usize, n: usize, t: f64) -> (f64, f64) {
    let lam = (n as f64 - 2.0) / 2.0;
    let f = (2 * l + n - 2) as f64 / (n as f64 - 2.0);
    let (s, a) = gegenbauer_sum(l, lam, t);
    (f * s, f * a)
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss-Legendre on [a, b] with `panels` equal panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, m: usize) -> f64 {
    let rule = gauss_legendre(m);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let c = a + h * (p as f64 + 0.5);
        for &(x, w) in &rule {
            s += w * h / 2.0 * f(c + h / 2.0 * x);
        }
    }
    s
}

/// Average over the sphere S^(n-1) of a zonal function g(t).
pub fn sphere_mean_zonal<F: Fn(f64) -> f64>(n: usize, g: F) -> f64 {
    let k = n as i32 - 2;
    let num = integrate(|th: f64| g(th.cos()) * th.sin().powi(k), 0.0, std::f64::consts::PI, 60, 12);
    let den = integrate(|th: f64| th.sin().powi(k), 0.0, std::f64::consts::PI, 60, 12);
    num / den
}
