//! Poisson kernels: closed forms, series, the even-dimension decomposition of
//! the hyperbolic kernel and the hyperbolic-to-Euclidean transfer kernel.

use crate::dd::Dd;
use crate::geometry::{dot, BallPoint};
use crate::quad::{tanh_sinh_unit, QuadError};
use crate::specfun::{fl_normalized_dd, zonal_all_dd, SpecfunError};
use num_rational::Rational64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("series truncated after {terms} terms with last term {last_term:e} (partial sum {value})")]
    TruncationWarning { value: f64, terms: usize, last_term: f64 },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("argument out of range: {0}")]
    Domain(String),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, KernelError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Euclidean,
    Hyperbolic,
    HyperbolicDelta(f64),
}

/// `P_e` as a function of radius and `t = <zeta, xi>`.
pub fn poisson_euclid_rt(n: usize, r: f64, t: f64) -> f64 {
    (1.0 - r * r) / (1.0 + r * r - 2.0 * r * t).powf(n as f64 / 2.0)
}

/// `P_h` as a function of radius and `t = <zeta, xi>`.
pub fn poisson_hyp_rt(n: usize, r: f64, t: f64) -> f64 {
    ((1.0 - r * r) / (1.0 + r * r - 2.0 * r * t)).powi(n as i32 - 1)
}

pub fn poisson_euclid(x: &BallPoint, xi: &[f64]) -> f64 {
    poisson_euclid_rt(x.dim(), x.r, dot(&x.dir, xi).clamp(-1.0, 1.0))
}

pub fn poisson_hyp(x: &BallPoint, xi: &[f64]) -> f64 {
    poisson_hyp_rt(x.dim(), x.r, dot(&x.dir, xi).clamp(-1.0, 1.0))
}

/// Gradient in x of `P_h(x, xi) = ((1 - |x|^2) / |x - xi|^2)^(n-1)`.
pub fn poisson_hyp_gradient(x: &[f64], xi: &[f64]) -> Vec<f64> {
    let n = x.len();
    let s = 1.0 - dot(x, x);
    let d: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a - b).collect();
    let q = dot(&d, &d);
    let a = s / q;
    let e = n as f64 - 1.0;
    let pre = e * a.powi(n as i32 - 2);
    (0..n).map(|i| pre * (-2.0 * x[i] * q - s * 2.0 * d[i]) / (q * q)).collect()
}

/// Truncation controls for the kernel series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub tail_tol: f64,
    pub cap: usize,
    /// Term cap for the odd-n radial series inside each coefficient.
    pub radial_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { tail_tol: 1e-14, cap: 4096, radial_terms: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
}

/// Series `sum_l [F_l(delta^2 r^2) / F_l(delta^2)] r^l Z_l(t)` at fixed r and delta,
/// summed in double-double arithmetic. delta = 0 gives `P_e`, delta = 1 gives `P_h`.
#[derive(Debug, Clone)]
pub struct PoissonSeries {
    pub n: usize,
    pub r: f64,
    pub delta: f64,
    opts: SeriesOptions,
    radial: Vec<Dd>,
}

impl PoissonSeries {
    pub fn new(n: usize, r: f64, delta: f64, opts: SeriesOptions) -> Result<Self> {
        if n < 3 {
            return Err(KernelError::UnsupportedDimension(n));
        }
        if !(0.0..1.0).contains(&r) || !(0.0..=1.0).contains(&delta) {
            return Err(KernelError::Domain(format!("r = {r}, delta = {delta}")));
        }
        let x = Dd::prod(delta * r, delta * r);
        let xb = Dd::prod(delta, delta);
        let rd = Dd::new(r);
        // Smallest kernel value at this radius bounds how far the table must go.
        let floor = ((1.0 - r) / (1.0 + r)).powi(n as i32 - 1) * (1.0 - r);
        let mut radial = Vec::new();
        let mut rl = Dd::ONE;
        let mut quiet = 0;
        for l in 0..=opts.cap {
            let num = fl_normalized_dd(l, n, x, opts.radial_terms)?;
            let den = if delta == 1.0 { Dd::ONE } else { fl_normalized_dd(l, n, xb, opts.radial_terms)? };
            let a = num / den * rl;
            radial.push(a);
            rl = rl * rd;
            let zl1 = (2.0 * l as f64 + n as f64 - 2.0) / (n as f64 - 2.0)
                * crate::specfun::gegenbauer(l, (n as f64 - 2.0) / 2.0, 1.0);
            if a.to_f64().abs() * zl1 < 1e-3 * opts.tail_tol * floor {
                quiet += 1;
                if quiet >= 5 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        Ok(PoissonSeries { n, r, delta, opts, radial })
    }

    /// Adaptive sum: stop once `|term| < tail_tol * |partial sum|` for 5 consecutive terms.
    pub fn eval(&self, t: f64) -> Result<SeriesValue> {
        let z = zonal_all_dd(self.radial.len() - 1, self.n, t.clamp(-1.0, 1.0));
        let mut s = Dd::ZERO;
        let mut run = 0;
        let mut last = 0.0;
        for (l, (a, zl)) in self.radial.iter().zip(&z).enumerate() {
            let term = *a * *zl;
            s = s + term;
            last = term.to_f64();
            if last.abs() < self.opts.tail_tol * s.to_f64().abs() {
                run += 1;
                if run >= 5 {
                    return Ok(SeriesValue { value: s.to_f64(), terms: l + 1 });
                }
            } else {
                run = 0;
            }
        }
        Err(KernelError::TruncationWarning { value: s.to_f64(), terms: self.radial.len(), last_term: last })
    }

    /// Fixed truncation: terms l = 0..=big_l.
    pub fn partial_sum(&self, t: f64, big_l: usize) -> f64 {
        let big_l = big_l.min(self.radial.len() - 1);
        let z = zonal_all_dd(big_l, self.n, t.clamp(-1.0, 1.0));
        let mut s = Dd::ZERO;
        for (a, zl) in self.radial.iter().zip(&z) {
            s = s + *a * *zl;
        }
        s.to_f64()
    }

    pub fn table_len(&self) -> usize {
        self.radial.len()
    }
}

/// Partial sum of the `P_(h,delta)` series with explicit truncation.
pub fn poisson_hyp_series(x: &BallPoint, xi: &[f64], delta: f64, big_l: usize) -> Result<f64> {
    let opts = SeriesOptions { cap: big_l.max(1), ..SeriesOptions::default() };
    let s = PoissonSeries::new(x.dim(), x.r, delta, opts)?;
    Ok(s.partial_sum(dot(&x.dir, xi), big_l))
}

/// `P_(h,delta)(x, xi)` with adaptive truncation.
pub fn poisson_hyp_delta(x: &BallPoint, xi: &[f64], delta: f64, opts: SeriesOptions) -> Result<f64> {
    Ok(PoissonSeries::new(x.dim(), x.r, delta, opts)?.eval(dot(&x.dir, xi))?.value)
}

/// Kernel of the given kind: closed forms where they exist, series otherwise.
pub fn kernel_value(kind: KernelKind, n: usize, r: f64, t: f64, opts: SeriesOptions) -> Result<f64> {
    match kind {
        KernelKind::Euclidean => Ok(poisson_euclid_rt(n, r, t)),
        KernelKind::Hyperbolic => Ok(poisson_hyp_rt(n, r, t)),
        KernelKind::HyperbolicDelta(d) => Ok(PoissonSeries::new(n, r, d, opts)?.eval(t)?.value),
    }
}

/// `d^k/dr^k P_e(r, t)` for k = 0..=kmax, exactly. With `h = q^s`,
/// `q = 1 + r^2 - 2rt`, `s = -n/2`, Leibniz on `q h' = s q' h` gives
/// `q h^(k+1) = (s - k) q' h^(k) + 2 (s k - k(k-1)/2) h^(k-1)`.
pub fn poisson_euclid_radial_derivs(n: usize, r: f64, t: f64, kmax: usize) -> Vec<f64> {
    let s = -(n as f64) / 2.0;
    let q = 1.0 + r * r - 2.0 * r * t;
    let dq = 2.0 * r - 2.0 * t;
    let mut h = vec![q.powf(s)];
    if kmax >= 1 {
        h.push(s * dq * h[0] / q);
    }
    for k in 1..kmax {
        let kf = k as f64;
        let next = ((s - kf) * dq * h[k] + 2.0 * (s * kf - kf * (kf - 1.0) / 2.0) * h[k - 1]) / q;
        h.push(next);
    }
    (0..=kmax)
        .map(|k| {
            let kf = k as f64;
            let mut v = (1.0 - r * r) * h[k];
            if k >= 1 {
                v -= 2.0 * kf * r * h[k - 1];
            }
            if k >= 2 {
                v -= kf * (kf - 1.0) * h[k - 2];
            }
            v
        })
        .collect()
}

/// One monomial `coeff * r^pr * (1 - r^2)^pw` of a decomposition polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma3Term {
    pub coeff: Rational64,
    pub pow_r: u32,
    pub pow_w: u32,
}

/// Polynomials `P_0..P_(p-1)` (n = 2p) with
/// `f_l(r^2) r^l = sum_k P_k(r) (1 - r^2)^k d^k/dr^k (r^l)` for every l.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma3Decomposition {
    pub n: usize,
    pub p: usize,
    pub polys: Vec<Vec<Lemma3Term>>,
}

fn binom(n: i64, k: i64) -> i64 {
    if k < 0 || k > n {
        return 0;
    }
    (0..k).fold(1i64, |acc, i| acc * (n - i) / (i + 1))
}

fn falling_i(x: i64, k: i64) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (x - i))
}

fn rising_i(x: i64, k: i64) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (x + i))
}

impl Lemma3Decomposition {
    /// Coefficient `c_j` of `alpha_(l,j) x^(p-1-j) (1-x)^j` in `f_l(x)`.
    pub fn c(p: usize, j: usize) -> Rational64 {
        let (p, j) = (p as i64, j as i64);
        Rational64::new(binom(p - 1, j) * rising_i(p, p - 1 - j), rising_i(p, p - 1))
    }

    /// `alpha_(l,j) = (l + 2p - 2)(l + 2p - 3)...(l + 2p - 1 - j)`.
    pub fn alpha(p: usize, l: usize, j: usize) -> f64 {
        (0..j).fold(1.0, |acc, i| acc * (l as f64 + 2.0 * p as f64 - 2.0 - i as f64))
    }

    /// `a_(k,j)` in `alpha_(l,j) = sum_k a_(k,j) l(l-1)...(l-k+1)` (Vandermonde).
    pub fn a(p: usize, k: usize, j: usize) -> i64 {
        let s = 2 * p as i64 - 2;
        binom(j as i64, k as i64) * falling_i(s, j as i64 - k as i64)
    }

    pub fn build(n: usize) -> Result<Self> {
        if n % 2 == 1 || n < 4 || n > 20 {
            return Err(KernelError::UnsupportedDimension(n));
        }
        let p = n / 2;
        let mut polys = Vec::with_capacity(p);
        for k in 0..p {
            let mut terms = Vec::new();
            for j in k..p {
                let coeff = Self::c(p, j) * Rational64::from_integer(Self::a(p, k, j));
                if coeff != Rational64::from_integer(0) {
                    terms.push(Lemma3Term { coeff, pow_r: (2 * (p - 1 - j) + k) as u32, pow_w: (j - k) as u32 });
                }
            }
            polys.push(terms);
        }
        Ok(Lemma3Decomposition { n, p, polys })
    }

    /// `P_k(r)`.
    pub fn eval(&self, k: usize, r: f64) -> f64 {
        let w = 1.0 - r * r;
        self.polys[k]
            .iter()
            .map(|t| (*t.coeff.numer() as f64 / *t.coeff.denom() as f64) * r.powi(t.pow_r as i32) * w.powi(t.pow_w as i32))
            .sum()
    }

    /// `f_l(x)` through the `alpha_(l,j)` representation.
    pub fn fl(&self, l: usize, x: f64) -> f64 {
        (0..self.p)
            .map(|j| {
                let c = Self::c(self.p, j);
                (*c.numer() as f64 / *c.denom() as f64)
                    * Self::alpha(self.p, l, j)
                    * x.powi((self.p - 1 - j) as i32)
                    * (1.0 - x).powi(j as i32)
            })
            .sum()
    }

    /// `sum_k P_k(r) (1 - r^2)^k d^k/dr^k (r^l)`.
    pub fn reconstruct_mode(&self, l: usize, r: f64) -> f64 {
        let w = 1.0 - r * r;
        (0..self.p)
            .map(|k| {
                if k > l {
                    return 0.0;
                }
                let fall = (0..k).fold(1.0, |acc, i| acc * (l - i) as f64);
                self.eval(k, r) * w.powi(k as i32) * fall * r.powi((l - k) as i32)
            })
            .sum()
    }

    /// `sum_k P_k(r) (1 - r^2)^k d^k/dr^k P_e(r, t)`, which should equal `P_h(r, t)`.
    pub fn reconstruct_kernel(&self, r: f64, t: f64) -> f64 {
        let w = 1.0 - r * r;
        let d = poisson_euclid_radial_derivs(self.n, r, t, self.p - 1);
        (0..self.p).map(|k| self.eval(k, r) * w.powi(k as i32) * d[k]).sum()
    }
}

pub fn lemma3_build(n: usize) -> Result<Lemma3Decomposition> {
    Lemma3Decomposition::build(n)
}

/// Transfer kernel `eta(r, s) = c (1-r^2)(1-r^2 s^2)^(2-n) [(1-s)(1-s r^2)]^(n/2-2) s^(n/2-1)`
/// with c fixed by unit mass at r = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaKernel {
    pub n: usize,
    pub c: f64,
}

impl EtaKernel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(KernelError::UnsupportedDimension(n));
        }
        let k = EtaKernel { n, c: 1.0 };
        let mass = k.raw_mass(0.0)?;
        Ok(EtaKernel { n, c: 1.0 / mass })
    }

    /// Kernel value given `s` and `1 - s` separately (the complement is passed
    /// so that the `(1 - s)` factor keeps full relative precision near s = 1).
    pub fn value_split(&self, r: f64, s: f64, one_minus_s: f64) -> f64 {
        let h = self.n as f64 / 2.0;
        let r2 = r * r;
        self.c
            * (1.0 - r2)
            * (1.0 - r2 * s * s).powi(2 - self.n as i32)
            * (one_minus_s * (1.0 - s * r2)).powf(h - 2.0)
            * s.powf(h - 1.0)
    }

    pub fn value(&self, r: f64, s: f64) -> f64 {
        self.value_split(r, s, 1.0 - s)
    }

    /// `r d/dr eta(r, s)`.
    pub fn r_dr(&self, r: f64, s: f64, one_minus_s: f64) -> f64 {
        let n = self.n as f64;
        let r2 = r * r;
        let log_d = -2.0 * r / (1.0 - r2) + (2.0 - n) * (-2.0 * r * s * s) / (1.0 - r2 * s * s)
            + (n / 2.0 - 2.0) * (-2.0 * r * s) / (1.0 - s * r2);
        r * log_d * self.value_split(r, s, one_minus_s)
    }

    fn raw_mass(&self, r: f64) -> Result<f64> {
        Ok(tanh_sinh_unit(|s, sc| self.value_split(r, s, sc), 1e-13, 12)?)
    }

    /// `int_0^1 eta(r, s) ds`.
    pub fn mass(&self, r: f64) -> Result<f64> {
        self.raw_mass(r)
    }

    /// The constant that would give unit mass at radius r.
    pub fn calibrate_at(&self, r: f64) -> Result<f64> {
        Ok(self.c / self.raw_mass(r)?)
    }

    /// `(1 - r) int_0^1 |r d/dr eta(r, s)| ds`, the k = 1 derivative-bound constant at r.
    pub fn derivative_constant(&self, r: f64) -> Result<f64> {
        // Split at sign changes of the log-derivative so each piece is smooth.
        let n = self.n as f64;
        let r2 = r * r;
        let g = |s: f64| {
            -2.0 * r / (1.0 - r2) + 2.0 * (n - 2.0) * r * s * s / (1.0 - r2 * s * s) - (n - 4.0) * r * s / (1.0 - s * r2)
        };
        let mut cuts = vec![0.0];
        let m = 256;
        for i in 0..m {
            let (mut a, mut b) = (i as f64 / m as f64, (i + 1) as f64 / m as f64);
            if g(a).signum() == g(b).signum() {
                continue;
            }
            for _ in 0..80 {
                let c = 0.5 * (a + b);
                if g(a).signum() == g(c).signum() {
                    a = c;
                } else {
                    b = c;
                }
            }
            cuts.push(0.5 * (a + b));
        }
        cuts.push(1.0);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = b - a;
            total += len
                * tanh_sinh_unit(|x, xc| self.r_dr(r, a + len * x, (1.0 - b) + len * xc).abs(), 1e-10, 12)?;
        }
        Ok((1.0 - r) * total)
    }

    /// `int_0^1 eta(r, rho) u(rho r zeta) d rho`.
    pub fn transfer<F: Fn(&BallPoint) -> f64>(&self, u: F, x: &BallPoint) -> Result<f64> {
        self.transfer_radial(x.r, |rho| u(&BallPoint { r: rho, dir: x.dir.clone() }))
    }

    /// `int_0^1 eta(r, s) g(s r) ds` for a profile along one ray.
    pub fn transfer_radial<F: Fn(f64) -> f64>(&self, r: f64, g: F) -> Result<f64> {
        Ok(tanh_sinh_unit(|s, sc| self.value_split(r, s, sc) * g(s * r), 1e-12, 12)?)
    }
}

pub fn eta_kernel(r: f64, s: f64, n: usize) -> Result<f64> {
    Ok(EtaKernel::new(n)?.value(r, s))
}

pub fn transfer_euclid_from_hyp<F: Fn(&BallPoint) -> f64>(u: F, x: &BallPoint) -> Result<f64> {
    EtaKernel::new(x.dim())?.transfer(u, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert!((poisson_euclid_rt(3, 0.5, 1.0) - 6.0).abs() < 1e-14);
        assert_eq!(poisson_hyp_rt(4, 0.0, 0.3), 1.0);
        let r: f64 = 0.4;
        assert!((poisson_hyp_rt(5, r, 1.0) - ((1.0 + r) / (1.0 - r)).powi(4)).abs() < 1e-12);
    }

    #[test]
    fn radial_derivatives_match_differences() {
        let (n, r, t, h) = (5, 0.45, 0.2, 1e-4);
        let d = poisson_euclid_radial_derivs(n, r, t, 3);
        let f = |x: f64| poisson_euclid_rt(n, x, t);
        let d1 = (f(r + h) - f(r - h)) / (2.0 * h);
        let d2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
        assert!((d[1] - d1).abs() < 1e-6 * d1.abs());
        assert!((d[2] - d2).abs() < 1e-5 * d2.abs());
    }

    #[test]
    fn lemma3_n4_structure() {
        let dec = Lemma3Decomposition::build(4).unwrap();
        assert_eq!(dec.polys.len(), 2);
        assert_eq!(Lemma3Decomposition::alpha(2, 3, 1), 5.0);
        assert!(Lemma3Decomposition::build(5).is_err());
    }

    #[test]
    fn gradient_matches_difference() {
        let x = [0.3, -0.2, 0.1];
        let xi = [0.0, 0.6, 0.8];
        let g = poisson_hyp_gradient(&x, &xi);
        let h = 1e-6;
        for i in 0..3 {
            let mut p = x;
            let mut m = x;
            p[i] += h;
            m[i] -= h;
            let f = |y: &[f64]| poisson_hyp(&BallPoint::from_cartesian(y).unwrap(), &xi);
            let fd = (f(&p) - f(&m)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()));
        }
    }

    #[test]
    fn series_matches_closed_forms() {
        for n in 3..=6 {
            for &r in &[0.3, 0.9] {
                let e = PoissonSeries::new(n, r, 0.0, SeriesOptions::default()).unwrap();
                let h = PoissonSeries::new(n, r, 1.0, SeriesOptions::default()).unwrap();
                for &t in &[-1.0, -0.4, 0.2, 1.0] {
                    let pe = poisson_euclid_rt(n, r, t);
                    let ph = poisson_hyp_rt(n, r, t);
                    let se = e.eval(t).unwrap().value;
                    let sh = h.eval(t).unwrap().value;
                    assert!(((se - pe) / pe).abs() < 1e-9, "e n={n} r={r} t={t} {se} {pe}");
                    assert!(((sh - ph) / ph).abs() < 1e-9, "h n={n} r={r} t={t} {sh} {ph}");
                }
            }
        }
    }

    #[test]
    fn lemma3_reconstructs_hyperbolic_kernel() {
        for n in [4, 6, 8] {
            let dec = lemma3_build(n).unwrap();
            for l in 0..6 {
                let want = crate::specfun::fl_normalized(l, n, 0.25).unwrap() * 0.5f64.powi(l as i32);
                assert!((dec.reconstruct_mode(l, 0.5) - want).abs() < 1e-12);
                assert!((dec.fl(l, 0.25) * 0.5f64.powi(l as i32) - want).abs() < 1e-12);
            }
            let got = dec.reconstruct_kernel(0.5, 0.3);
            assert!((got - poisson_hyp_rt(n, 0.5, 0.3)).abs() < 1e-10);
        }
    }

    #[test]
    fn eta_unit_mass_and_transfer() {
        for n in 3..=6 {
            let k = EtaKernel::new(n).unwrap();
            for &r in &[0.1, 0.5, 0.9] {
                assert!((k.mass(r).unwrap() - 1.0).abs() < 1e-8, "n={n} r={r}");
            }
            let x = BallPoint::new(0.7, &crate::geometry::unit(&vec![1.0; n])).unwrap();
            let xi = crate::geometry::basis(n, 0);
            let got = k.transfer(|y| poisson_hyp(y, &xi), &x).unwrap();
            let want = poisson_euclid(&x, &xi);
            assert!((got - want).abs() < 1e-6 * want, "n={n} {got} {want}");
        }
    }
}
