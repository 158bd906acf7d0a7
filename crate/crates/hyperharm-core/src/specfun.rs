//! Special functions behind the radial and angular factors of the expansion.
//!
//! `F_l(x) = 2F1(l, 1 - n/2; l + n/2; x)` and its normalized form
//! `f_l = F_l / F_l(1)`, Gegenbauer polynomials and zonal harmonics.

use crate::dd::Dd;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecfunError {
    #[error("series for F_{l} (n = {n}) at x = {x} did not converge within {terms} terms")]
    NonConvergence { l: usize, n: usize, x: f64, terms: usize },
    #[error("argument {0} outside [0, 1]")]
    Domain(f64),
    #[error("dimension must be at least 3, got {0}")]
    Dimension(usize),
}

pub type Result<T> = std::result::Result<T, SpecfunError>;

/// Tolerance and term cap for the non-terminating (odd n) series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { rel_tol: 1e-12, max_terms: 100_000 }
    }
}

/// Rising factorial a(a+1)...(a+k-1).
pub fn pochhammer(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |p, i| p * (a + i as f64))
}

fn check(n: usize, x: f64) -> Result<()> {
    if n < 3 {
        return Err(SpecfunError::Dimension(n));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(SpecfunError::Domain(x));
    }
    Ok(())
}

/// `F_l(1)` from Gauss summation, `(n/2)_l / (n-1)_l`, as a running product.
pub fn fl_at_one(l: usize, n: usize) -> f64 {
    let h = n as f64 / 2.0;
    let m = n as f64 - 1.0;
    (0..l).fold(1.0, |p, i| p * (h + i as f64) / (m + i as f64))
}

fn fl_at_one_dd(l: usize, n: usize) -> Dd {
    let h = n as f64 / 2.0;
    let m = n as f64 - 1.0;
    (0..l).fold(Dd::ONE, |p, i| p * Dd::new(h + i as f64) / Dd::new(m + i as f64))
}

/// Plain Gauss series for `F_l(x)`. Terminates for even n; for odd n it is
/// summed until the geometric tail bound drops below `rel_tol`, which never
/// happens at x = 1 (the tail there decays only algebraically).
pub fn hyp2f1_fl_series(l: usize, n: usize, x: f64, cfg: &SeriesConfig) -> Result<f64> {
    check(n, x)?;
    let a = l as f64;
    let b = 1.0 - n as f64 / 2.0;
    let c = a + n as f64 / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..cfg.max_terms {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if x < 1.0 && term.abs() * x / (1.0 - x) <= cfg.rel_tol * sum.abs() {
            return Ok(sum);
        }
    }
    Err(SpecfunError::NonConvergence { l, n, x, terms: cfg.max_terms })
}

/// `F_l(x)`.
pub fn hyp2f1_fl(l: usize, n: usize, x: f64) -> Result<f64> {
    hyp2f1_fl_with(l, n, x, &SeriesConfig::default())
}

pub fn hyp2f1_fl_with(l: usize, n: usize, x: f64, cfg: &SeriesConfig) -> Result<f64> {
    Ok(fl_at_one(l, n) * fl_normalized_with(l, n, x, cfg)?)
}

/// `f_l(x) = F_l(x) / F_l(1)`.
pub fn fl_normalized(l: usize, n: usize, x: f64) -> Result<f64> {
    fl_normalized_with(l, n, x, &SeriesConfig::default())
}

pub fn fl_normalized_with(l: usize, n: usize, x: f64, cfg: &SeriesConfig) -> Result<f64> {
    Ok(RadialFactor::with_config(l, n, *cfg)?.derivatives(x, 0)?[0])
}

/// Coefficients of `f_l` as a polynomial in `w = 1 - x` for even n = 2p.
/// Transforming the terminating series to `1 - x` leaves only positive terms:
/// `a_k = (p-1)^(k) (l)_k / ((2p-2)^(k) k!)` with falling factorials `^(k)`.
fn even_w_coeffs(l: usize, p: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    let mut a = 1.0;
    for k in 0..p - 1 {
        let kf = k as f64;
        a *= (p as f64 - 1.0 - kf) * (l as f64 + kf) / ((2.0 * p as f64 - 2.0 - kf) * (kf + 1.0));
        out.push(a);
    }
    out
}

/// Expansion `sum_i (alpha_i + beta_i ln w) w^(i + shift)` of `f_l` around x = 1
/// for odd n, from the connection formula with integer `c - a - b = n - 1`.
#[derive(Debug, Clone)]
struct LogSeries {
    shift: i32,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl LogSeries {
    fn build(l: usize, n: usize, w: f64) -> LogSeries {
        let a = l as f64;
        let b = 1.0 - n as f64 / 2.0;
        let m = n - 1;
        let mf = m as f64;
        let mut alpha = vec![0.0; m];
        let mut beta = vec![0.0; m];
        let mut t = 1.0;
        for (k, slot) in alpha.iter_mut().enumerate() {
            *slot = t;
            let kf = k as f64;
            t *= (a + kf) * (b + kf) / ((kf + 1.0) * (1.0 - mf + kf));
        }
        if l == 0 {
            return LogSeries { shift: 0, alpha, beta };
        }
        // K = (a)_m (b)_m / (m-1)!
        let big_k = pochhammer(a, m) * pochhammer(b, m) / (1..m).fold(1.0, |p, i| p * i as f64);
        let harmonic = |k: usize| (1..=k).fold(0.0, |s, i| s + 1.0 / i as f64);
        let mut h_j = 0.0;
        let mut h_jm = harmonic(m);
        let mut h_ljm = harmonic(l + m - 1);
        let mut odd_sum: f64 = (1..=(n - 1) / 2).map(|i| 2.0 / (2 * i - 1) as f64).sum();
        let ln2 = std::f64::consts::LN_2;
        let lw = if w > 0.0 { w.ln().abs() } else { 0.0 };
        // d_j = (a+m)_j (b+m)_j / (j! (j+m)!)
        let mut d = 1.0 / (1..=m).fold(1.0, |p, i| p * i as f64);
        let mut scale = 0.0f64;
        for j in 0..4000usize {
            let e = -h_j - h_jm + h_ljm - 2.0 * ln2 + odd_sum;
            alpha.push(-big_k * d * e);
            beta.push(-big_k * d);
            let size = (big_k * d).abs() * (e.abs() + lw + 1.0) * w.powi((m + j) as i32);
            scale = scale.max(size);
            if j > 4 && size < 1e-18 * scale {
                break;
            }
            let jf = j as f64;
            d *= (a + mf + jf) * (b + mf + jf) / ((jf + 1.0) * (jf + 1.0 + mf));
            h_j += 1.0 / (jf + 1.0);
            h_jm += 1.0 / (jf + 1.0 + mf);
            h_ljm += 1.0 / (a + mf + jf);
            odd_sum += 2.0 / (2.0 * ((n - 1) / 2 + j + 1) as f64 - 1.0);
        }
        LogSeries { shift: 0, alpha, beta }
    }

    /// d/dw, term by term.
    fn derivative(&self) -> LogSeries {
        let mut alpha = Vec::with_capacity(self.alpha.len());
        let mut beta = Vec::with_capacity(self.beta.len());
        for (i, (&al, &be)) in self.alpha.iter().zip(&self.beta).enumerate() {
            let e = (i as i32 + self.shift) as f64;
            alpha.push(e * al + be);
            beta.push(e * be);
        }
        LogSeries { shift: self.shift - 1, alpha, beta }
    }

    fn eval(&self, w: f64) -> f64 {
        let mut s = 0.0;
        if w == 0.0 {
            for (i, (&al, &be)) in self.alpha.iter().zip(&self.beta).enumerate() {
                let e = i as i32 + self.shift;
                if e < 0 && (al != 0.0 || be != 0.0) {
                    return f64::INFINITY.copysign(if be != 0.0 { be } else { al });
                }
                if e == 0 {
                    if be != 0.0 {
                        return f64::INFINITY.copysign(-be);
                    }
                    s += al;
                }
            }
            return s;
        }
        let lw = w.ln();
        for (i, (&al, &be)) in self.alpha.iter().zip(&self.beta).enumerate() {
            if al == 0.0 && be == 0.0 {
                continue;
            }
            s += (al + be * lw) * w.powi(i as i32 + self.shift);
        }
        s
    }
}

/// Radial factor of degree l in dimension n with `F_l(1)` cached.
#[derive(Debug, Clone)]
pub struct RadialFactor {
    pub l: usize,
    pub n: usize,
    pub value_at_one: f64,
    cfg: SeriesConfig,
    w_coeffs: Option<Vec<f64>>,
}

impl RadialFactor {
    pub fn new(l: usize, n: usize) -> Result<Self> {
        Self::with_config(l, n, SeriesConfig::default())
    }

    pub fn with_config(l: usize, n: usize, cfg: SeriesConfig) -> Result<Self> {
        if n < 3 {
            return Err(SpecfunError::Dimension(n));
        }
        let w_coeffs = (n % 2 == 0).then(|| even_w_coeffs(l, n / 2));
        Ok(RadialFactor { l, n, value_at_one: fl_at_one(l, n), cfg, w_coeffs })
    }

    /// `F_l(x)`.
    pub fn unnormalized(&self, x: f64) -> Result<f64> {
        Ok(self.value_at_one * self.value(x)?)
    }

    /// `f_l(x)`.
    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.derivatives(x, 0)?[0])
    }

    /// `[f_l(x), f_l'(x), ..., f_l^(order)(x)]`.
    pub fn derivatives(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        check(self.n, x)?;
        if self.l == 0 {
            let mut out = vec![0.0; order + 1];
            out[0] = 1.0;
            return Ok(out);
        }
        let w = 1.0 - x;
        if let Some(a) = &self.w_coeffs {
            let mut out = Vec::with_capacity(order + 1);
            for j in 0..=order {
                let mut s = 0.0;
                for (k, &ak) in a.iter().enumerate().skip(j) {
                    let fall = ((k - j + 1)..=k).fold(1.0, |p, i| p * i as f64);
                    s += ak * fall * w.powi((k - j) as i32);
                }
                out.push(if j % 2 == 0 { s } else { -s });
            }
            return Ok(out);
        }
        let m = (self.n - 1) as f64;
        if w < (4.0 / (self.l as f64 + m)).min(0.5) {
            let mut series = LogSeries::build(self.l, self.n, w);
            let mut out = Vec::with_capacity(order + 1);
            for j in 0..=order {
                let v = series.eval(w);
                out.push(if j % 2 == 0 { v } else { -v });
                series = series.derivative();
            }
            return Ok(out);
        }
        self.direct_derivatives(x, order)
    }

    fn direct_derivatives(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        let a = self.l as f64;
        let b = 1.0 - self.n as f64 / 2.0;
        let c = a + self.n as f64 / 2.0;
        let mut sums = vec![0.0; order + 1];
        let mut abs_sums = vec![0.0; order + 1];
        sums[0] = 1.0;
        abs_sums[0] = 1.0;
        let mut t = 1.0;
        let bound = x / (1.0 - x);
        for k in 0..self.cfg.max_terms {
            let kf = k as f64;
            t *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0));
            let kk = k + 1;
            let mut done = true;
            let mut fall = 1.0;
            for j in 0..=order.min(kk) {
                let term = t * fall * x.powi((kk - j) as i32);
                sums[j] += term;
                abs_sums[j] += term.abs();
                if term.abs() * bound * (j as f64 + 2.0)
                    > self.cfg.rel_tol * sums[j].abs().max(1e-6 * abs_sums[j])
                {
                    done = false;
                }
                fall *= (kk - j) as f64;
            }
            if t == 0.0 || (done && kk > order) {
                let inv = 1.0 / self.value_at_one;
                return Ok(sums.into_iter().map(|s| s * inv).collect());
            }
        }
        Err(SpecfunError::NonConvergence { l: self.l, n: self.n, x, terms: self.cfg.max_terms })
    }
}

/// `f_l(x)` in double-double precision for `x` well inside [0, 1).
/// Used by the kernel series, whose terms cancel heavily at large angles.
pub fn fl_normalized_dd(l: usize, n: usize, x: Dd, max_terms: usize) -> Result<Dd> {
    check(n, x.to_f64())?;
    if l == 0 {
        return Ok(Dd::ONE);
    }
    if n % 2 == 0 {
        let p = n / 2;
        let w = Dd::ONE - x;
        let mut a = Dd::ONE;
        let mut s = Dd::ONE;
        let mut wp = Dd::ONE;
        for k in 0..p - 1 {
            let kf = k as f64;
            a = a * Dd::prod(p as f64 - 1.0 - kf, l as f64 + kf)
                / Dd::prod(2.0 * p as f64 - 2.0 - kf, kf + 1.0);
            wp = wp * w;
            s = s + a * wp;
        }
        return Ok(s);
    }
    let xf = x.to_f64();
    if xf >= 1.0 {
        return Err(SpecfunError::NonConvergence { l, n, x: xf, terms: 0 });
    }
    let a = l as f64;
    let b = 1.0 - n as f64 / 2.0;
    let c = a + n as f64 / 2.0;
    let mut t = Dd::ONE;
    let mut s = Dd::ONE;
    let bound = xf / (1.0 - xf);
    for k in 0..max_terms {
        let kf = k as f64;
        t = t * Dd::prod(a + kf, b + kf) / Dd::prod(c + kf, kf + 1.0) * x;
        s = s + t;
        if t.hi.abs() * bound <= 1e-31 * s.hi.abs() {
            return Ok(s / fl_at_one_dd(l, n));
        }
    }
    Err(SpecfunError::NonConvergence { l, n, x: xf, terms: max_terms })
}

/// Gegenbauer polynomial `C_l^lambda(t)` by the three-term recurrence.
pub fn gegenbauer(l: usize, lambda: f64, t: f64) -> f64 {
    let mut prev = 1.0;
    if l == 0 {
        return prev;
    }
    let mut cur = 2.0 * lambda * t;
    for k in 2..=l {
        let kf = k as f64;
        let next = (2.0 * t * (kf + lambda - 1.0) * cur - (kf + 2.0 * lambda - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    cur
}

/// Zonal harmonic `Z_l(t) = (2l+n-2)/(n-2) C_l^((n-2)/2)(t)`, the normalization
/// under which `sum_l r^l Z_l(t)` is the Euclidean Poisson kernel.
pub fn zonal(l: usize, n: usize, t: f64) -> f64 {
    let lambda = (n as f64 - 2.0) / 2.0;
    (2.0 * l as f64 + n as f64 - 2.0) / (n as f64 - 2.0) * gegenbauer(l, lambda, t)
}

/// `Z_0(t), ..., Z_lmax(t)` in one pass.
pub fn zonal_all(lmax: usize, n: usize, t: f64) -> Vec<f64> {
    let lambda = (n as f64 - 2.0) / 2.0;
    let nm2 = n as f64 - 2.0;
    let mut out = Vec::with_capacity(lmax + 1);
    let mut prev = 1.0;
    let mut cur = 2.0 * lambda * t;
    out.push(1.0);
    if lmax >= 1 {
        out.push((2.0 + nm2) / nm2 * cur);
    }
    for k in 2..=lmax {
        let kf = k as f64;
        let next = (2.0 * t * (kf + lambda - 1.0) * cur - (kf + 2.0 * lambda - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
        out.push((2.0 * kf + nm2) / nm2 * cur);
    }
    out
}

/// `Z_l'(t)` for l = 0..=lmax, using `d/dt C_l^lambda = 2 lambda C_(l-1)^(lambda+1)`,
/// which gives `Z_l' = (2l+n-2) C_(l-1)^(n/2)`.
pub fn zonal_all_derivative(lmax: usize, n: usize, t: f64) -> Vec<f64> {
    let mu = n as f64 / 2.0;
    let mut out = vec![0.0; lmax + 1];
    let mut prev = 0.0;
    let mut cur = 1.0;
    for l in 1..=lmax {
        let k = l - 1;
        if k == 1 {
            prev = cur;
            cur = 2.0 * mu * t;
        } else if k >= 2 {
            let kf = k as f64;
            let next = (2.0 * t * (kf + mu - 1.0) * cur - (kf + 2.0 * mu - 2.0) * prev) / kf;
            prev = cur;
            cur = next;
        }
        out[l] = (2.0 * l as f64 + n as f64 - 2.0) * cur;
    }
    out
}

/// `Z_0(t), ..., Z_lmax(t)` in double-double precision.
pub fn zonal_all_dd(lmax: usize, n: usize, t: f64) -> Vec<Dd> {
    let lambda = (n as f64 - 2.0) / 2.0;
    let nm2 = n as f64 - 2.0;
    let t = Dd::new(t);
    let mut out = Vec::with_capacity(lmax + 1);
    let mut prev = Dd::ONE;
    let mut cur = t * (2.0 * lambda);
    out.push(Dd::ONE);
    if lmax >= 1 {
        out.push(cur * (2.0 + nm2) / nm2);
    }
    for k in 2..=lmax {
        let kf = k as f64;
        let next = (t * (2.0 * (kf + lambda - 1.0)) * cur - prev * (kf + 2.0 * lambda - 2.0)) / kf;
        prev = cur;
        cur = next;
        out.push(cur * (2.0 * kf + nm2) / nm2);
    }
    out
}

/// Degree-l Gegenbauer polynomial with parameter `(n-2)/2`, with its monomial
/// coefficients. Evaluation goes through the recurrence, not the monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalPolynomial {
    pub l: usize,
    pub n: usize,
    /// Monomial coefficients of `C_l^lambda`, constant term first.
    pub coeffs: Vec<f64>,
}

impl ZonalPolynomial {
    pub fn new(l: usize, n: usize) -> Self {
        let lambda = (n as f64 - 2.0) / 2.0;
        let mut prev = vec![1.0];
        let mut cur = vec![0.0, 2.0 * lambda];
        if l == 0 {
            return ZonalPolynomial { l, n, coeffs: prev };
        }
        for k in 2..=l {
            let kf = k as f64;
            let mut next = vec![0.0; k + 1];
            for (i, &c) in cur.iter().enumerate() {
                next[i + 1] += 2.0 * (kf + lambda - 1.0) * c / kf;
            }
            for (i, &c) in prev.iter().enumerate() {
                next[i] -= (kf + 2.0 * lambda - 2.0) * c / kf;
            }
            prev = cur;
            cur = next;
        }
        ZonalPolynomial { l, n, coeffs: cur }
    }

    pub fn gegenbauer(&self, t: f64) -> f64 {
        gegenbauer(self.l, (self.n as f64 - 2.0) / 2.0, t)
    }

    pub fn zonal(&self, t: f64) -> f64 {
        zonal(self.l, self.n, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pochhammer_basics() {
        assert_eq!(pochhammer(3.0, 0), 1.0);
        assert_eq!(pochhammer(2.0, 3), 24.0);
        assert_eq!(pochhammer(3.0, 1), 3.0);
    }

    #[test]
    fn zeroth_factor_is_one() {
        assert_eq!(hyp2f1_fl(0, 5, 0.7).unwrap(), 1.0);
        assert_eq!(fl_normalized(0, 4, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn log_series_and_direct_series_meet() {
        for &n in &[3usize, 5, 7] {
            for &l in &[1usize, 2, 5, 20, 60] {
                let rf = RadialFactor::new(l, n).unwrap();
                let m = (n - 1) as f64;
                let w = (4.0 / (l as f64 + m)).min(0.5) * 0.999;
                let x = 1.0 - w;
                let near = rf.derivatives(x, 3).unwrap();
                let far = rf.direct_derivatives(x, 3).unwrap();
                for j in 0..=3 {
                    let tol = 1e-10 * far[j].abs().max(1.0);
                    assert!((near[j] - far[j]).abs() < tol, "n={n} l={l} j={j}: {} vs {}", near[j], far[j]);
                }
            }
        }
    }

    #[test]
    fn log_series_value_at_one() {
        for &n in &[3usize, 5, 9] {
            for l in 0..10 {
                assert_eq!(fl_normalized(l, n, 1.0).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn dd_factor_matches_f64() {
        for &n in &[3usize, 4, 5, 6] {
            for &l in &[1usize, 7, 40] {
                let x = 0.6;
                let a = fl_normalized(l, n, x).unwrap();
                let b = fl_normalized_dd(l, n, Dd::new(x), 100_000).unwrap().to_f64();
                assert!((a - b).abs() < 1e-11 * a.abs(), "n={n} l={l}");
            }
        }
    }

    #[test]
    fn zonal_derivative_matches_difference() {
        let h = 1e-6;
        for &n in &[3usize, 4, 6] {
            let d = zonal_all_derivative(8, n, 0.3);
            let p = zonal_all(8, n, 0.3 + h);
            let m = zonal_all(8, n, 0.3 - h);
            for l in 0..=8 {
                let fd = (p[l] - m[l]) / (2.0 * h);
                assert!((fd - d[l]).abs() < 1e-6 * (1.0 + d[l].abs()));
            }
        }
    }

    #[test]
    fn monomial_table_agrees_with_recurrence() {
        let zp = ZonalPolynomial::new(6, 5);
        let t: f64 = 0.37;
        let mono: f64 = zp.coeffs.iter().enumerate().map(|(i, c)| c * t.powi(i as i32)).sum();
        assert!((mono - zp.gegenbauer(t)).abs() < 1e-12);
    }
}
