//! H-harmonic functions in mode form: extension of boundary data, exact
//! application of N, the tangential Laplacian, L, D and the rotation fields
//! `L_ij`, dilation, and finite-difference oracles for black-box evaluators.

use crate::geometry::{dot, norm, sphere_quadrature, unit, GeometryError, GridKind};
use crate::quad::sphere_zonal_rule;
use crate::specfun::{zonal_all, zonal_all_derivative, RadialFactor, SpecfunError};
use nalgebra::DMatrix;
use rand::Rng;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarmonicError {
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("origin singularity: r = {0:e} below the finite-difference floor")]
    OriginSingularity(f64),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, HarmonicError>;

/// Black-box finite differencing is refused inside this radius.
pub const R_MIN: f64 = 1e-3;

/// Largest degree accepted for full n = 3 expansions.
pub const SPH3_LMAX: usize = 32;

/// Zonal boundary data `f(xi) = sum_l c_l Z_l(<xi, pole>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalExpansion {
    pub n: usize,
    pub pole: Vec<f64>,
    pub coeffs: Vec<f64>,
}

impl ZonalExpansion {
    pub fn new(n: usize, pole: &[f64], coeffs: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(HarmonicError::UnsupportedDimension(n));
        }
        if pole.len() != n || norm(pole) == 0.0 {
            return Err(HarmonicError::InvalidData("pole must be a nonzero vector of length n".into()));
        }
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(HarmonicError::InvalidData("coefficients must be finite and non-empty".into()));
        }
        Ok(ZonalExpansion { n, pole: unit(pole), coeffs })
    }

    pub fn lmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Boundary profile at `t = <xi, pole>`.
    pub fn profile(&self, t: f64) -> f64 {
        let z = zonal_all(self.lmax(), self.n, t);
        self.coeffs.iter().zip(&z).map(|(c, z)| c * z).sum()
    }

    /// Projection of a profile onto degrees 0..=degree with an `npts`-point
    /// Gauss-Gegenbauer rule: `c_l = int f Z_l dsigma / Z_l(1)`.
    pub fn project<F: Fn(f64) -> f64>(n: usize, pole: &[f64], f: F, degree: usize, npts: usize) -> Result<Self> {
        if n < 3 {
            return Err(HarmonicError::UnsupportedDimension(n));
        }
        let rule = sphere_zonal_rule(npts, n);
        let mut c = vec![0.0; degree + 1];
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let ft = f(t);
            for (cl, z) in c.iter_mut().zip(zonal_all(degree, n, t)) {
                *cl += w * ft * z;
            }
        }
        let ones = zonal_all(degree, n, 1.0);
        for (cl, z1) in c.iter_mut().zip(ones) {
            *cl /= z1;
        }
        Self::new(n, pole, c)
    }

    /// Samples `(t_i, f(t_i))`, linearly interpolated and projected. Degree
    /// defaults to half the sample count.
    pub fn from_samples(n: usize, pole: &[f64], samples: &[(f64, f64)], degree: Option<usize>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(HarmonicError::InvalidData("need at least two samples".into()));
        }
        let mut s = samples.to_vec();
        if s.iter().any(|(t, v)| !t.is_finite() || !v.is_finite() || t.abs() > 1.0) {
            return Err(HarmonicError::InvalidData("samples must be finite with t in [-1, 1]".into()));
        }
        s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let interp = |t: f64| -> f64 {
            if t <= s[0].0 {
                return s[0].1;
            }
            if t >= s[s.len() - 1].0 {
                return s[s.len() - 1].1;
            }
            let i = s.partition_point(|p| p.0 <= t).max(1);
            let (t0, v0) = s[i - 1];
            let (t1, v1) = s[i];
            if t1 == t0 {
                v0
            } else {
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        };
        let degree = degree.unwrap_or(samples.len() / 2);
        Self::project(n, pole, interp, degree, (2 * degree + 2).max(samples.len()))
    }

    /// Coefficients `c_l = rho_l (l + 1)^(-decay)` with `rho_l` uniform in [-1, 1].
    pub fn random<R: Rng>(n: usize, pole: &[f64], lmax: usize, decay: f64, rng: &mut R) -> Result<Self> {
        let c = (0..=lmax).map(|l| rng.gen_range(-1.0..=1.0) * (l as f64 + 1.0).powf(-decay)).collect();
        Self::new(n, pole, c)
    }
}

/// Real spherical harmonics on S^2 with `int Y_lm^2 dsigma = 1` for the
/// normalized measure, so that `sum_m Y_lm(a) Y_lm(b) = Z_l(<a, b>)`.
/// Returned as `[l][m + l]`, with m < 0 the sine family.
pub fn real_sph_harm(lmax: usize, x: &[f64]) -> Vec<Vec<f64>> {
    let d = unit(x);
    let ct = d[2].clamp(-1.0, 1.0);
    let st = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let phi = d[1].atan2(d[0]);
    // pbar[l][m] = sqrt((2l+1)(l-m)!/(l+m)!) P_l^m
    let mut pbar = vec![vec![0.0; lmax + 1]; lmax + 1];
    pbar[0][0] = 1.0;
    for m in 1..=lmax {
        pbar[m][m] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * st * pbar[m - 1][m - 1];
    }
    for m in 0..lmax {
        pbar[m + 1][m] = ((2 * m + 3) as f64).sqrt() * ct * pbar[m][m];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            pbar[l][m] = a * (ct * pbar[l - 1][m] - b * pbar[l - 2][m]);
        }
    }
    let s2 = std::f64::consts::SQRT_2;
    (0..=lmax)
        .map(|l| {
            let mut row = vec![0.0; 2 * l + 1];
            row[l] = pbar[l][0];
            for m in 1..=l {
                let (s, c) = (m as f64 * phi).sin_cos();
                row[l + m] = s2 * pbar[l][m] * c;
                row[l - m] = s2 * pbar[l][m] * s;
            }
            row
        })
        .collect()
}

/// Full n = 3 boundary data `f = sum_l sum_m a_lm Y_lm`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sph3Coeffs {
    pub a: Vec<Vec<f64>>,
}

impl Sph3Coeffs {
    pub fn new(a: Vec<Vec<f64>>) -> Result<Self> {
        if a.is_empty() || a.len() > SPH3_LMAX + 1 {
            return Err(HarmonicError::InvalidData(format!("degree count {} outside 1..={}", a.len(), SPH3_LMAX + 1)));
        }
        for (l, row) in a.iter().enumerate() {
            if row.len() != 2 * l + 1 || row.iter().any(|v| !v.is_finite()) {
                return Err(HarmonicError::InvalidData(format!("degree {l} needs {} finite coefficients", 2 * l + 1)));
            }
        }
        Ok(Sph3Coeffs { a })
    }

    pub fn lmax(&self) -> usize {
        self.a.len() - 1
    }

    /// Addition theorem: `c_l Z_l(<., pole>) = sum_m c_l Y_lm(pole) Y_lm`.
    pub fn from_zonal(z: &ZonalExpansion) -> Result<Self> {
        if z.n != 3 {
            return Err(HarmonicError::UnsupportedDimension(z.n));
        }
        let y = real_sph_harm(z.lmax(), &z.pole);
        Self::new(z.coeffs.iter().zip(y).map(|(c, row)| row.into_iter().map(|v| c * v).collect()).collect())
    }

    pub fn random<R: Rng>(lmax: usize, decay: f64, rng: &mut R) -> Result<Self> {
        let a = (0..=lmax)
            .map(|l| (0..2 * l + 1).map(|_| rng.gen_range(-1.0..=1.0) * (l as f64 + 1.0).powf(-decay)).collect())
            .collect();
        Self::new(a)
    }

    pub fn profile(&self, x: &[f64]) -> f64 {
        let y = real_sph_harm(self.lmax(), x);
        self.a.iter().zip(&y).map(|(a, y)| dot(a, y)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Zonal(ZonalExpansion),
    Sph3(Sph3Coeffs),
}

/// Index of the rotation plane (i, j), i < j < 3.
fn plane_index(i: usize, j: usize) -> Option<(usize, f64)> {
    match (i, j) {
        (0, 1) => Some((0, 1.0)),
        (1, 0) => Some((0, -1.0)),
        (0, 2) => Some((1, 1.0)),
        (2, 0) => Some((1, -1.0)),
        (1, 2) => Some((2, 1.0)),
        (2, 1) => Some((2, -1.0)),
        _ => None,
    }
}

const PLANES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Matrices of `L_ij` on each degree, `[plane][l]`.
#[derive(Debug)]
struct LijTables {
    lmax: usize,
    mats: [Vec<DMatrix<f64>>; 3],
}

fn lij_tables(lmax: usize) -> Arc<LijTables> {
    static CACHE: OnceLock<Mutex<Option<Arc<LijTables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(None));
    let mut guard = cache.lock().unwrap();
    if let Some(t) = guard.as_ref() {
        if t.lmax >= lmax {
            return t.clone();
        }
    }
    let t = Arc::new(build_lij(lmax));
    *guard = Some(t.clone());
    t
}

/// `L_ij Y(x) = d/dtheta Y(R_theta x)` at 0, with the derivative of the
/// degree-lmax trigonometric interpolant, then projected back with a rule
/// exact through degree 2 lmax.
fn build_lij(lmax: usize) -> LijTables {
    let grid = sphere_quadrature(3, 2 * lmax, GridKind::Full).expect("n = 3 full grid");
    let k = 2 * lmax + 1;
    let dw: Vec<f64> = (0..k)
        .map(|s| {
            let th = 2.0 * PI * s as f64 / k as f64;
            (1..=lmax).map(|m| 2.0 * m as f64 * (m as f64 * th).sin()).sum::<f64>() / k as f64
        })
        .collect();
    let mut mats: [Vec<DMatrix<f64>>; 3] = Default::default();
    for (p, &(i, j)) in PLANES.iter().enumerate() {
        let mut acc: Vec<DMatrix<f64>> = (0..=lmax).map(|l| DMatrix::zeros(2 * l + 1, 2 * l + 1)).collect();
        for (x, &w) in grid.nodes.iter().zip(&grid.weights) {
            let y0 = real_sph_harm(lmax, x);
            let mut g: Vec<Vec<f64>> = (0..=lmax).map(|l| vec![0.0; 2 * l + 1]).collect();
            for (s, &d) in dw.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let th = 2.0 * PI * s as f64 / k as f64;
                let (sn, cs) = th.sin_cos();
                let mut xr = x.clone();
                xr[i] = x[i] * cs - x[j] * sn;
                xr[j] = x[i] * sn + x[j] * cs;
                let ys = real_sph_harm(lmax, &xr);
                for (gl, yl) in g.iter_mut().zip(&ys) {
                    for (gv, yv) in gl.iter_mut().zip(yl) {
                        *gv += d * yv;
                    }
                }
            }
            for l in 0..=lmax {
                let m = &mut acc[l];
                for a in 0..2 * l + 1 {
                    let wy = w * y0[l][a];
                    for b in 0..2 * l + 1 {
                        m[(a, b)] += wy * g[l][b];
                    }
                }
            }
        }
        mats[p] = acc;
    }
    LijTables { lmax, mats }
}

#[derive(Debug, Clone, PartialEq)]
enum Angular {
    Zonal { pole: Vec<f64>, coeffs: Vec<f64> },
    /// Coefficients plus their images under `L_01, L_02, L_12`.
    Sph3 { a: Vec<Vec<f64>>, rot: [Vec<Vec<f64>>; 3] },
}

/// `sign * (1 - r^2)^damp * N^n_pow * (-Delta_sigma)^neg_lap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOp {
    pub n_pow: usize,
    pub neg_lap: f64,
    pub sign: f64,
    pub damp: u32,
}

impl ModeOp {
    pub const IDENTITY: ModeOp = ModeOp { n_pow: 0, neg_lap: 0.0, sign: 1.0, damp: 0 };

    pub fn n(k: usize) -> Self {
        ModeOp { n_pow: k, ..Self::IDENTITY }
    }

    /// `Delta_sigma^j`.
    pub fn lap(j: u32) -> Self {
        ModeOp { neg_lap: j as f64, sign: if j % 2 == 0 { 1.0 } else { -1.0 }, ..Self::IDENTITY }
    }

    /// `(-Delta_sigma)^s` for any real s >= 0.
    pub fn neg_lap_pow(s: f64) -> Self {
        ModeOp { neg_lap: s, ..Self::IDENTITY }
    }

    pub fn damped(self, d: u32) -> Self {
        ModeOp { damp: self.damp + d, ..self }
    }

    pub fn then_n(self, k: usize) -> Self {
        ModeOp { n_pow: self.n_pow + k, ..self }
    }

    fn weight(&self, l: usize, n: usize) -> f64 {
        if self.neg_lap == 0.0 {
            return self.sign;
        }
        let lam = (l * (l + n - 2)) as f64;
        if lam == 0.0 {
            0.0
        } else {
            self.sign * lam.powf(self.neg_lap)
        }
    }
}

/// Radial mode data at one radius: `N^k R_l` and `(N^k R_l) / r` for
/// k = 0..=kmax + 1, with `R_l(r) = f_l(delta^2 r^2) (delta r)^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialData {
    pub r: f64,
    pub nk: Vec<Vec<f64>>,
    pub over_r: Vec<Vec<f64>>,
}

/// Coefficients with `N^k (x^(l/2) f(x)) = x^(l/2) sum_j c_(k,j) x^j f^(j)(x)`
/// where `N = 2x d/dx`.
fn n_power_coeffs(l: usize, kmax: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![1.0]];
    for k in 0..kmax {
        let prev = &c[k];
        let mut next = vec![0.0; prev.len() + 1];
        for (j, &v) in prev.iter().enumerate() {
            next[j] += (2 * j + l) as f64 * v;
            next[j + 1] += 2.0 * v;
        }
        c.push(next);
    }
    c
}

/// An H-harmonic function (or an H_delta-harmonic dilate) given by finitely many modes.
#[derive(Debug, Clone)]
pub struct HarmonicFunction {
    pub n: usize,
    pub delta: f64,
    angular: Angular,
    radial: Arc<Vec<RadialFactor>>,
}

impl HarmonicFunction {
    pub fn extend(boundary: &Boundary) -> Result<Self> {
        match boundary {
            Boundary::Zonal(z) => Self::extend_zonal(z),
            Boundary::Sph3(s) => Self::extend_sph3(s),
        }
    }

    pub fn extend_zonal(z: &ZonalExpansion) -> Result<Self> {
        let radial = (0..=z.lmax()).map(|l| RadialFactor::new(l, z.n)).collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(HarmonicFunction {
            n: z.n,
            delta: 1.0,
            angular: Angular::Zonal { pole: z.pole.clone(), coeffs: z.coeffs.clone() },
            radial: Arc::new(radial),
        })
    }

    pub fn extend_sph3(s: &Sph3Coeffs) -> Result<Self> {
        let radial = (0..=s.lmax()).map(|l| RadialFactor::new(l, 3)).collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(HarmonicFunction { n: 3, delta: 1.0, angular: Self::sph3_angular(s.a.clone()), radial: Arc::new(radial) })
    }

    fn sph3_angular(a: Vec<Vec<f64>>) -> Angular {
        let lmax = a.len() - 1;
        let tables = lij_tables(lmax);
        let rot = [0, 1, 2].map(|p| {
            a.iter()
                .enumerate()
                .map(|(l, al)| {
                    let v = &tables.mats[p][l] * nalgebra::DVector::from_column_slice(al);
                    v.iter().copied().collect()
                })
                .collect()
        });
        Angular::Sph3 { a, rot }
    }

    pub fn lmax(&self) -> usize {
        self.radial.len() - 1
    }

    pub fn is_zonal(&self) -> bool {
        matches!(self.angular, Angular::Zonal { .. })
    }

    pub fn pole(&self) -> Option<&[f64]> {
        match &self.angular {
            Angular::Zonal { pole, .. } => Some(pole),
            Angular::Sph3 { .. } => None,
        }
    }

    pub fn zonal_coeffs(&self) -> Option<&[f64]> {
        match &self.angular {
            Angular::Zonal { coeffs, .. } => Some(coeffs),
            Angular::Sph3 { .. } => None,
        }
    }

    /// Full n = 3 form of a zonal function.
    pub fn to_sph3(&self) -> Result<Self> {
        match &self.angular {
            Angular::Sph3 { .. } => Ok(self.clone()),
            Angular::Zonal { pole, coeffs } => {
                let s = Sph3Coeffs::from_zonal(&ZonalExpansion::new(self.n, pole, coeffs.clone())?)?;
                Ok(HarmonicFunction { angular: Self::sph3_angular(s.a), ..self.clone() })
            }
        }
    }

    /// `v(x) = u(delta x)`.
    pub fn dilate(&self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(HarmonicError::InvalidData(format!("dilation {delta} outside (0, 1]")));
        }
        Ok(HarmonicFunction { delta: self.delta * delta, ..self.clone() })
    }

    /// `L_ij u` for n = 3; it commutes with extension.
    pub fn apply_lij(&self, i: usize, j: usize) -> Result<Self> {
        if self.n != 3 {
            return Err(HarmonicError::UnsupportedDimension(self.n));
        }
        let (p, sign) = plane_index(i, j).ok_or_else(|| HarmonicError::InvalidData(format!("no rotation plane ({i}, {j})")))?;
        let full = self.to_sph3()?;
        let Angular::Sph3 { rot, .. } = &full.angular else { unreachable!() };
        let a = rot[p].iter().map(|row| row.iter().map(|v| sign * v).collect()).collect();
        Ok(HarmonicFunction { angular: Self::sph3_angular(a), ..full })
    }

    pub fn radial_data(&self, r: f64, kmax: usize) -> Result<RadialData> {
        let y = self.delta * r;
        let x = y * y;
        let mut nk = vec![vec![0.0; self.radial.len()]; kmax + 2];
        let mut over_r = vec![vec![0.0; self.radial.len()]; kmax + 2];
        for (l, rf) in self.radial.iter().enumerate() {
            let f = rf.derivatives(x, kmax + 1)?;
            let c = n_power_coeffs(l, kmax + 1);
            for (k, ck) in c.iter().enumerate() {
                let mut v = 0.0;
                let mut w = 0.0;
                for (j, &cj) in ck.iter().enumerate() {
                    if cj == 0.0 {
                        continue;
                    }
                    v += cj * y.powi((l + 2 * j) as i32) * f[j];
                    let p = l as i32 + 2 * j as i32 - 1;
                    if p >= 0 {
                        w += cj * y.powi(p) * f[j];
                    }
                }
                nk[k][l] = v;
                over_r[k][l] = self.delta * w;
            }
        }
        Ok(RadialData { r, nk, over_r })
    }

    fn radial_damp(op: &ModeOp, r: f64) -> (f64, f64) {
        let w = 1.0 - r * r;
        let d = op.damp as i32;
        let g = w.powi(d);
        let dg = if d == 0 { 0.0 } else { -2.0 * d as f64 * r * w.powi(d - 1) };
        (g, dg)
    }

    /// `op u` at `r * dir` from precomputed radial data.
    pub fn value_with(&self, rd: &RadialData, dir: &[f64], op: ModeOp) -> f64 {
        let (g, _) = Self::radial_damp(&op, rd.r);
        let nk = &rd.nk[op.n_pow];
        let lmax = self.lmax();
        let s: f64 = match &self.angular {
            Angular::Zonal { pole, coeffs } => {
                let z = zonal_all(lmax, self.n, dot(dir, pole).clamp(-1.0, 1.0));
                (0..=lmax).map(|l| coeffs[l] * op.weight(l, self.n) * nk[l] * z[l]).sum()
            }
            Angular::Sph3 { a, .. } => {
                let y = real_sph_harm(lmax, dir);
                (0..=lmax).map(|l| op.weight(l, 3) * nk[l] * dot(&a[l], &y[l])).sum()
            }
        };
        g * s
    }

    /// `(|grad(op u)|^2, (N op u)^2)` at `r * dir`.
    pub fn grad_with(&self, rd: &RadialData, dir: &[f64], op: ModeOp) -> (f64, f64) {
        let (g, dg) = Self::radial_damp(&op, rd.r);
        let k = op.n_pow;
        let lmax = self.lmax();
        let (ur, tang2) = match &self.angular {
            Angular::Zonal { pole, coeffs } => {
                let t = dot(dir, pole).clamp(-1.0, 1.0);
                let z = zonal_all(lmax, self.n, t);
                let dz = zonal_all_derivative(lmax, self.n, t);
                let mut ur = 0.0;
                let mut val = 0.0;
                let mut ut = 0.0;
                for l in 0..=lmax {
                    let w = coeffs[l] * op.weight(l, self.n);
                    ur += w * rd.over_r[k + 1][l] * z[l];
                    val += w * rd.nk[k][l] * z[l];
                    ut += w * rd.over_r[k][l] * dz[l];
                }
                (g * ur + dg * val, g * g * (1.0 - t * t) * ut * ut)
            }
            Angular::Sph3 { a, rot } => {
                let y = real_sph_harm(lmax, dir);
                let mut ur = 0.0;
                let mut val = 0.0;
                let mut tang = [0.0; 3];
                for l in 0..=lmax {
                    let w = op.weight(l, 3);
                    let ay = dot(&a[l], &y[l]);
                    ur += w * rd.over_r[k + 1][l] * ay;
                    val += w * rd.nk[k][l] * ay;
                    for p in 0..3 {
                        tang[p] += w * rd.over_r[k][l] * dot(&rot[p][l], &y[l]);
                    }
                }
                (g * ur + dg * val, g * g * tang.iter().map(|v| v * v).sum::<f64>())
            }
        };
        (ur * ur + tang2, (rd.r * ur).powi(2))
    }

    fn split(x: &[f64]) -> (f64, Vec<f64>) {
        let r = norm(x);
        if r == 0.0 {
            let mut d = vec![0.0; x.len()];
            d[0] = 1.0;
            (0.0, d)
        } else {
            (r, x.iter().map(|v| v / r).collect())
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(HarmonicError::InvalidData(format!("point of length {} for n = {}", x.len(), self.n)));
        }
        if dot(x, x) >= 1.0 {
            return Err(HarmonicError::InvalidData("point outside the open ball".into()));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_op(x, ModeOp::IDENTITY)
    }

    pub fn eval_op(&self, x: &[f64], op: ModeOp) -> Result<f64> {
        self.check_point(x)?;
        let (r, d) = Self::split(x);
        Ok(self.value_with(&self.radial_data(r, op.n_pow)?, &d, op))
    }

    /// `N^k u(x)`.
    pub fn apply_n(&self, x: &[f64], k: usize) -> Result<f64> {
        self.eval_op(x, ModeOp::n(k))
    }

    /// `Delta_sigma^j u(x)`.
    pub fn apply_lap_sigma(&self, x: &[f64], j: u32) -> Result<f64> {
        self.eval_op(x, ModeOp::lap(j))
    }

    /// `|grad(op u)|^2` at x.
    pub fn grad_sq(&self, x: &[f64], op: ModeOp) -> Result<f64> {
        self.check_point(x)?;
        let (r, d) = Self::split(x);
        Ok(self.grad_with(&self.radial_data(r, op.n_pow + 1)?, &d, op).0)
    }

    /// `L (op u)(x)` mode by mode,
    /// `L = r^-2 [(1-r^2) N^2 + (n-2)(1+r^2) N + (1-r^2) Delta_sigma]`.
    pub fn apply_l(&self, x: &[f64], op: ModeOp) -> Result<f64> {
        self.check_point(x)?;
        if op.damp != 0 {
            return Err(HarmonicError::InvalidData("L of a damped operator is not mode-diagonal".into()));
        }
        let (r, d) = Self::split(x);
        if r == 0.0 {
            return Err(HarmonicError::OriginSingularity(r));
        }
        let rd = self.radial_data(r, op.n_pow + 2)?;
        let k = op.n_pow;
        let (w, p) = (1.0 - r * r, 1.0 + r * r);
        let nf = (self.n - 2) as f64;
        let mut lk = rd.nk[k].clone();
        for (l, v) in lk.iter_mut().enumerate() {
            let lam = (l * (l + self.n - 2)) as f64;
            *v = (w * rd.nk[k + 2][l] + nf * p * rd.nk[k + 1][l] - w * lam * rd.nk[k][l]) / (r * r);
        }
        let shifted = RadialData { r, nk: vec![lk], over_r: vec![] };
        Ok(self.value_with(&shifted, &d, ModeOp { n_pow: 0, ..op }))
    }

    /// `D (op u)(x) = (1 - r^2) L (op u)(x)`.
    pub fn apply_d(&self, x: &[f64], op: ModeOp) -> Result<f64> {
        Ok((1.0 - dot(x, x)) * self.apply_l(x, op)?)
    }

    /// Boundary values `sum_l c_l f_l(delta^2) delta^l Y_l(xi)`.
    pub fn boundary_value(&self, xi: &[f64]) -> Result<f64> {
        let d = unit(xi);
        if self.delta == 1.0 {
            let rd = RadialData { r: 1.0, nk: vec![vec![1.0; self.radial.len()]], over_r: vec![] };
            return Ok(self.value_with(&rd, &d, ModeOp::IDENTITY));
        }
        Ok(self.value_with(&self.radial_data(1.0, 0)?, &d, ModeOp::IDENTITY))
    }
}

/// Central-difference gradient.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let a = f(&p);
            p[i] = x[i] - h;
            let b = f(&p);
            p[i] = x[i];
            (a - b) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Euclidean Laplacian.
pub fn fd_laplacian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> f64 {
    let c = f(x);
    let mut p = x.to_vec();
    let mut s = 0.0;
    for i in 0..x.len() {
        p[i] = x[i] + h;
        let a = f(&p);
        p[i] = x[i] - h;
        let b = f(&p);
        p[i] = x[i];
        s += a - 2.0 * c + b;
    }
    s / (h * h)
}

/// `N f(x) = x . grad f` by a radial central difference.
pub fn fd_apply_n<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Result<f64> {
    let r = norm(x);
    if r < R_MIN {
        return Err(HarmonicError::OriginSingularity(r));
    }
    let at = |s: f64| f(&x.iter().map(|v| v * (r + s) / r).collect::<Vec<_>>());
    Ok(r * (at(h) - at(-h)) / (2.0 * h))
}

/// `D_delta f = (1 - delta^2 r^2)^2 Delta f + 2 (n-2) delta^2 (1 - delta^2 r^2) x . grad f`
/// by central differences; delta = 1 is D.
pub fn fd_d_residual<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64, delta: f64) -> Result<f64> {
    let r = norm(x);
    if r < R_MIN {
        return Err(HarmonicError::OriginSingularity(r));
    }
    let n = x.len() as f64;
    let w = 1.0 - delta * delta * r * r;
    let g = fd_gradient(f, x, h);
    Ok(w * w * fd_laplacian(f, x, h) + 2.0 * (n - 2.0) * delta * delta * w * dot(x, &g))
}

/// Black-box `L f` from finite differences (`D f / (1 - r^2)`).
pub fn fd_apply_l<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Result<f64> {
    Ok(fd_d_residual(f, x, h, 1.0)? / (1.0 - dot(x, x)))
}

/// `Delta_sigma` of the degree-zero extension of a sphere function, by the
/// Euclidean stencil at a point of the unit sphere.
pub fn fd_lap_sigma<F: Fn(&[f64]) -> f64>(f: &F, xi: &[f64], h: f64) -> f64 {
    let g = |x: &[f64]| f(&unit(x));
    fd_laplacian(&g, &unit(xi), h)
}
