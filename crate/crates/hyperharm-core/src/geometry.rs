//! Ball-model geometry: points, the SO(n,1) action, approach regions,
//! the invariant measure and quadrature grids.

use crate::quad::{gauss_jacobi, gauss_legendre, sphere_zonal_rule};
use nalgebra::DMatrix;
use rand::Rng;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("Mobius denominator {0:e} below 1e-14; malformed group element")]
    DegenerateDenominator(f64),
    #[error("unsupported request: {0}")]
    UnsupportedRequest(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn unit(a: &[f64]) -> Vec<f64> {
    let s = norm(a);
    a.iter().map(|x| x / s).collect()
}

pub fn basis(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// A unit vector orthogonal to `v` (deterministic choice).
pub fn orthogonal_unit(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let i = (0..n).min_by(|&a, &b| v[a].abs().partial_cmp(&v[b].abs()).unwrap()).unwrap();
    let e = basis(n, i);
    let c = dot(&e, v);
    unit(&e.iter().zip(v).map(|(x, y)| x - c * y).collect::<Vec<_>>())
}

/// Interior point stored as radius and unit direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    pub r: f64,
    pub dir: Vec<f64>,
}

impl BallPoint {
    pub fn new(r: f64, dir: &[f64]) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(GeometryError::InvalidPoint(format!("radius {r} outside [0, 1)")));
        }
        let s = norm(dir);
        if !(s > 0.0) || !s.is_finite() {
            return Err(GeometryError::InvalidPoint("direction must be a nonzero vector".into()));
        }
        Ok(BallPoint { r, dir: dir.iter().map(|x| x / s).collect() })
    }

    pub fn origin(n: usize) -> Self {
        BallPoint { r: 0.0, dir: basis(n, 0) }
    }

    pub fn from_cartesian(x: &[f64]) -> Result<Self> {
        let r = norm(x);
        if r == 0.0 {
            return Ok(Self::origin(x.len()));
        }
        Self::new(r, x)
    }

    pub fn dim(&self) -> usize {
        self.dir.len()
    }

    pub fn cartesian(&self) -> Vec<f64> {
        self.dir.iter().map(|d| d * self.r).collect()
    }
}

/// Element of the identity component of SO(n,1), as an (n+1)x(n+1) matrix
/// acting on (x_0, x_1, ..., x_n).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub m: DMatrix<f64>,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        GroupElement { m: DMatrix::identity(n + 1, n + 1) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows() - 1
    }

    /// Embeds a spatial rotation (n x n, orthogonal, det 1).
    pub fn from_rotation(rot: &DMatrix<f64>) -> Self {
        let n = rot.nrows();
        let mut m = DMatrix::identity(n + 1, n + 1);
        m.view_mut((1, 1), (n, n)).copy_from(rot);
        GroupElement { m }
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement { m: &self.m * &other.m }
    }

    /// `J G^T J` with `J = diag(-1, 1, ..., 1)`.
    pub fn inverse(&self) -> GroupElement {
        let mut m = self.m.transpose();
        let k = m.nrows();
        for i in 1..k {
            m[(0, i)] = -m[(0, i)];
            m[(i, 0)] = -m[(i, 0)];
        }
        GroupElement { m }
    }

    /// Largest entry of `G^T J G - J`.
    pub fn form_defect(&self) -> f64 {
        let k = self.m.nrows();
        let mut j = DMatrix::identity(k, k);
        j[(0, 0)] = -1.0;
        let d = self.m.transpose() * &j * &self.m - &j;
        d.amax()
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    /// Uniformly seeded element: rotation . boost(t) . rotation with t in [0, t_max].
    pub fn random<R: Rng>(n: usize, t_max: f64, rng: &mut R) -> Self {
        let r1 = random_rotation(n, rng);
        let r2 = random_rotation(n, rng);
        let t = rng.gen::<f64>() * t_max;
        GroupElement::from_rotation(&r1).compose(&boost(n, t)).compose(&GroupElement::from_rotation(&r2))
    }

    /// An element mapping the origin to `x`.
    pub fn moving_origin_to(x: &BallPoint) -> Self {
        let n = x.dim();
        let t = 2.0 * x.r.atanh();
        let rot = rotation_e1_to(&x.dir);
        GroupElement::from_rotation(&rot).compose(&boost(n, t))
    }
}

/// Boost `a_t`: cosh t, sinh t in the (x_0, x_1) block.
pub fn boost(n: usize, t: f64) -> GroupElement {
    let mut g = GroupElement::identity(n);
    g.m[(0, 0)] = t.cosh();
    g.m[(1, 1)] = t.cosh();
    g.m[(0, 1)] = t.sinh();
    g.m[(1, 0)] = t.sinh();
    g
}

/// Rotation in the plane spanned by e_1 and `v` taking e_1 to the unit vector `v`.
pub fn rotation_e1_to(v: &[f64]) -> DMatrix<f64> {
    let n = v.len();
    let v = unit(v);
    let c = v[0];
    let mut u: Vec<f64> = v.clone();
    u[0] = 0.0;
    let s = norm(&u);
    let mut rot = DMatrix::identity(n, n);
    if s < 1e-15 {
        if c < 0.0 {
            rot[(0, 0)] = -1.0;
            rot[(1, 1)] = -1.0;
        }
        return rot;
    }
    for x in u.iter_mut() {
        *x /= s;
    }
    for i in 0..n {
        for j in 0..n {
            let e_i = if i == 0 { 1.0 } else { 0.0 };
            let e_j = if j == 0 { 1.0 } else { 0.0 };
            rot[(i, j)] += s * (u[i] * e_j - e_i * u[j]) + (c - 1.0) * (e_i * e_j + u[i] * u[j]);
        }
    }
    rot
}

/// Random rotation from QR of a Gaussian-ish matrix, sign-corrected to det 1.
pub fn random_rotation<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| {
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    });
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if q.determinant() < 0.0 {
        for i in 0..n {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// `y = g.x` by the conformal action of SO(n,1) on the ball.
pub fn mobius_act(g: &GroupElement, x: &BallPoint) -> Result<BallPoint> {
    let n = x.dim();
    if g.dim() != n {
        return Err(GeometryError::UnsupportedRequest(format!("group element for n = {} applied to R^{n}", g.dim())));
    }
    let xc = x.cartesian();
    let s = x.r * x.r;
    let m = &g.m;
    let mut den = 0.5 * (1.0 - s) + 0.5 * (1.0 + s) * m[(0, 0)];
    for l in 0..n {
        den += m[(0, l + 1)] * xc[l];
    }
    if den.abs() < 1e-14 {
        return Err(GeometryError::DegenerateDenominator(den));
    }
    let y: Vec<f64> = (0..n)
        .map(|p| {
            let mut num = 0.5 * (1.0 + s) * m[(p + 1, 0)];
            for l in 0..n {
                num += m[(p + 1, l + 1)] * xc[l];
            }
            num / den
        })
        .collect();
    let r = norm(&y);
    if r >= 1.0 {
        return Err(GeometryError::DegenerateDenominator(den));
    }
    if r == 0.0 {
        return Ok(BallPoint::origin(n));
    }
    BallPoint::new(r, &y)
}

/// `(1 - |x|^2)^(-e)`; the invariant measure uses e = n unless configured.
pub fn invariant_measure_weight(x: &BallPoint, exponent: f64) -> f64 {
    (1.0 - x.r * x.r).powf(-exponent)
}

/// Non-tangential approach region: interior of the convex hull of B(0, alpha) and xi.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeRegion {
    pub alpha: f64,
    pub xi: Vec<f64>,
}

impl ConeRegion {
    pub fn new(alpha: f64, xi: &[f64]) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(GeometryError::UnsupportedRequest(format!("aperture {alpha} outside (0, 1)")));
        }
        Ok(ConeRegion { alpha, xi: unit(xi) })
    }

    pub fn contains(&self, x: &BallPoint) -> bool {
        cone_contains_polar(self.alpha, x.r, x.r * dot(&x.dir, &self.xi))
    }

    /// Angular half-width of the slice at radius `rho`, or `None` when the
    /// whole sphere of radius `rho` lies in the region.
    pub fn cap_half_angle(alpha: f64, rho: f64) -> Option<f64> {
        if rho <= alpha {
            None
        } else {
            Some((alpha / rho).asin() - alpha.asin())
        }
    }
}

/// Membership from `|x|` and `<x, xi>`: minimize
/// `|x - t xi|^2 - (1-t)^2 alpha^2` over t in [0, 1].
pub fn cone_contains_polar(alpha: f64, r: f64, x_dot_xi: f64) -> bool {
    let a2 = alpha * alpha;
    let q = |t: f64| r * r - 2.0 * t * x_dot_xi + t * t - (1.0 - t) * (1.0 - t) * a2;
    let t = ((x_dot_xi - a2) / (1.0 - a2)).clamp(0.0, 1.0);
    q(t).min(q(0.0)) < 0.0
}

pub fn cone_contains(region: &ConeRegion, x: &BallPoint) -> bool {
    region.contains(x)
}

/// Union of approach regions over a finite boundary set.
#[derive(Debug, Clone)]
pub struct Tent {
    pub alpha: f64,
    pub base: Vec<Vec<f64>>,
}

impl Tent {
    pub fn contains(&self, x: &BallPoint) -> bool {
        self.base.iter().any(|xi| cone_contains_polar(self.alpha, x.r, x.r * dot(&x.dir, xi)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridKind {
    /// Full grid (n = 3 only).
    Full,
    /// Zonal reduction around a pole; exact only for integrands depending on `<xi, pole>`.
    Zonal(Vec<f64>),
}

/// Quadrature on the sphere for the normalized surface measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub n: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// `<xi, pole>` per node for zonal grids.
    pub zonal_t: Option<Vec<f64>>,
    pub pole: Option<Vec<f64>>,
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Polar Gauss-Legendre x uniform azimuth on S^2, or a Gauss-Gegenbauer
/// zonal rule in any dimension. Exact through the requested degree.
pub fn sphere_quadrature(n: usize, degree: usize, kind: GridKind) -> Result<SphereGrid> {
    if n < 3 {
        return Err(GeometryError::UnsupportedRequest(format!("n = {n} < 3")));
    }
    if degree > 4096 {
        return Err(GeometryError::UnsupportedRequest(format!("degree {degree} above cap 4096")));
    }
    let nt = degree / 2 + 1;
    match kind {
        GridKind::Full => {
            if n != 3 {
                return Err(GeometryError::UnsupportedRequest(format!("full sphere grid requested for n = {n}")));
            }
            let rule = gauss_legendre(nt);
            let nphi = degree + 1;
            let mut nodes = Vec::with_capacity(nt * nphi);
            let mut weights = Vec::with_capacity(nt * nphi);
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                let s = (1.0 - t * t).max(0.0).sqrt();
                for k in 0..nphi {
                    let phi = 2.0 * PI * k as f64 / nphi as f64;
                    nodes.push(vec![s * phi.cos(), s * phi.sin(), t]);
                    weights.push(w / nphi as f64);
                }
            }
            Ok(SphereGrid { n, nodes, weights, zonal_t: None, pole: None })
        }
        GridKind::Zonal(pole) => {
            if pole.len() != n {
                return Err(GeometryError::UnsupportedRequest("pole dimension mismatch".into()));
            }
            let pole = unit(&pole);
            let perp = orthogonal_unit(&pole);
            let rule = sphere_zonal_rule(nt, n);
            let nodes = rule
                .nodes
                .iter()
                .map(|&t| {
                    let s = (1.0 - t * t).max(0.0).sqrt();
                    pole.iter().zip(&perp).map(|(p, q)| t * p + s * q).collect()
                })
                .collect();
            Ok(SphereGrid {
                n,
                nodes,
                weights: rule.weights.clone(),
                zonal_t: Some(rule.nodes.clone()),
                pole: Some(pole),
            })
        }
    }
}

/// Dyadic ladder `r_m = 1 - 2^(-m)`, m = 1..=depth.
pub fn ray_ladder(depth: usize) -> Vec<f64> {
    (1..=depth).map(|m| 1.0 - 0.5f64.powi(m as i32)).collect()
}

/// Surface area of the unit sphere S^k in R^(k+1).
pub fn sphere_area(k: usize) -> f64 {
    // |S^0| = 2, |S^1| = 2 pi, |S^k| = 2 pi / (k-1) |S^(k-2)|
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// Node counts for cone quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    pub radial_per_panel: usize,
    pub polar: usize,
    pub azimuth: usize,
    pub depth: usize,
}

impl Default for ConeSpec {
    fn default() -> Self {
        ConeSpec { radial_per_panel: 4, polar: 6, azimuth: 6, depth: 18 }
    }
}

impl ConeSpec {
    pub fn refined(&self) -> ConeSpec {
        ConeSpec {
            radial_per_panel: self.radial_per_panel * 2,
            polar: self.polar * 2,
            azimuth: self.azimuth * 2,
            depth: self.depth,
        }
    }
}

/// A cone node in coordinates relative to the cone axis: radius, angle from
/// the axis, and the cosine of the azimuth about the axis measured from a
/// reference direction. `weight` integrates Lebesgue measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeNode {
    pub rho: f64,
    pub cos_phi: f64,
    pub sin_phi: f64,
    pub cos_chi: f64,
    pub sin_chi: f64,
    pub weight: f64,
}

/// Radial breakpoints: 0, alpha and the dyadic shells up to `1 - 2^(-depth)`.
pub fn radial_panels(alpha: f64, depth: usize) -> Vec<f64> {
    let mut b = vec![0.0];
    b.extend(ray_ladder(depth));
    let r_max = *b.last().unwrap();
    if alpha > 0.0 && alpha < r_max {
        b.push(alpha);
    }
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    b
}

/// Cone quadrature for `A_alpha(xi)` truncated at `1 - 2^(-depth)`.
/// With `full_azimuth` the azimuth runs over [0, 2 pi) (n = 3 only) for
/// integrands without symmetry; otherwise only `cos chi` in [-1, 1] is
/// sampled, which is exact for integrands symmetric under reflection across
/// the reference plane, such as zonal integrands.
pub fn cone_nodes(n: usize, alpha: f64, spec: &ConeSpec, full_azimuth: bool) -> Result<Vec<ConeNode>> {
    if full_azimuth && n != 3 {
        return Err(GeometryError::UnsupportedRequest("full azimuth cone rule only for n = 3".into()));
    }
    let panels = radial_panels(alpha, spec.depth);
    let rad = gauss_legendre(spec.radial_per_panel);
    let pol = gauss_legendre(spec.polar);
    let chi: Vec<(f64, f64, f64)> = if full_azimuth {
        let k = 2 * spec.azimuth;
        (0..k)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + 0.5) / k as f64;
                (a.cos(), a.sin(), 2.0 * PI / k as f64)
            })
            .collect()
    } else {
        let e = (n as f64 - 4.0) / 2.0;
        let rule = gauss_jacobi(spec.azimuth, e, e);
        let area = sphere_area(n - 2);
        rule.nodes.iter().zip(&rule.weights).map(|(&c, &w)| (c, (1.0 - c * c).max(0.0).sqrt(), w * area)).collect()
    };
    let mut out = Vec::new();
    for pair in panels.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        // The cap angle has a square-root singularity at rho = alpha; the
        // substitution rho = a + (b - a) s^2 removes it.
        let graded = (a - alpha).abs() < 1e-15;
        let radial: Vec<(f64, f64)> = if graded {
            rad.mapped(0.0, 1.0, 1.0).into_iter().map(|(s, w)| (a + (b - a) * s * s, 2.0 * (b - a) * s * w)).collect()
        } else {
            rad.mapped(a, b, b - a)
        };
        for (rho, wr) in radial {
            let psi = ConeRegion::cap_half_angle(alpha, rho).unwrap_or(PI);
            for (phi, wp) in pol.mapped(0.0, psi, psi) {
                let (sp, cp) = phi.sin_cos();
                if !cone_contains_polar(alpha, rho, rho * cp) {
                    continue;
                }
                let base = wr * rho.powi(n as i32 - 1) * wp * sp.powi(n as i32 - 2);
                for &(cc, sc, wc) in &chi {
                    out.push(ConeNode { rho, cos_phi: cp, sin_phi: sp, cos_chi: cc, sin_chi: sc, weight: base * wc });
                }
            }
        }
    }
    Ok(out)
}
