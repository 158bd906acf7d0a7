//! Maximal, area and Littlewood-Paley functionals on boundary grids, the
//! fractional ray integral and L^p quasi-norms.

use crate::geometry::{
    cone_contains_polar, cone_nodes, dot, orthogonal_unit, radial_panels, ray_ladder, unit, ConeNode, ConeRegion, ConeSpec,
    GeometryError, SphereGrid,
};
use crate::harmonic::{fd_gradient, HarmonicError, HarmonicFunction, ModeOp};
use crate::quad::{adaptive_gk, gauss_legendre, pairwise_sum, QuadError};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, FunctionalError>;

/// A function on the ball evaluated shell by shell: all points share one radius,
/// which lets mode-form functions reuse their radial factors.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    /// Whether values depend only on `<x/|x|, pole>`.
    fn pole(&self) -> Option<Vec<f64>> {
        None
    }
    fn shell_values(&self, rho: f64, dirs: &[Vec<f64>]) -> Result<Vec<f64>>;
    /// `(|grad f|^2, (N f)^2)` at `rho * dir`.
    fn shell_grads(&self, rho: f64, dirs: &[Vec<f64>]) -> Result<Vec<(f64, f64)>>;
}

/// `op u` for a mode-form function.
#[derive(Debug, Clone, Copy)]
pub struct OpField<'a> {
    pub u: &'a HarmonicFunction,
    pub op: ModeOp,
}

impl<'a> OpField<'a> {
    pub fn new(u: &'a HarmonicFunction, op: ModeOp) -> Self {
        OpField { u, op }
    }
}

impl Field for OpField<'_> {
    fn dim(&self) -> usize {
        self.u.n
    }

    fn pole(&self) -> Option<Vec<f64>> {
        self.u.pole().map(|p| p.to_vec())
    }

    fn shell_values(&self, rho: f64, dirs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let rd = self.u.radial_data(rho, self.op.n_pow)?;
        Ok(dirs.iter().map(|d| self.u.value_with(&rd, d, self.op)).collect())
    }

    fn shell_grads(&self, rho: f64, dirs: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        let rd = self.u.radial_data(rho, self.op.n_pow + 1)?;
        Ok(dirs.iter().map(|d| self.u.grad_with(&rd, d, self.op)).collect())
    }
}

/// Black-box field from a value closure and an optional gradient closure
/// (central differences otherwise).
pub struct FnField<F, G> {
    pub n: usize,
    pub value: F,
    pub gradient: Option<G>,
    pub pole: Option<Vec<f64>>,
}

pub type NoGradient = fn(&[f64]) -> Vec<f64>;

impl<F: Fn(&[f64]) -> f64 + Sync> FnField<F, NoGradient> {
    pub fn values_only(n: usize, value: F) -> Self {
        FnField { n, value, gradient: None, pole: None }
    }
}

impl<F, G> Field for FnField<F, G>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn pole(&self) -> Option<Vec<f64>> {
        self.pole.clone()
    }

    fn shell_values(&self, rho: f64, dirs: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(dirs.iter().map(|d| (self.value)(&d.iter().map(|v| v * rho).collect::<Vec<_>>())).collect())
    }

    fn shell_grads(&self, rho: f64, dirs: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        Ok(dirs
            .iter()
            .map(|d| {
                let x: Vec<f64> = d.iter().map(|v| v * rho).collect();
                let g = match &self.gradient {
                    Some(g) => g(&x),
                    None => fd_gradient(&self.value, &x, 1e-6 * (1.0 - rho).max(1e-3)),
                };
                (dot(&g, &g), dot(&x, &g).powi(2))
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    M,
    MAlpha(f64),
    S(f64),
    SN(f64),
    G,
    GN,
}

impl FunctionalKind {
    pub fn name(&self) -> &'static str {
        match self {
            FunctionalKind::M => "M",
            FunctionalKind::MAlpha(_) => "Malpha",
            FunctionalKind::S(_) => "S",
            FunctionalKind::SN(_) => "SN",
            FunctionalKind::G => "g",
            FunctionalKind::GN => "gN",
        }
    }

    /// Parse a kind name with the aperture used by the cone functionals.
    pub fn parse(name: &str, alpha: f64) -> Result<Self> {
        match name {
            "M" => Ok(FunctionalKind::M),
            "Malpha" => Ok(FunctionalKind::MAlpha(alpha)),
            "S" => Ok(FunctionalKind::S(alpha)),
            "SN" => Ok(FunctionalKind::SN(alpha)),
            "g" => Ok(FunctionalKind::G),
            "gN" => Ok(FunctionalKind::GN),
            other => Err(FunctionalError::Invalid(format!("unknown functional kind {other:?}"))),
        }
    }
}

/// Form of the Littlewood-Paley integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GForm {
    /// `|grad u|^2 (1 - t^2)`.
    Squared,
    /// `|grad u| (1 - t^2)`, as the definition is literally written.
    Literal,
}

impl FromStr for GForm {
    type Err = FunctionalError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(GForm::Squared),
            "paper-literal" | "literal" => Ok(GForm::Literal),
            other => Err(FunctionalError::Invalid(format!("unknown g-function form {other:?}"))),
        }
    }
}

/// Radial ladder and cone resolution shared by all functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalGrid {
    pub depth: usize,
    pub cone: ConeSpec,
    /// Gauss-Legendre points per dyadic panel for ray integrals.
    pub ray_points: usize,
    pub g_form: GForm,
}

impl Default for FunctionalGrid {
    fn default() -> Self {
        FunctionalGrid { depth: 18, cone: ConeSpec::default(), ray_points: 8, g_form: GForm::Squared }
    }
}

impl FunctionalGrid {
    pub fn refined(&self) -> Self {
        FunctionalGrid { cone: self.cone.refined(), ray_points: self.ray_points * 2, ..*self }
    }

    pub fn r_max(&self) -> f64 {
        1.0 - 0.5f64.powi(self.depth as i32)
    }
}

/// Per-node values of one functional.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalResult {
    pub kind: FunctionalKind,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl FunctionalResult {
    pub fn lp_quasinorm(&self, p: f64) -> f64 {
        lp_quasinorm(self, p)
    }

    /// `node,x1..xn,value` rows, then `norm,p,value` for each requested p.
    pub fn to_csv(&self, ps: &[f64]) -> String {
        let n = self.nodes.first().map_or(0, |x| x.len());
        let mut s = String::from("node");
        for i in 1..=n {
            let _ = write!(s, ",x{i}");
        }
        s.push_str(",value\n");
        for (i, (x, v)) in self.nodes.iter().zip(&self.values).enumerate() {
            let _ = write!(s, "{i}");
            for c in x {
                let _ = write!(s, ",{c:.17e}");
            }
            let _ = writeln!(s, ",{v:.17e}");
        }
        for &p in ps {
            let _ = writeln!(s, "norm,{p},{:.17e}", self.lp_quasinorm(p));
        }
        s
    }
}

/// `(sum_i w_i |v_i|^p)^(1/p)` with a fixed pairwise reduction order.
pub fn lp_quasinorm(result: &FunctionalResult, p: f64) -> f64 {
    assert!(p > 0.0, "p must be positive");
    let terms: Vec<f64> = result.weights.iter().zip(&result.values).map(|(w, v)| w * v.abs().powf(p)).collect();
    pairwise_sum(&terms).powf(1.0 / p)
}

fn result(kind: FunctionalKind, grid: &SphereGrid, values: Vec<f64>) -> FunctionalResult {
    FunctionalResult { kind, nodes: grid.nodes.clone(), weights: grid.weights.clone(), values }
}

fn check_dim(u: &dyn Field, grid: &SphereGrid) -> Result<()> {
    if u.dim() != grid.n {
        return Err(FunctionalError::Invalid(format!("field dimension {} vs grid dimension {}", u.dim(), grid.n)));
    }
    Ok(())
}

/// `max_m |u(r_m xi)|` over the dyadic ladder.
pub fn radial_max(u: &dyn Field, grid: &SphereGrid, fg: &FunctionalGrid) -> Result<FunctionalResult> {
    check_dim(u, grid)?;
    let shells: Vec<Vec<f64>> =
        ray_ladder(fg.depth).par_iter().map(|&r| u.shell_values(r, &grid.nodes)).collect::<Result<_>>()?;
    let values = (0..grid.len()).map(|i| shells.iter().map(|s| s[i].abs()).fold(0.0, f64::max)).collect();
    Ok(result(FunctionalKind::M, grid, values))
}

/// Orthonormal frame `(e1, e2)` perpendicular to xi; e1 lies in the plane of
/// xi and the field's pole when there is one.
fn frame(xi: &[f64], pole: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    let e1 = match pole {
        Some(p) => {
            let c = dot(xi, p);
            let v: Vec<f64> = p.iter().zip(xi).map(|(a, b)| a - c * b).collect();
            if dot(&v, &v) > 1e-20 {
                unit(&v)
            } else {
                orthogonal_unit(xi)
            }
        }
        None => orthogonal_unit(xi),
    };
    let n = xi.len();
    let mut e2 = vec![0.0; n];
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        let (a, b) = (dot(&v, xi), dot(&v, &e1));
        let w: Vec<f64> = (0..n).map(|k| v[k] - a * xi[k] - b * e1[k]).collect();
        if dot(&w, &w) > 0.1 {
            e2 = unit(&w);
            break;
        }
    }
    (e1, e2)
}

struct ConeLayout {
    /// Distinct radii with, for each, the node indices in the cone rule.
    shells: Vec<(f64, Vec<usize>)>,
    nodes: Vec<crate::geometry::ConeNode>,
}

fn cone_layout(n: usize, alpha: f64, fg: &FunctionalGrid, full_azimuth: bool) -> Result<ConeLayout> {
    let nodes = cone_nodes(n, alpha, &fg.cone, full_azimuth)?;
    let mut shells: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, c) in nodes.iter().enumerate() {
        match shells.last_mut() {
            Some((r, idx)) if *r == c.rho => idx.push(i),
            _ => shells.push((c.rho, vec![i])),
        }
    }
    Ok(ConeLayout { shells, nodes })
}

/// Sample points for a supremum over the cone: equally spaced in radius and
/// polar angle, including the panel ends and the cone edge. For zonal fields
/// the in-plane arc `cos chi = +-1` already meets every value of `<x, pole>`.
fn max_layout(n: usize, alpha: f64, fg: &FunctionalGrid, zonal: bool) -> ConeLayout {
    use std::f64::consts::PI;
    let spec = &fg.cone;
    let chi: Vec<(f64, f64)> = if zonal {
        vec![(1.0, 0.0), (-1.0, 0.0)]
    } else if n == 3 {
        let k = 4 * spec.azimuth;
        (0..k).map(|i| (2.0 * PI * i as f64 / k as f64).sin_cos()).map(|(s, c)| (c, s)).collect()
    } else {
        let k = 2 * spec.azimuth;
        (0..=k).map(|i| -1.0 + 2.0 * i as f64 / k as f64).map(|c| (c, (1.0 - c * c).max(0.0).sqrt())).collect()
    };
    let panels = radial_panels(alpha, spec.depth);
    let per = 2 * spec.radial_per_panel;
    let mut radii: Vec<f64> = Vec::new();
    for pair in panels.windows(2) {
        for i in 0..per {
            radii.push(pair[0] + (pair[1] - pair[0]) * i as f64 / per as f64);
        }
    }
    radii.push(*panels.last().unwrap());
    let mut nodes = Vec::new();
    let mut shells = Vec::new();
    for rho in radii {
        let psi = ConeRegion::cap_half_angle(alpha, rho).map_or(PI, |p| p * (1.0 - 1e-12));
        let m = 2 * spec.polar;
        let start = nodes.len();
        for j in 0..=m {
            let phi = psi * j as f64 / m as f64;
            let (sp, cp) = phi.sin_cos();
            if rho > alpha && !cone_contains_polar(alpha, rho, rho * cp) {
                continue;
            }
            for &(cc, sc) in &chi {
                nodes.push(ConeNode { rho, cos_phi: cp, sin_phi: sp, cos_chi: cc, sin_chi: sc, weight: 0.0 });
                if j == 0 {
                    break;
                }
            }
        }
        shells.push((rho, (start..nodes.len()).collect()));
    }
    ConeLayout { shells, nodes }
}

fn cone_dirs(layout: &ConeLayout, idx: &[usize], frames: &[(Vec<f64>, Vec<f64>, Vec<f64>)]) -> Vec<Vec<f64>> {
    let mut dirs = Vec::with_capacity(idx.len() * frames.len());
    for (xi, e1, e2) in frames {
        for &i in idx {
            let c = &layout.nodes[i];
            dirs.push(
                (0..xi.len())
                    .map(|k| c.cos_phi * xi[k] + c.sin_phi * (c.cos_chi * e1[k] + c.sin_chi * e2[k]))
                    .collect(),
            );
        }
    }
    dirs
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(FunctionalError::Invalid(format!("aperture {alpha} outside (0, 1)")))
    }
}

/// `max |u|` over the cone nodes of `A_alpha(xi)` and the radial ladder.
pub fn cone_max(u: &dyn Field, alpha: f64, grid: &SphereGrid, fg: &FunctionalGrid) -> Result<FunctionalResult> {
    check_dim(u, grid)?;
    check_alpha(alpha)?;
    let pole = u.pole();
    let layout = max_layout(grid.n, alpha, fg, pole.is_some());
    let frames: Vec<_> = grid
        .nodes
        .iter()
        .map(|xi| {
            let (e1, e2) = frame(xi, pole.as_deref());
            (xi.clone(), e1, e2)
        })
        .collect();
    let per_shell: Vec<Vec<f64>> = layout
        .shells
        .par_iter()
        .map(|(rho, idx)| {
            let vals = u.shell_values(*rho, &cone_dirs(&layout, idx, &frames))?;
            Ok(vals.chunks(idx.len()).map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect())
        })
        .collect::<Result<_>>()?;
    let ray = radial_max(u, grid, fg)?;
    let values = (0..grid.len())
        .map(|i| per_shell.iter().map(|s| s[i]).fold(ray.values[i], f64::max))
        .collect();
    Ok(result(FunctionalKind::MAlpha(alpha), grid, values))
}

/// `( int_{A_alpha(xi)} |grad u|^2 (1 - |x|^2)^(2-n) dx )^(1/2)`, or with `(N u)^2`.
pub fn area_integral(
    u: &dyn Field,
    alpha: f64,
    grid: &SphereGrid,
    fg: &FunctionalGrid,
    radial_only: bool,
) -> Result<FunctionalResult> {
    check_dim(u, grid)?;
    check_alpha(alpha)?;
    let n = grid.n;
    let pole = u.pole();
    let layout = cone_layout(n, alpha, fg, pole.is_none() && n == 3)?;
    let frames: Vec<_> = grid
        .nodes
        .iter()
        .map(|xi| {
            let (e1, e2) = frame(xi, pole.as_deref());
            (xi.clone(), e1, e2)
        })
        .collect();
    let per_shell: Vec<Vec<f64>> = layout
        .shells
        .par_iter()
        .map(|(rho, idx)| {
            let g = u.shell_grads(*rho, &cone_dirs(&layout, idx, &frames))?;
            let damp = (1.0 - rho * rho).powi(2 - n as i32);
            Ok(g.chunks(idx.len())
                .map(|c| {
                    c.iter()
                        .zip(idx)
                        .map(|(&(full, radial), &i)| layout.nodes[i].weight * damp * if radial_only { radial } else { full })
                        .sum::<f64>()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let values = (0..grid.len()).map(|i| per_shell.iter().map(|s| s[i]).sum::<f64>().sqrt()).collect();
    let kind = if radial_only { FunctionalKind::SN(alpha) } else { FunctionalKind::S(alpha) };
    Ok(result(kind, grid, values))
}

/// Gauss-Legendre nodes on the dyadic panels of `[0, r_max]`.
pub fn ray_rule(fg: &FunctionalGrid) -> Vec<(f64, f64)> {
    let mut b = vec![0.0];
    b.extend(ray_ladder(fg.depth));
    let rule = gauss_legendre(fg.ray_points);
    b.windows(2).flat_map(|w| rule.mapped(w[0], w[1], w[1] - w[0])).collect()
}

/// `( int_0^{r_max} |grad u(t xi)|^2 (1 - t^2) dt )^(1/2)`, or with `(N u)^2`.
pub fn littlewood_paley_g(u: &dyn Field, grid: &SphereGrid, fg: &FunctionalGrid, radial_only: bool) -> Result<FunctionalResult> {
    check_dim(u, grid)?;
    let rule = ray_rule(fg);
    let per_t: Vec<Vec<f64>> = rule
        .par_iter()
        .map(|&(t, w)| {
            let g = u.shell_grads(t, &grid.nodes)?;
            Ok(g.into_iter()
                .map(|(full, radial)| {
                    let s = if radial_only { radial } else { full };
                    let s = match fg.g_form {
                        GForm::Squared => s,
                        GForm::Literal => s.sqrt(),
                    };
                    w * s * (1.0 - t * t)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let values = (0..grid.len()).map(|i| per_t.iter().map(|s| s[i]).sum::<f64>().sqrt()).collect();
    let kind = if radial_only { FunctionalKind::GN } else { FunctionalKind::G };
    Ok(result(kind, grid, values))
}

/// Any functional by kind.
pub fn compute(u: &dyn Field, kind: FunctionalKind, grid: &SphereGrid, fg: &FunctionalGrid) -> Result<FunctionalResult> {
    match kind {
        FunctionalKind::M => radial_max(u, grid, fg),
        FunctionalKind::MAlpha(a) => cone_max(u, a, grid, fg),
        FunctionalKind::S(a) => area_integral(u, a, grid, fg, false),
        FunctionalKind::SN(a) => area_integral(u, a, grid, fg, true),
        FunctionalKind::G => littlewood_paley_g(u, grid, fg, false),
        FunctionalKind::GN => littlewood_paley_g(u, grid, fg, true),
    }
}

/// `I_l f(r zeta) = int_0^r f(t zeta) (1 - t)^(l - 1) dt`.
pub fn ray_integral_il<F: Fn(&[f64]) -> f64>(f: F, l: f64, x: &[f64]) -> Result<f64> {
    let r = dot(x, x).sqrt();
    if r >= 1.0 {
        return Err(FunctionalError::Invalid("point outside the open ball".into()));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let zeta: Vec<f64> = x.iter().map(|v| v / r).collect();
    let g = |t: f64| f(&zeta.iter().map(|v| v * t).collect::<Vec<_>>()) * (1.0 - t).powf(l - 1.0);
    Ok(adaptive_gk(g, 0.0, r, 1e-12, 200)?)
}
