//! Verification suites: each turns one family of identities or estimates
//! into residuals, bands or fitted exponents and reports pass/fail.

use crate::config::RunConfig;
use crate::functionals::{self, Field, FunctionalGrid, FunctionalKind, OpField};
use crate::geometry::{
    cone_contains_polar, dot, invariant_measure_weight, norm, ray_ladder, sphere_area, sphere_quadrature, unit,
    BallPoint, GridKind,
};
use crate::harmonic::{fd_d_residual, HarmonicFunction, ModeOp, RadialData, ZonalExpansion};
use crate::kernels::{
    lemma3_build, poisson_euclid_rt, poisson_hyp_gradient, poisson_hyp_rt, EtaKernel, PoissonSeries, SeriesOptions,
};
use crate::quad::{adaptive_gk, gauss_jacobi, gauss_legendre, sphere_zonal_rule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("suite {suite} aborted: {msg}")]
    Aborted { suite: String, msg: String },
}

pub type Result<T> = std::result::Result<T, VerifyError>;

pub const SUITES: [&str; 8] = [
    "kernel-consistency",
    "green",
    "mean-value",
    "operator-identities",
    "prop18",
    "theorem-a",
    "hardy-sobolev",
    "lipschitz",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
        }
    }
}

/// One measured quantity; checks carry a tolerance and a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measure {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub status: Status,
    pub seed: u64,
    pub measures: Vec<Measure>,
    pub residuals: ResidualStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

impl SuiteReport {
    pub fn measure(&self, name: &str) -> Option<&Measure> {
        self.measures.iter().find(|m| m.name == name)
    }

    pub fn failures(&self) -> Vec<&Measure> {
        self.measures.iter().filter(|m| m.pass == Some(false)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Aggregate CSV `suite,status,constant,value,tolerance,runtime_s`.
pub fn summary_csv(reports: &[SuiteReport]) -> String {
    let mut s = String::from("suite,status,constant,value,tolerance,runtime_s\n");
    for r in reports {
        let rt = r.runtime_s.map(|v| format!("{v:.3}")).unwrap_or_default();
        for m in &r.measures {
            let tol = m.tolerance.map(|t| format!("{t:e}")).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{:e},{},{}", r.suite, r.status.as_str(), csv_field(&m.name), m.value, tol, rt);
        }
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Default)]
struct Recorder {
    measures: Vec<Measure>,
    residuals: Vec<f64>,
}

impl Recorder {
    fn info(&mut self, name: impl Into<String>, value: f64) {
        self.measures.push(Measure { name: name.into(), value, target: None, tolerance: None, pass: None });
    }

    /// Passes when `value <= tol`.
    fn le(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        let pass = value <= tol;
        self.measures.push(Measure { name: name.into(), value, target: None, tolerance: Some(tol), pass: Some(pass) });
    }

    /// Passes when `value >= bound`.
    fn ge(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        let pass = value >= bound;
        self.measures.push(Measure { name: name.into(), value, target: None, tolerance: Some(bound), pass: Some(pass) });
    }

    /// Passes when `|value - target| <= band`.
    fn within(&mut self, name: impl Into<String>, value: f64, target: f64, band: f64) {
        let pass = (value - target).abs() <= band;
        self.measures.push(Measure {
            name: name.into(),
            value,
            target: Some(target),
            tolerance: Some(band),
            pass: Some(pass),
        });
    }

    fn residual(&mut self, r: f64) {
        self.residuals.push(r);
    }

    fn finish(self, suite: &str, seed: u64) -> SuiteReport {
        let any_check = self.measures.iter().any(|m| m.pass.is_some());
        let failed = self.measures.iter().any(|m| m.pass == Some(false));
        let status = if failed {
            Status::Fail
        } else if any_check {
            Status::Pass
        } else {
            Status::Info
        };
        let count = self.residuals.len();
        let max = self.residuals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mean = if count == 0 { 0.0 } else { self.residuals.iter().map(|v| v.abs()).sum::<f64>() / count as f64 };
        SuiteReport {
            suite: suite.into(),
            status,
            seed,
            measures: self.measures,
            residuals: ResidualStats { max, mean, count },
            runtime_s: None,
        }
    }
}

fn abort<E: std::fmt::Display>(suite: &str) -> impl Fn(E) -> VerifyError + '_ {
    move |e| VerifyError::Aborted { suite: suite.into(), msg: e.to_string() }
}

fn suite_rng(cfg: &RunConfig, suite: &str) -> ChaCha8Rng {
    let idx = SUITES.iter().position(|s| *s == suite).unwrap_or(0) as u64;
    ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(idx + 1))
}

fn pole(n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    p[n - 1] = 1.0;
    p
}

/// Direction at `<dir, pole> = t` in the plane of `pole` and the first axis.
fn dir_at(n: usize, t: f64) -> Vec<f64> {
    let mut d = vec![0.0; n];
    d[n - 1] = t;
    d[0] = (1.0 - t * t).max(0.0).sqrt();
    d
}

fn random_unit<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = norm(&v);
        if s > 0.1 && s <= 1.0 {
            return unit(&v);
        }
    }
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut report = match name {
        "kernel-consistency" => suite_kernel_consistency(cfg),
        "green" => suite_green(cfg),
        "mean-value" => suite_mean_value(cfg),
        "operator-identities" => suite_operator_identities(cfg),
        "prop18" => suite_prop18(cfg),
        "theorem-a" => suite_theorem_a(cfg),
        "hardy-sobolev" => suite_hardy_sobolev(cfg),
        "lipschitz" => suite_lipschitz(cfg),
        other => return Err(VerifyError::UnknownSuite(other.into())),
    }?;
    report.runtime_s = Some(start.elapsed().as_secs_f64());
    Ok(report)
}

/// Runs the named suites (or all of them for `["all"]`) in order.
pub fn run_suites(names: &[String], cfg: &RunConfig) -> Result<Vec<SuiteReport>> {
    let list: Vec<String> = if names.iter().any(|s| s == "all") {
        SUITES.iter().map(|s| s.to_string()).collect()
    } else {
        names.to_vec()
    };
    for n in &list {
        if !SUITES.contains(&n.as_str()) {
            return Err(VerifyError::UnknownSuite(n.clone()));
        }
    }
    list.iter().map(|n| run_suite(n, cfg)).collect()
}

fn series_opts(cfg: &RunConfig) -> SeriesOptions {
    SeriesOptions { tail_tol: cfg.tolerances.series_tail, cap: cfg.series_cap, ..SeriesOptions::default() }
}

// ---------------------------------------------------------------------------
// kernels

/// Series against closed forms, unit mass, the even-dimension decomposition
/// and the transfer kernel.
pub fn suite_kernel_consistency(cfg: &RunConfig) -> Result<SuiteReport> {
    const S: &str = "kernel-consistency";
    let tol = &cfg.tolerances;
    let mut rng = suite_rng(cfg, S);
    let mut rec = Recorder::default();
    let opts = series_opts(cfg);

    let mut worst: f64 = 0.0;
    let mut truncated = 0usize;
    for n in 3..=6 {
        let mut ts: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        ts.extend([-1.0, 1.0]);
        let rows: Vec<(f64, usize)> = [0.3, 0.6, 0.9]
            .par_iter()
            .map(|&r| {
                let e = PoissonSeries::new(n, r, 0.0, opts)?;
                let h = PoissonSeries::new(n, r, 1.0, opts)?;
                let mut w: f64 = 0.0;
                let mut tr = 0;
                for &t in &ts {
                    for (s, exact) in [(&e, poisson_euclid_rt(n, r, t)), (&h, poisson_hyp_rt(n, r, t))] {
                        let v = match s.eval(t) {
                            Ok(v) => v.value,
                            Err(crate::kernels::KernelError::TruncationWarning { value, .. }) => {
                                tr += 1;
                                value
                            }
                            Err(e) => return Err(e),
                        };
                        w = w.max(((v - exact) / exact).abs());
                    }
                }
                Ok((w, tr))
            })
            .collect::<std::result::Result<_, _>>()
            .map_err(abort(S))?;
        for (w, tr) in rows {
            worst = worst.max(w);
            truncated += tr;
        }
    }
    rec.le("series_vs_closed_form_max_rel", worst, tol.kernel_rel);
    rec.residual(worst);
    rec.info("series_truncation_warnings", truncated as f64);

    let mut origin: f64 = 0.0;
    for n in 3..=6 {
        for d in [0.0, 0.5, 1.0] {
            let s = PoissonSeries::new(n, 0.0, d, opts).map_err(abort(S))?;
            origin = origin.max((s.partial_sum(0.37, 64) - 1.0).abs());
        }
        origin = origin.max((poisson_euclid_rt(n, 0.0, 0.2) - 1.0).abs());
        origin = origin.max((poisson_hyp_rt(n, 0.0, 0.2) - 1.0).abs());
    }
    rec.le("origin_value_abs", origin, 1e-14);

    let mut mass_err: f64 = 0.0;
    let cases: Vec<(usize, f64, f64)> = (3..=6)
        .flat_map(|n| [0.0, 0.5, 1.0].into_iter().flat_map(move |d| [0.3, 0.6, 0.9].into_iter().map(move |r| (n, d, r))))
        .collect();
    let masses: Vec<f64> = cases
        .par_iter()
        .map(|&(n, d, r)| {
            let s = PoissonSeries::new(n, r, d, opts)?;
            let len = s.table_len();
            let rule = sphere_zonal_rule(len / 2 + 8, n);
            Ok(rule.nodes.iter().zip(&rule.weights).map(|(&t, &w)| w * s.partial_sum(t, len)).sum::<f64>())
        })
        .collect::<std::result::Result<_, crate::kernels::KernelError>>()
        .map_err(abort(S))?;
    for m in masses {
        mass_err = mass_err.max((m - 1.0).abs());
    }
    rec.le("unit_mass_max_abs", mass_err, tol.unit_mass);
    rec.residual(mass_err);

    let mut l3: f64 = 0.0;
    for n in [4, 6] {
        let dec = lemma3_build(n).map_err(abort(S))?;
        for i in 0..10 {
            let r = 0.05 + 0.75 * i as f64 / 9.0;
            for j in 0..100 {
                let t = -1.0 + 2.0 * j as f64 / 99.0;
                l3 = l3.max((poisson_hyp_rt(n, r, t) - dec.reconstruct_kernel(r, t)).abs());
            }
        }
    }
    rec.le("lemma3_reconstruction_max_abs", l3, tol.lemma3_abs);
    rec.residual(l3);

    let mut tr_err: f64 = 0.0;
    let mut cal: f64 = 0.0;
    for n in 3..=5 {
        let eta = EtaKernel::new(n).map_err(abort(S))?;
        let errs: Vec<f64> = [0.1, 0.3, 0.5, 0.7, 0.9]
            .par_iter()
            .map(|&r| {
                let mut e: f64 = 0.0;
                for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                    let v = eta.transfer_radial(r, |rho| poisson_hyp_rt(n, rho, t))?;
                    e = e.max((v - poisson_euclid_rt(n, r, t)).abs());
                }
                Ok(e)
            })
            .collect::<std::result::Result<_, crate::kernels::KernelError>>()
            .map_err(abort(S))?;
        tr_err = errs.into_iter().fold(tr_err, f64::max);
        for r in [0.1, 0.5, 0.9] {
            let c = eta.calibrate_at(r).map_err(abort(S))?;
            cal = cal.max((c / eta.c - 1.0).abs());
        }
        rec.info(format!("eta_c_n{n}"), eta.c);
        rec.info(format!("eta_k1_constant_n{n}_r0.9"), eta.derivative_constant(0.9).map_err(abort(S))?);
    }
    rec.le("transfer_max_abs", tr_err, tol.transfer_abs);
    rec.le("eta_calibration_rel_spread", cal, tol.calibration);
    rec.residual(tr_err);
    Ok(rec.finish(S, cfg.seed))
}

// ---------------------------------------------------------------------------
// Green's formula

enum GreenFn<'a> {
    Harmonic(&'a HarmonicFunction),
    /// `|x|^(2j) |x|^l Z_l(<x/|x|, pole>)`.
    Poly { j: i32, l: usize },
}

impl GreenFn<'_> {
    /// `(value, d/dr, D value)` at radius r and `t = <zeta, pole>`.
    fn eval(&self, n: usize, r: f64, t: f64) -> (f64, f64, f64) {
        match self {
            GreenFn::Harmonic(u) => {
                let d = dir_at(n, t);
                let rd = u.radial_data(r, 2).expect("radial data");
                let v = u.value_with(&rd, &d, ModeOp::IDENTITY);
                let dr = u.value_with(&RadialData { r, nk: vec![rd.over_r[1].clone()], over_r: vec![] }, &d, ModeOp::IDENTITY);
                let x: Vec<f64> = d.iter().map(|c| c * r).collect();
                let dv = if r == 0.0 { 0.0 } else { u.apply_d(&x, ModeOp::IDENTITY).expect("D") };
                (v, dr, dv)
            }
            GreenFn::Poly { j, l } => {
                let (j, l) = (*j, *l);
                let z = crate::specfun::zonal(l, n, t);
                let deg = 2 * j + l as i32;
                let h = r.powi(l as i32) * z;
                let v = r.powi(2 * j) * h;
                let dr = if deg == 0 { 0.0 } else { deg as f64 * r.powi(deg - 1) * z };
                let w = 1.0 - r * r;
                let lap = if j == 0 {
                    0.0
                } else {
                    2.0 * j as f64 * (2 * j + 2 * l as i32 + n as i32 - 2) as f64 * r.powi(2 * j - 2) * h
                };
                let dv = w * w * lap + 2.0 * (n as f64 - 2.0) * w * deg as f64 * v;
                (v, dr, dv)
            }
        }
    }
}

/// Volume and boundary sides of Green's formula on B(0, big_r).
fn green_sides(n: usize, u: &GreenFn, v: &GreenFn, big_r: f64) -> (f64, f64) {
    let tr = sphere_zonal_rule(24, n);
    let rr = gauss_legendre(40);
    let area = sphere_area(n - 1);
    let mut vol = 0.0;
    for (rho, wr) in rr.mapped(0.0, big_r, big_r) {
        let mut s = 0.0;
        for (&t, &w) in tr.nodes.iter().zip(&tr.weights) {
            let (a, _, da) = u.eval(n, rho, t);
            let (b, _, db) = v.eval(n, rho, t);
            s += w * (a * db - b * da);
        }
        vol += wr * rho.powi(n as i32 - 1) * (1.0 - rho * rho).powi(-(n as i32)) * s;
    }
    let mut bnd = 0.0;
    for (&t, &w) in tr.nodes.iter().zip(&tr.weights) {
        let (a, ar, _) = u.eval(n, big_r, t);
        let (b, br, _) = v.eval(n, big_r, t);
        bnd += w * (a * br - b * ar);
    }
    bnd *= big_r.powi(n as i32 - 1) * (1.0 - big_r * big_r).powi(2 - n as i32);
    (vol * area, bnd * area)
}

pub fn suite_green(cfg: &RunConfig) -> Result<SuiteReport> {
    const S: &str = "green";
    let tol = &cfg.tolerances;
    let mut rng = suite_rng(cfg, S);
    let mut rec = Recorder::default();
    for n in [3, 4] {
        let p = pole(n);
        let u1 = HarmonicFunction::extend_zonal(&ZonalExpansion::random(n, &p, 6, 2.0, &mut rng).map_err(abort(S))?)
            .map_err(abort(S))?;
        let u2 = HarmonicFunction::extend_zonal(&ZonalExpansion::random(n, &p, 6, 2.0, &mut rng).map_err(abort(S))?)
            .map_err(abort(S))?;
        let (h1, h2) = (GreenFn::Harmonic(&u1), GreenFn::Harmonic(&u2));
        for big_r in [0.5, 0.7] {
            let (vol, bnd) = green_sides(n, &h1, &h2, big_r);
            rec.le(format!("n{n}_R{big_r}_harmonic_pair_boundary_abs"), bnd.abs(), tol.green_harmonic_abs);
            rec.info(format!("n{n}_R{big_r}_harmonic_pair_volume_abs"), vol.abs());
            let pairs: [(&str, &GreenFn, GreenFn); 3] = [
                ("harmonic_vs_r2", &h1, GreenFn::Poly { j: 1, l: 0 }),
                ("harmonic_vs_r2_Z2", &h1, GreenFn::Poly { j: 1, l: 2 }),
                ("poly_r2_Z1_vs_r4_Z1", &GreenFn::Poly { j: 1, l: 1 }, GreenFn::Poly { j: 2, l: 1 }),
            ];
            for (name, a, b) in pairs.iter() {
                let (vol, bnd) = green_sides(n, a, b, big_r);
                let disc = (vol - bnd).abs() / vol.abs().max(bnd.abs());
                rec.le(format!("n{n}_R{big_r}_{name}_rel_discrepancy"), disc, tol.green_rel);
                rec.residual(disc);
            }
        }
    }
    Ok(rec.finish(S, cfg.seed))
}

// ---------------------------------------------------------------------------
// mean-value inequality

struct BallRule {
    /// Offsets `s * omega` and weights on the unit ball.
    pts: Vec<(Vec<f64>, f64)>,
}

fn ball_rule_3() -> BallRule {
    let sph = sphere_quadrature(3, 10, GridKind::Full).expect("grid");
    let rad = gauss_legendre(6);
    let area = sphere_area(2);
    let mut pts = Vec::new();
    for (s, ws) in rad.mapped(0.0, 1.0, 1.0) {
        for (x, &w) in sph.nodes.iter().zip(&sph.weights) {
            pts.push((x.iter().map(|c| c * s).collect(), ws * s * s * area * w));
        }
    }
    BallRule { pts }
}

/// `(|N^k u|^p integrals for p in ps, k = 0..=2)` over `B(a, radius)`.
fn ball_integrals(u: &HarmonicFunction, a: &[f64], radius: f64, rule: &BallRule, ps: &[f64]) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0; 3]; ps.len()];
    let vol = radius.powi(3);
    for (off, w) in &rule.pts {
        let y: Vec<f64> = a.iter().zip(off).map(|(x, o)| x + radius * o).collect();
        let r = norm(&y);
        let d = if r == 0.0 { vec![1.0, 0.0, 0.0] } else { unit(&y) };
        let rd = u.radial_data(r, 2).expect("radial data");
        for k in 0..3 {
            let v = u.value_with(&rd, &d, ModeOp::n(k)).abs();
            for (o, &p) in out.iter_mut().zip(ps) {
                o[k] += w * vol * v.powf(p);
            }
        }
    }
    out
}

/// `|grad^d N^k u(a)|` with the max-over-partials convention (orders <= d).
fn nabla_nk(u: &HarmonicFunction, a: &[f64], k: usize, d: usize) -> f64 {
    let op = ModeOp::n(k);
    let v = u.eval_op(a, op).expect("eval").abs();
    if d == 0 {
        return v;
    }
    let h = 1e-4 * (1.0 - norm(a));
    let mut m = v;
    let mut p = a.to_vec();
    for i in 0..a.len() {
        p[i] = a[i] + h;
        let f1 = u.eval_op(&p, op).expect("eval");
        p[i] = a[i] - h;
        let f0 = u.eval_op(&p, op).expect("eval");
        p[i] = a[i];
        m = m.max(((f1 - f0) / (2.0 * h)).abs());
    }
    m
}

/// Ratios for k = 0..=2, d = 0..=1 and each p, indexed `[k][d][p]`.
fn mv_ratios(u: &HarmonicFunction, a: &[f64], eps: f64, rule: &BallRule, ps: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let ra = norm(a);
    let radius = 6.0 * (1.0 - ra * ra) * eps;
    let ints = ball_integrals(u, a, radius, rule, ps);
    (0..3)
        .map(|k| {
            (0..2)
                .map(|d| {
                    let top = nabla_nk(u, a, k, d);
                    ps.iter()
                        .enumerate()
                        .map(|(pi, &p)| top * (1.0 - ra).powf(d as f64 + 3.0 / p) / ints[pi][k].powf(1.0 / p))
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn suite_mean_value(cfg: &RunConfig) -> Result<SuiteReport> {
    const S: &str = "mean-value";
    let tol = &cfg.tolerances;
    let mut rng = suite_rng(cfg, S);
    let mut rec = Recorder::default();
    let n = 3;
    let eps = 0.05;
    let ps = [1.0, 2.0];
    let rule = ball_rule_3();
    let p3 = pole(n);
    let family: Vec<HarmonicFunction> = (0..cfg.family)
        .map(|_| {
            ZonalExpansion::random(n, &p3, cfg.lmax, 2.0, &mut rng).and_then(|z| HarmonicFunction::extend_zonal(&z))
        })
        .collect::<std::result::Result<_, _>>()
        .map_err(abort(S))?;
    let per_fn = 200usize.div_ceil(family.len());
    let points: Vec<(usize, Vec<f64>)> = (0..family.len())
        .flat_map(|i| (0..per_fn).map(move |_| i))
        .take(200)
        .map(|i| {
            let r = rng.gen_range(0.05..0.95);
            let d = random_unit(n, &mut rng);
            (i, d.iter().map(|c| c * r).collect())
        })
        .collect();
    let envelope = |e: f64| -> Vec<Vec<Vec<f64>>> {
        let all: Vec<_> = points.par_iter().map(|(i, a)| mv_ratios(&family[*i], a, e, &rule, &ps)).collect();
        let mut env = vec![vec![vec![0.0f64; ps.len()]; 2]; 3];
        for r in &all {
            for k in 0..3 {
                for d in 0..2 {
                    for p in 0..ps.len() {
                        env[k][d][p] = env[k][d][p].max(r[k][d][p]);
                    }
                }
            }
        }
        env
    };
    let env = envelope(eps);
    let env_half = envelope(eps / 2.0);
    let mut finite = true;
    for k in 0..3 {
        for d in 0..2 {
            for (pi, p) in ps.iter().enumerate() {
                rec.info(format!("envelope_k{k}_d{d}_p{p}"), env[k][d][pi]);
                rec.info(format!("envelope_half_eps_k{k}_d{d}_p{p}"), env_half[k][d][pi]);
                finite &= env[k][d][pi].is_finite() && env_half[k][d][pi].is_finite();
            }
        }
    }
    rec.ge("envelopes_finite", if finite { 1.0 } else { 0.0 }, 1.0);

    // Ladder: envelope over a few functions and directions at r_m = 1 - 2^-m.
    let dirs: Vec<Vec<f64>> = (0..4).map(|_| random_unit(n, &mut rng)).collect();
    let ladder: Vec<f64> = ray_ladder(10);
    let lad: Vec<Vec<Vec<Vec<f64>>>> = ladder
        .par_iter()
        .map(|&r| {
            let mut env = vec![vec![vec![0.0f64; ps.len()]; 2]; 3];
            for u in family.iter().take(5) {
                for d in &dirs {
                    let a: Vec<f64> = d.iter().map(|c| c * r).collect();
                    let q = mv_ratios(u, &a, eps, &rule, &ps);
                    for k in 0..3 {
                        for dd in 0..2 {
                            for p in 0..ps.len() {
                                env[k][dd][p] = env[k][dd][p].max(q[k][dd][p]);
                            }
                        }
                    }
                }
            }
            env
        })
        .collect();
    let ms: Vec<f64> = (4..=10).map(|m| m as f64).collect();
    for k in 0..3 {
        for d in 0..2 {
            for (pi, p) in ps.iter().enumerate() {
                let y: Vec<f64> = (4..=10).map(|m| lad[m - 1][k][d][pi].log2()).collect();
                let slope = fit_slope(&ms, &y);
                let name = format!("ladder_log2_slope_k{k}_d{d}_p{p}");
                if d == 0 {
                    rec.within(name, slope, 0.0, tol.slope_band);
                } else {
                    rec.le(name, slope, tol.slope_band);
                }
            }
        }
    }

    // Constant function: the ratio is the normalization (1-|a|)^(n/p) / |B|^(1/p).
    let one = HarmonicFunction::extend_zonal(&ZonalExpansion::new(n, &p3, vec![1.0]).map_err(abort(S))?)
        .map_err(abort(S))?;
    let a = [0.3, 0.2, 0.1];
    let q = mv_ratios(&one, &a, eps, &rule, &ps);
    let ra = norm(&a);
    let radius = 6.0 * (1.0 - ra * ra) * eps;
    let vol = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
    let want = (1.0 - ra).powf(3.0) / vol;
    rec.le("constant_ratio_rel_err", (q[0][0][0] / want - 1.0).abs(), 1e-10);

    // Invariant mean value at the origin over B(0, rho).
    let mexp = cfg.measure_exponent();
    let mut worst: f64 = 0.0;
    for u in family.iter().take(5) {
        let u0 = u.eval(&[0.0, 0.0, 0.0]).map_err(abort(S))?;
        let sph = sphere_quadrature(3, 2 * cfg.lmax + 2, GridKind::Full).map_err(abort(S))?;
        let rad = gauss_legendre(16);
        let (mut num, mut den) = (0.0, 0.0);
        for (s, ws) in rad.mapped(0.0, 0.6, 0.6) {
            let wr = ws * s * s * invariant_measure_weight(&BallPoint::new(s, &[1.0, 0.0, 0.0]).unwrap(), mexp);
            let rd = u.radial_data(s, 0).map_err(abort(S))?;
            for (x, &w) in sph.nodes.iter().zip(&sph.weights) {
                num += wr * w * u.value_with(&rd, x, ModeOp::IDENTITY);
                den += wr * w;
            }
        }
        worst = worst.max((num / den - u0).abs() / u0.abs().max(1e-3));
    }
    rec.le("origin_invariant_mean_rel_err", worst, 1e-10);
    Ok(rec.finish(S, cfg.seed))
}

// ---------------------------------------------------------------------------
// operator identities

/// Polynomial in r, constant term first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RPoly(pub Vec<f64>);

impl RPoly {
    pub fn constant(c: f64) -> Self {
        RPoly(vec![c])
    }

    pub fn monomial(c: f64, k: usize) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        RPoly(v)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    pub fn add(&self, o: &RPoly) -> RPoly {
        let mut v = vec![0.0; self.0.len().max(o.0.len())];
        for (i, c) in self.0.iter().enumerate() {
            v[i] += c;
        }
        for (i, c) in o.0.iter().enumerate() {
            v[i] += c;
        }
        RPoly(v)
    }

    pub fn scale(&self, s: f64) -> RPoly {
        RPoly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, o: &RPoly) -> RPoly {
        if self.0.is_empty() || o.0.is_empty() {
            return RPoly::default();
        }
        let mut v = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        RPoly(v)
    }

    /// `r d/dr`.
    pub fn n_op(&self) -> RPoly {
        RPoly(self.0.iter().enumerate().map(|(i, c)| i as f64 * c).collect())
    }

    /// Divide by r^2, dropping the (vanishing) r^0 and r^1 coefficients.
    fn div_r2(&self) -> RPoly {
        RPoly(self.0.iter().skip(2).copied().collect())
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }
}

fn one_minus_r2() -> RPoly {
    RPoly(vec![1.0, 0.0, -1.0])
}

/// L on a mode `g(r) Y_l`: `r^-2 [(1-r^2) N^2 g + (n-2)(1+r^2) N g - (1-r^2) l(l+n-2) g]`.
pub fn mode_l(g: &RPoly, n: usize, l: usize) -> RPoly {
    let lam = (l * (l + n - 2)) as f64;
    let w = one_minus_r2();
    let ng = g.n_op();
    let b = w
        .mul(&ng.n_op())
        .add(&RPoly(vec![1.0, 0.0, 1.0]).mul(&ng).scale(n as f64 - 2.0))
        .add(&w.mul(g).scale(-lam));
    b.div_r2()
}

/// Expression `sum bare(r) N^i Ds^(j/2) u + (1 - r^2) sum damped(r) N^i Ds^(j/2) u`,
/// keyed by (i, j).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NPowerRecursion {
    pub k: usize,
    pub terms: BTreeMap<(usize, usize), (RPoly, RPoly)>,
}

impl NPowerRecursion {
    fn add(&mut self, key: (usize, usize), bare: RPoly, damped: RPoly) {
        let e = self.terms.entry(key).or_default();
        e.0 = e.0.add(&bare);
        e.1 = e.1.add(&damped);
    }

    /// `P_j` (coefficient of `Delta_sigma^j u`).
    pub fn p(&self, j: usize) -> RPoly {
        self.terms.get(&(0, 2 * j)).map(|t| t.0.clone()).unwrap_or_default()
    }

    /// `Q_(i,j)`.
    pub fn q(&self, i: usize, j: usize) -> RPoly {
        self.terms.get(&(i, j)).map(|t| t.1.clone()).unwrap_or_default()
    }

    /// Rewrites bare `c N X u` through the radial-tangential form of D,
    /// `2(n-2) N X u = (1-r^2)[(n-2) N X u - Delta_sigma X u - N^2 X u]`.
    fn reduce(mut self, n: usize) -> std::result::Result<Self, String> {
        let keys: Vec<_> = self.terms.keys().copied().collect();
        for key in keys {
            let (i, j) = key;
            let bare = self.terms[&key].0.clone();
            if bare.is_zero() {
                continue;
            }
            if i == 0 && j % 2 == 0 {
                continue;
            }
            if i != 1 {
                return Err(format!("bare term N^{i} Ds^({j}/2) needs the general recursion"));
            }
            self.terms.get_mut(&key).unwrap().0 = RPoly::default();
            let c = bare.scale(1.0 / (2.0 * (n as f64 - 2.0)));
            self.add((1, j), RPoly::default(), c.scale(n as f64 - 2.0));
            self.add((0, j + 2), RPoly::default(), c.scale(-1.0));
            self.add((2, j), RPoly::default(), c.scale(-1.0));
        }
        self.terms.retain(|_, (b, d)| !(b.is_zero() && d.is_zero()));
        Ok(self)
    }

    /// Polynomials for `(1-r^2) N^(k+1) u + 2(n-1-k) N^k u` with k = 1 or 2.
    pub fn build(n: usize, k: usize) -> std::result::Result<Self, String> {
        if !(1..=2).contains(&k) {
            return Err(format!("k = {k} outside the implemented range 1..=2"));
        }
        let mut e = NPowerRecursion { k: 1, terms: BTreeMap::new() };
        e.add((2, 0), RPoly::default(), RPoly::constant(1.0));
        e.add((1, 0), RPoly::constant(2.0 * (n as f64 - 2.0)), RPoly::default());
        let mut e = e.reduce(n)?;
        for step in 2..=k {
            // LHS_k = N(LHS_(k-1)) - 2(1-r^2) N^k u
            let mut next = NPowerRecursion { k: step, terms: BTreeMap::new() };
            for (&(i, j), (b, d)) in &e.terms {
                next.add((i, j), b.n_op(), RPoly::default());
                next.add((i + 1, j), b.clone(), RPoly::default());
                next.add((i, j), RPoly::default(), d.n_op());
                next.add((i + 1, j), RPoly::default(), d.clone());
                next.add((i, j), RPoly::monomial(-2.0, 2).mul(d), RPoly::default());
            }
            next.add((step, 0), RPoly::default(), RPoly::constant(-2.0));
            e = next.reduce(n)?;
        }
        Ok(e)
    }

    /// Right-hand side on a mode with radial data `nk[i]` and eigenvalue lam.
    fn rhs(&self, r: f64, nk: &[f64], lam: f64) -> f64 {
        let w = 1.0 - r * r;
        self.terms
            .iter()
            .map(|(&(i, j), (b, d))| {
                let ang = (-lam).powi(j as i32 / 2);
                (b.eval(r) + w * d.eval(r)) * nk[i] * ang
            })
            .sum()
    }
}

/// Single harmonic mode of degree l.
fn mode_function(n: usize, l: usize) -> HarmonicFunction {
    let mut c = vec![0.0; l + 1];
    c[l] = 1.0;
    HarmonicFunction::extend_zonal(&ZonalExpansion::new(n, &pole(n), c).expect("mode")).expect("mode")
}

pub fn suite_operator_identities(cfg: &RunConfig) -> Result<SuiteReport> {
    const S: &str = "operator-identities";
    let tol = &cfg.tolerances;
    let mut rng = suite_rng(cfg, S);
    let mut rec = Recorder::default();

    // Commutator identity on arbitrary (non-harmonic) polynomial modes.
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(3..=6);
        let l = rng.gen_range(0..=12);
        let mut g = RPoly::monomial(1.0, l);
        for i in 1..=3 {
            g = g.add(&RPoly::monomial(rng.gen_range(-1.0..1.0), l + 2 * i));
        }
        let lam = (l * (l + n - 2)) as f64;
        let lhs = mode_l(&g.n_op(), n, l).add(&mode_l(&g, n, l).n_op().scale(-1.0));
        let rhs = mode_l(&g, n, l)
            .scale(2.0)
            .add(&g.n_op().n_op().add(&g.scale(-lam)).scale(2.0))
            .add(&g.n_op().scale(-2.0 * (n as f64 - 2.0)));
        let r = rng.gen_range(0.05..0.95);
        let scale = [lhs.eval(r), rhs.eval(r), mode_l(&g.n_op(), n, l).eval(r), g.eval(r)]
            .iter()
            .fold(1e-300f64, |m, v| m.max(v.abs()));
        let res = (lhs.eval(r) - rhs.eval(r)).abs() / scale;
        worst = worst.max(res);
        rec.residual(res);
    }
    rec.le("commutator_LN_NL_max_rel", worst, tol.identity);
    let one = RPoly::constant(1.0);
    let c0 = mode_l(&one.n_op(), 3, 0).add(&mode_l(&one, 3, 0).n_op().scale(-1.0));
    rec.le("commutator_on_constant_abs", c0.0.iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);

    // Radial-tangential relation on random harmonic modes.
    let mut worst: f64 = 0.0;
    let mut samples = Vec::new();
    for _ in 0..50 {
        let n = rng.gen_range(3..=6);
        let l = rng.gen_range(0..=20);
        let r = rng.gen_range(0.05..0.95);
        samples.push((n, l, r));
    }
    for &(n, l, r) in &samples {
        let u = mode_function(n, l);
        let rd = u.radial_data(r, 3).map_err(abort(S))?;
        let nk: Vec<f64> = (0..5).map(|k| rd.nk[k][l]).collect();
        let lam = (l * (l + n - 2)) as f64;
        let w = 1.0 - r * r;
        let nf = n as f64 - 2.0;
        let terms = [w * nk[2], 2.0 * nf * nk[1], -w * nf * nk[1], -w * lam * nk[0]];
        let scale = terms.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        let res = terms.iter().sum::<f64>().abs() / scale;
        worst = worst.max(res);
        rec.residual(res);
    }
    rec.le("radial_tangential_max_rel", worst, tol.identity);

    // Polynomial families of the N-power recursion.
    let mut k1_dev: f64 = 0.0;
    for n in 3..=6 {
        let e = NPowerRecursion::build(n, 1).map_err(abort(S))?;
        let q10 = e.q(1, 0);
        let q02 = e.q(0, 2);
        k1_dev = k1_dev.max((q10.eval(0.0) - (n as f64 - 2.0)).abs());
        k1_dev = k1_dev.max(q10.0.iter().skip(1).fold(0.0f64, |m, v| m.max(v.abs())));
        k1_dev = k1_dev.max((q02.eval(0.0) + 1.0).abs());
        k1_dev = k1_dev.max(q02.0.iter().skip(1).fold(0.0f64, |m, v| m.max(v.abs())));
        k1_dev = k1_dev.max(if e.terms.len() == 2 { 0.0 } else { 1.0 });
    }
    rec.le("npow_recursion_k1_coefficient_deviation", k1_dev, 1e-14);
    for k in 1..=2 {
        let mut worst: f64 = 0.0;
        for &(n, l, r) in &samples {
            let e = NPowerRecursion::build(n, k).map_err(abort(S))?;
            let u = mode_function(n, l);
            let rd = u.radial_data(r, 3).map_err(abort(S))?;
            let nk: Vec<f64> = (0..5).map(|i| rd.nk[i][l]).collect();
            let lam = (l * (l + n - 2)) as f64;
            let lhs = (1.0 - r * r) * nk[k + 1] + 2.0 * (n as f64 - 1.0 - k as f64) * nk[k];
            let rhs = e.rhs(r, &nk, lam);
            let scale = nk.iter().take(k + 2).fold(lhs.abs(), |m, v| m.max(v.abs() * (1.0 + lam)));
            let res = (lhs - rhs).abs() / scale.max(1e-300);
            worst = worst.max(res);
        }
        rec.le(format!("npow_recursion_k{k}_residual_max_rel"), worst, tol.identity);
    }
    if let Ok(e) = NPowerRecursion::build(5, 2) {
        rec.info("npow_recursion_k2_P1_r2_coeff_n5", e.p(1).0.get(2).copied().unwrap_or(0.0));
    }

    // Inversion of (1-r^2) N y + 2 m y = v along rays.
    let mut worst: f64 = 0.0;
    for n in 3..=5 {
        let p = pole(n);
        let u = HarmonicFunction::extend_zonal(&ZonalExpansion::random(n, &p, 6, 2.0, &mut rng).map_err(abort(S))?)
            .map_err(abort(S))?;
        let t = rng.gen_range(-1.0..1.0);
        let d = dir_at(n, t);
        for k in 0..=(n - 2) {
            let m = (n - 1 - k) as i32;
            let nku = |rho: f64| -> (f64, f64) {
                let rd = u.radial_data(rho, k + 1).expect("radial");
                (u.value_with(&rd, &d, ModeOp::n(k)), u.value_with(&rd, &d, ModeOp::n(k + 1)))
            };
            for r in [0.3, 0.6, 0.9] {
                let integrand = |rho: f64| {
                    if rho == 0.0 {
                        return 0.0;
                    }
                    let (a, b) = nku(rho);
                    let v = 2.0 * m as f64 * a + (1.0 - rho * rho) * b;
                    v * rho.powi(2 * m - 1) / (1.0 - rho * rho).powi(m + 1)
                };
                let integral = adaptive_gk(integrand, 0.0, r, 1e-13, 400).map_err(abort(S))?;
                let y = ((1.0 - r * r) / (r * r)).powi(m) * integral;
                let want = nku(r).0;
                let res = (y - want).abs() / want.abs().max(1.0);
                worst = worst.max(res);
            }
        }
    }
    rec.le("inversion_roundtrip_max_rel", worst, tol.roundtrip);

    // Finite-difference D and D_delta residuals converge at order 2.
    let (o_h, o_d) = fd_orders(&mut rng, 50).map_err(abort(S))?;
    for (i, o) in o_h.iter().enumerate() {
        rec.within(format!("fd_D_order_halving{}", i + 1), *o, 2.0, tol.fd_order_band);
    }
    for (i, o) in o_d.iter().enumerate() {
        rec.within(format!("fd_Ddelta0.7_order_halving{}", i + 1), *o, 2.0, tol.fd_order_band);
    }
    Ok(rec.finish(S, cfg.seed))
}

/// Orders `log2(max|res(h)| / max|res(h/2)|)` for two halvings, for extended
/// functions (D) and their dilates by 0.7 (D_delta), at `npts` random points.
pub fn fd_orders<R: Rng>(rng: &mut R, npts: usize) -> std::result::Result<([f64; 2], [f64; 2]), String> {
    let mut max_h = [[0.0f64; 3]; 2];
    for _ in 0..npts {
        let n = rng.gen_range(3..=5);
        let p = pole(n);
        let z = ZonalExpansion::random(n, &p, 6, 1.0, rng).map_err(|e| e.to_string())?;
        let u = HarmonicFunction::extend_zonal(&z).map_err(|e| e.to_string())?;
        let ud = u.dilate(0.7).map_err(|e| e.to_string())?;
        let r = rng.gen_range(0.1..0.9);
        let x: Vec<f64> = random_unit(n, rng).iter().map(|c| c * r).collect();
        let h0 = 0.05 * (1.0 - r);
        for (slot, (f, delta)) in [(&u, 1.0), (&ud, 0.7)].into_iter().enumerate() {
            let g = |y: &[f64]| f.eval(y).expect("eval");
            for (i, h) in [h0, h0 / 2.0, h0 / 4.0].into_iter().enumerate() {
                let res = fd_d_residual(&g, &x, h, delta).map_err(|e| e.to_string())?;
                max_h[slot][i] = max_h[slot][i].max(res.abs());
            }
        }
    }
    let ord = |m: [f64; 3]| [(m[0] / m[1]).log2(), (m[1] / m[2]).log2()];
    Ok((ord(max_h[0]), ord(max_h[1])))
}

// ---------------------------------------------------------------------------
// upper and in-cone lower kernel bounds

struct BoundGrid {
    upper: f64,
    delta0_dev: f64,
    axis_dev: f64,
    /// Per aperture, the minimum of `K (1 - r^2)^(n-1)` over in-cone samples.
    lower: Vec<f64>,
}

fn bound_grid(n: usize, nr: usize, nt: usize, apertures: &[f64], opts: SeriesOptions) -> std::result::Result<BoundGrid, String> {
    let deltas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let cases: Vec<(usize, f64)> =
        (1..=nr).flat_map(|i| deltas.iter().map(move |&d| (i, d))).collect();
    let rows: Vec<(f64, f64, f64, Vec<f64>)> = cases
        .par_iter()
        .map(|&(i, d)| {
            let r = 0.95 * i as f64 / nr as f64;
            let s = PoissonSeries::new(n, r, d, opts).map_err(|e| e.to_string())?;
            let len = s.table_len();
            let mut up: f64 = 0.0;
            let mut d0: f64 = 0.0;
            let mut axis: f64 = 0.0;
            let mut low = vec![f64::INFINITY; apertures.len()];
            for j in 0..=nt {
                let t = -1.0 + 2.0 * j as f64 / nt as f64;
                let k = s.partial_sum(t, len);
                let ratio = k / poisson_euclid_rt(n, r, t);
                up = up.max(ratio);
                if d == 0.0 {
                    d0 = d0.max((ratio - 1.0).abs());
                }
                if d == 1.0 && j == nt {
                    axis = (ratio / (1.0 + r).powi(n as i32 - 2) - 1.0).abs();
                }
                for (a, lo) in apertures.iter().zip(low.iter_mut()) {
                    if cone_contains_polar(*a, r, r * t) || (j == nt) {
                        *lo = lo.min(k * (1.0 - r * r).powi(n as i32 - 1));
                    }
                }
            }
            Ok((up, d0, axis, low))
        })
        .collect::<std::result::Result<_, String>>()?;
    let mut g = BoundGrid { upper: 0.0, delta0_dev: 0.0, axis_dev: 0.0, lower: vec![f64::INFINITY; apertures.len()] };
    for (up, d0, axis, low) in rows {
        g.upper = g.upper.max(up);
        g.delta0_dev = g.delta0_dev.max(d0);
        g.axis_dev = g.axis_dev.max(axis);
        for (a, b) in g.lower.iter_mut().zip(low) {
            *a = a.min(b);
        }
    }
    Ok(g)
}

pub fn suite_prop18(cfg: &RunConfig) -> Result<SuiteReport> {
    const S: &str = "prop18";
    let tol = &cfg.tolerances;
    let mut rec = Recorder::default();
    let opts = series_opts(cfg);
    let apertures = [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9];
    for n in [3, 4] {
        let base = bound_grid(n, 12, 24, &apertures, opts).map_err(abort(S))?;
        let fine = bound_grid(n, 24, 48, &apertures, opts).map_err(abort(S))?;
        rec.info(format!("n{n}_upper_constant"), base.upper);
        rec.info(format!("n{n}_upper_constant_refined"), fine.upper);
        rec.le(format!("n{n}_upper_constant_drift"), (fine.upper / base.upper - 1.0).abs(), tol.prop18_stability);
        rec.le(format!("n{n}_delta0_ratio_dev"), base.delta0_dev.max(fine.delta0_dev), tol.kernel_rel);
        rec.le(format!("n{n}_axis_closed_form_rel"), base.axis_dev.max(fine.axis_dev), tol.kernel_rel);
        let mut largest: f64 = 0.0;
        for (a, lo) in apertures.iter().zip(&fine.lower) {
            rec.info(format!("n{n}_lower_constant_alpha{a}"), *lo);
            if *lo > 1e-12 {
                largest = largest.max(*a);
            }
        }
        rec.info(format!("n{n}_largest_positive_aperture"), largest);
        rec.ge(format!("n{n}_lower_constant_alpha0.1_positive"), fine.lower[1], 1e-12);
    }
    Ok(rec.finish(S, cfg.seed))
}

// ---------------------------------------------------------------------------
// functional-norm bands

struct Grids {
    sphere: crate::geometry::SphereGrid,
    fg: FunctionalGrid,
}

fn grids(cfg: &RunConfig, n: usize, refined: bool) -> Result<Grids> {
    let g_form = cfg.g_form().map_err(abort("config"))?;
    let base = FunctionalGrid { depth: cfg.ladder_depth, g_form, ..FunctionalGrid::default() };
    let (deg, fg) = if refined { (2 * cfg.grid_degree, base.refined()) } else { (cfg.grid_degree, base) };
    let sphere = sphere_quadrature(n, deg, GridKind::Zonal(pole(n))).map_err(abort("grid"))?;
    Ok(Grids { sphere, fg })
}

/// Band of per-function ratios `a_i / b_i`: (min, max).
fn band(a: &[f64], b: &[f64]) -> (f64, f64) {
    a.iter().zip(b).map(|(x, y)| x / y).fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

fn record_bands(
    rec: &mut Recorder,
    prefix: &str,
    names: &[String],
    base: &[Vec<f64>],
    fine: &[Vec<f64>],
    bound: f64,
    drift_tol: f64,
) {
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            let (lo, hi) = band(&base[i], &base[j]);
            let (flo, fhi) = band(&fine[i], &fine[j]);
            let width = hi / lo;
            let drift = (flo / lo - 1.0).abs().max((fhi / hi - 1.0).abs());
            let key = format!("{prefix}_{}_over_{}", names[i], names[j]);
            rec.info(format!("{key}_min"), lo);
            rec.info(format!("{key}_max"), hi);
            rec.le(format!("{key}_band"), if width.is_finite() { width } else { f64::INFINITY }, bound);
            rec.le(format!("{key}_drift"), if drift.is_finite() { drift } else { f64::INFINITY }, drift_tol);
        }
    }
}

/// Norms of each functional kind over a family: `[kind][function][p]`.
fn family_norms(
    family: &[HarmonicFunction],
    kinds: &[(FunctionalKind, ModeOp)],
    g: &Grids,
    ps: &[f64],
) -> std::result::Result<Vec<Vec<Vec<f64>>>, functionals::FunctionalError> {
    kinds
        .iter()
        .map(|&(kind, op)| {
            family
                .iter()
                .map(|u| {
                    let f = OpField::new(u, op);
                    let res = functionals::compute(&f, kind, &g.sphere, &g.fg)?;
                    Ok(ps.iter().map(|&p| res.lp_quasinorm(p)).collect())
                })
                .collect()
        })
        .collect()
}

fn zonal_family<R: Rng>(n: usize, count: usize, lmax: usize, rng: &mut R) -> std::result::Result<Vec<HarmonicFunction>, String> {
    (0..count)
        .map(|_| {
            let mut z = ZonalExpansion::random(n, &pole(n), lmax.max(1), 2.0, rng).map_err(|e| e.to_string())?;
            z.coeffs[0] = 0.0;
            HarmonicFunction::extend_zonal(&z).map_err(|e| e.to_string())
        })
        .collect()
}

pub fn suite_theorem_a(cfg: &RunConfig) -> Result<SuiteReport> {
    const S: &str = "theorem-a";
    let tol = &cfg.tolerances;
    let mut rng = suite_rng(cfg, S);
    let mut rec = Recorder::default();
    for n in [3, 4] {
        let family = zonal_family(n, cfg.family, cfg.lmax, &mut rng).map_err(abort(S))?;
        let mut kinds: Vec<(FunctionalKind, ModeOp)> = Vec::new();
        let mut names: Vec<String> = Vec::new();
        for &a in &cfg.alphas {
            for k in [FunctionalKind::MAlpha(a), FunctionalKind::S(a), FunctionalKind::SN(a)] {
                names.push(format!("{}[{a}]", k.name()));
                kinds.push((k, ModeOp::IDENTITY));
            }
        }
        for k in [FunctionalKind::G, FunctionalKind::GN] {
            names.push(k.name().into());
            kinds.push((k, ModeOp::IDENTITY));
        }
        let base = family_norms(&family, &kinds, &grids(cfg, n, false)?, &cfg.ps).map_err(abort(S))?;
        let fine = family_norms(&family, &kinds, &grids(cfg, n, true)?, &cfg.ps).map_err(abort(S))?;
        for (pi, p) in cfg.ps.iter().enumerate() {
            let pick = |v: &Vec<Vec<Vec<f64>>>| -> Vec<Vec<f64>> {
                v.iter().map(|per_kind| per_kind.iter().map(|per_fn| per_fn[pi]).collect()).collect()
            };
            record_bands(&mut rec, &format!("n{n}_p{p}"), &names, &pick(&base), &pick(&fine), tol.band_bound, tol.band_drift);
        }

        // Degenerate and single-mode members.
        let g = grids(cfg, n, false)?;
        let one = HarmonicFunction::extend_zonal(&ZonalExpansion::new(n, &pole(n), vec![1.0]).map_err(abort(S))?)
            .map_err(abort(S))?;
        let s_const = functionals::area_integral(&OpField::new(&one, ModeOp::IDENTITY), cfg.alphas[0], &g.sphere, &g.fg, false)
            .map_err(abort(S))?
            .lp_quasinorm(1.0);
        rec.info(format!("n{n}_constant_excluded_S_norm"), s_const);
        let m1 = HarmonicFunction::extend_zonal(&ZonalExpansion::new(n, &pole(n), vec![0.0, 1.0]).map_err(abort(S))?)
            .map_err(abort(S))?;
        let mut min_norm = f64::INFINITY;
        for &(kind, op) in &kinds {
            let v = functionals::compute(&OpField::new(&m1, op), kind, &g.sphere, &g.fg).map_err(abort(S))?;
            min_norm = min_norm.min(v.lp_quasinorm(1.0));
        }
        rec.ge(format!("n{n}_single_mode_min_norm"), min_norm, 1e-300);
    }
    Ok(rec.finish(S, cfg.seed))
}

// ---------------------------------------------------------------------------
// Hardy-Sobolev bands

/// `max |d^alpha u|` over multi-indices of order <= k (k <= 2), by nested
/// central differences of the mode-exact values.
pub struct PartialsField<'a> {
    pub u: &'a HarmonicFunction,
    pub k: usize,
}

impl PartialsField<'_> {
    fn at(&self, x: &[f64]) -> f64 {
        let u = |y: &[f64]| self.u.eval(y).expect("eval");
        let n = x.len();
        let mut m = u(x).abs();
        if self.k == 0 {
            return m;
        }
        let h = 1e-4 * (1.0 - norm(x)).max(1e-3);
        let mut p = x.to_vec();
        for i in 0..n {
            p[i] = x[i] + h;
            let a = u(&p);
            p[i] = x[i] - h;
            let b = u(&p);
            p[i] = x[i];
            m = m.max(((a - b) / (2.0 * h)).abs());
            if self.k >= 2 {
                m = m.max(((a - 2.0 * u(x) + b) / (h * h)).abs());
                for j in (i + 1)..n {
                    let mut q = x.to_vec();
                    let mut s = 0.0;
                    for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                        q[i] = x[i] + si * h;
                        q[j] = x[j] + sj * h;
                        s += w * u(&q);
                    }
                    m = m.max((s / (4.0 * h * h)).abs());
                }
            }
        }
        m
    }
}

/// Value, gradient and Hessian of a zonal mode sum at `r * dir`, r > 0, from
/// `u = sum c_l g_l(r) Z_l(t)` with `t = <x, pole> / r`.
fn zonal_jet(u: &HarmonicFunction, rd: &RadialData, dir: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let n = u.n;
    let p = u.pole().expect("zonal");
    let c = u.zonal_coeffs().expect("zonal");
    let lmax = c.len() - 1;
    let r = rd.r;
    let t = dot(dir, p).clamp(-1.0, 1.0);
    let z = crate::specfun::zonal_all(lmax, n, t);
    let dz = crate::specfun::zonal_all_derivative(lmax, n, t);
    let (mut a0, mut a1, mut a2, mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for l in 0..=lmax {
        let g = rd.nk[0][l];
        let g1 = rd.over_r[1][l];
        let g2 = (rd.nk[2][l] - rd.nk[1][l]) / (r * r);
        let d2z = if l >= 2 {
            (2 * l + n - 2) as f64 * n as f64 * crate::specfun::gegenbauer(l - 2, n as f64 / 2.0 + 1.0, t)
        } else {
            0.0
        };
        // sums of c g^(i) Z^(j)
        a0 += c[l] * g * z[l];
        a1 += c[l] * g1 * z[l];
        a2 += c[l] * g2 * z[l];
        b0 += c[l] * g * dz[l];
        b1 += c[l] * g1 * dz[l];
        b2 += c[l] * g * d2z;
    }
    let e = dir;
    let q: Vec<f64> = (0..n).map(|i| (p[i] - t * e[i]) / r).collect();
    let grad: Vec<f64> = (0..n).map(|i| a1 * e[i] + b0 * q[i]).collect();
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let kd = if i == j { 1.0 } else { 0.0 };
            let pe = (kd - e[i] * e[j]) / r;
            let dq = -(q[j] * e[i] + q[i] * e[j]) / r - t * (kd - e[i] * e[j]) / (r * r);
            hess[i][j] = a2 * e[i] * e[j] + a1 * pe + b1 * (e[i] * q[j] + q[i] * e[j]) + b2 * q[i] * q[j] + b0 * dq;
        }
    }
    (a0, grad, hess)
}

impl Field for PartialsField<'_> {
    fn dim(&self) -> usize {
        self.u.n
    }

    fn pole(&self) -> Option<Vec<f64>> {
        self.u.pole().map(|p| p.to_vec())
    }

    fn shell_values(&self, rho: f64, dirs: &[Vec<f64>]) -> functionals::Result<Vec<f64>> {
        if self.u.is_zonal() && rho >= 1e-3 {
            let rd = self.u.radial_data(rho, 1)?;
            return Ok(dirs
                .iter()
                .map(|d| {
                    let (v, g, h) = zonal_jet(self.u, &rd, d);
                    let mut m = v.abs();
                    if self.k >= 1 {
                        m = g.iter().fold(m, |a, b| a.max(b.abs()));
                    }
                    if self.k >= 2 {
                        m = h.iter().flatten().fold(m, |a, b| a.max(b.abs()));
                    }
                    m
                })
                .collect());
        }
        Ok(dirs.iter().map(|d| self.at(&d.iter().map(|c| c * rho).collect::<Vec<_>>())).collect())
    }

    fn shell_grads(&self, _rho: f64, _dirs: &[Vec<f64>]) -> functionals::Result<Vec<(f64, f64)>> {
        Err(functionals::FunctionalError::Invalid("partials field has no gradient".into()))
    }
}

pub fn suite_hardy_sobolev(cfg: &RunConfig) -> Result<SuiteReport> {
    const S: &str = "hardy-sobolev";
    let tol = &cfg.tolerances;
    let mut rng = suite_rng(cfg, S);
    let mut rec = Recorder::default();
    let alpha = cfg.alphas[0];
    let count = cfg.family.min(8);
    let ps = &cfg.ps;
    for (n, k) in [(3usize, 1usize), (4, 2)] {
        let family = zonal_family(n, count, cfg.lmax, &mut rng).map_err(abort(S))?;
        let m = FunctionalKind::MAlpha(alpha);
        let mut kinds: Vec<(String, FunctionalKind, ModeOp)> = Vec::new();
        for j in 0..=k {
            kinds.push((format!("M[N^{j}u]"), m, ModeOp::n(j)));
        }
        for j in 1..=(k / 2) {
            kinds.push((format!("M[Ds^{j}u]"), m, ModeOp::lap(j as u32)));
        }
        if k % 2 == 1 {
            kinds.push((format!("M[(1-r2)Ds^{}u]", (k + 1) / 2), m, ModeOp::lap(((k + 1) / 2) as u32).damped(1)));
            kinds.push(("S[(-Ds)^(1/2)u]".into(), FunctionalKind::S(alpha), ModeOp::neg_lap_pow(0.5)));
            kinds.push(("SN[Nu]".into(), FunctionalKind::SN(alpha), ModeOp::n(1)));
        }
        let plain: Vec<(FunctionalKind, ModeOp)> = kinds.iter().map(|(_, k, o)| (*k, *o)).collect();
        let base = family_norms(&family, &plain, &grids(cfg, n, false)?, ps).map_err(abort(S))?;
        let fine = family_norms(&family, &plain, &grids(cfg, n, true)?, ps).map_err(abort(S))?;
        let idx = |name: &str| kinds.iter().position(|(s, _, _)| s == name).unwrap();
        // Groupings: sums of the norms in each equivalent condition.
        let mut groups: Vec<(String, Vec<usize>)> = vec![(format!("a(N^j;j<={k})"), (0..=k).map(|j| idx(&format!("M[N^{j}u]"))).collect())];
        let mut b: Vec<usize> = vec![idx("M[N^0u]")];
        b.extend((1..=(k / 2)).map(|j| idx(&format!("M[Ds^{j}u]"))));
        if k % 2 == 1 {
            b.push(idx(&format!("M[(1-r2)Ds^{}u]", (k + 1) / 2)));
        }
        groups.push(("b(Ds)".into(), b));
        let g = grids(cfg, n, false)?;
        let mut c_norms: Vec<Vec<f64>> = Vec::new();
        if k % 2 == 0 {
            // Condition (c) with max-over-partials fields, base grid only.
            for u in &family {
                let mut s = vec![0.0; ps.len()];
                for j in 0..=k {
                    let f = PartialsField { u, k: j };
                    let r = functionals::cone_max(&f, alpha, &g.sphere, &g.fg).map_err(abort(S))?;
                    for (si, &p) in s.iter_mut().zip(ps) {
                        *si += r.lp_quasinorm(p);
                    }
                }
                c_norms.push(s);
            }
        }
        for (pi, p) in ps.iter().enumerate() {
            let sums = |v: &Vec<Vec<Vec<f64>>>, members: &[usize]| -> Vec<f64> {
                (0..family.len()).map(|f| members.iter().map(|&i| v[i][f][pi]).sum()).collect()
            };
            let names: Vec<String> = groups.iter().map(|(s, _)| s.clone()).collect();
            let gb: Vec<Vec<f64>> = groups.iter().map(|(_, m)| sums(&base, m)).collect();
            let gf: Vec<Vec<f64>> = groups.iter().map(|(_, m)| sums(&fine, m)).collect();
            record_bands(&mut rec, &format!("n{n}_k{k}_p{p}"), &names, &gb, &gf, tol.band_bound, tol.band_drift);
            if k % 2 == 1 {
                let (i, j) = (idx("S[(-Ds)^(1/2)u]"), idx("SN[Nu]"));
                let nb = vec!["S[(-Ds)^(1/2)u]".to_string(), "SN[Nu]".to_string()];
                let pb: Vec<Vec<f64>> = [i, j].iter().map(|&q| base[q].iter().map(|v| v[pi]).collect()).collect();
                let pf: Vec<Vec<f64>> = [i, j].iter().map(|&q| fine[q].iter().map(|v| v[pi]).collect()).collect();
                record_bands(&mut rec, &format!("n{n}_k{k}_p{p}_area"), &nb, &pb, &pf, tol.band_bound, tol.band_drift);
            } else {
                let cvals: Vec<f64> = c_norms.iter().map(|v| v[pi]).collect();
                let (lo, hi) = band(&gb[0], &cvals);
                rec.info(format!("n{n}_k{k}_p{p}_a_over_c_min"), lo);
                rec.info(format!("n{n}_k{k}_p{p}_a_over_c_max"), hi);
                rec.le(format!("n{n}_k{k}_p{p}_a_over_c_band"), hi / lo, tol.band_bound);
            }
        }
        // Constant data: derivative functionals vanish.
        let one = HarmonicFunction::extend_zonal(&ZonalExpansion::new(n, &pole(n), vec![1.0]).map_err(abort(S))?)
            .map_err(abort(S))?;
        let zero = functionals::cone_max(&OpField::new(&one, ModeOp::n(1)), alpha, &g.sphere, &g.fg)
            .map_err(abort(S))?
            .lp_quasinorm(1.0);
        rec.le(format!("n{n}_constant_Nu_norm"), zero, 1e-14);
    }
    Ok(rec.finish(S, cfg.seed))
}

// ---------------------------------------------------------------------------
// Lipschitz and Zygmund behaviour

/// Projection of `|t - t0|^gamma` (n = 3) onto degrees 0..=lmax, integrating
/// each side of the kink with a Gauss-Jacobi rule carrying the singular factor.
pub fn project_kink(t0: f64, gamma: f64, lmax: usize) -> Vec<f64> {
    let npts = lmax + 20;
    let rule = gauss_jacobi(npts, 0.0, gamma);
    let mass = 2f64.powf(gamma + 1.0) / (gamma + 1.0);
    let mut c = vec![0.0; lmax + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        // right side t = t0 + (1 - t0)(1 + x)/2, left side t = t0 - (1 + t0)(1 + x)/2
        for (len, sign) in [(1.0 - t0, 1.0), (1.0 + t0, -1.0)] {
            let t = t0 + sign * len * (1.0 + x) / 2.0;
            let weight = w * mass * (len / 2.0).powf(gamma + 1.0) / 2.0;
            for (cl, z) in c.iter_mut().zip(crate::specfun::zonal_all(lmax, 3, t)) {
                *cl += weight * z;
            }
        }
    }
    for (l, cl) in c.iter_mut().enumerate() {
        *cl /= (2 * l + 1) as f64;
    }
    c
}

/// Boundary directions for the Lipschitz sup: uniform in angle plus a dense
/// patch around the kink.
fn kink_dirs(t0: f64) -> Vec<(f64, Vec<f64>)> {
    let th0 = t0.acos();
    let mut th: Vec<f64> = (0..=4000).map(|i| std::f64::consts::PI * i as f64 / 4000.0).collect();
    th.extend((0..=400).map(|i| th0 - 0.02 + 0.04 * i as f64 / 400.0));
    th.sort_by(|a, b| a.partial_cmp(b).unwrap());
    th.into_iter().map(|a| (a.cos(), vec![a.sin(), 0.0, a.cos()])).collect()
}

/// `(sup |u - f|, (1 - r) sup |grad u|, (1 - r) sup |N^3 u|)` at radius r.
fn lipschitz_sups(u: &HarmonicFunction, f: &dyn Fn(f64) -> f64, dirs: &[(f64, Vec<f64>)], r: f64) -> (f64, f64, f64) {
    let rd = u.radial_data(r, 3).expect("radial data");
    let mut s = (0.0f64, 0.0f64, 0.0f64);
    for (t, d) in dirs {
        s.0 = s.0.max((u.value_with(&rd, d, ModeOp::IDENTITY) - f(*t)).abs());
        s.1 = s.1.max(u.grad_with(&rd, d, ModeOp::IDENTITY).0.sqrt());
        s.2 = s.2.max(u.value_with(&rd, d, ModeOp::n(3)).abs());
    }
    (s.0, (1.0 - r) * s.1, (1.0 - r) * s.2)
}

pub fn suite_lipschitz(cfg: &RunConfig) -> Result<SuiteReport> {
    const S: &str = "lipschitz";
    let tol = &cfg.tolerances;
    let mut rng = suite_rng(cfg, S);
    let mut rec = Recorder::default();
    let (t0, lmax) = (0.3, 64usize);
    let window: Vec<usize> = (1..=((lmax as f64).log2() as usize - 2)).collect();
    let dirs = kink_dirs(t0);
    let p3 = pole(3);
    let fit = |vals: &[f64], ms: &[usize]| -> f64 {
        let x: Vec<f64> = ms.iter().map(|&m| -(m as f64) * std::f64::consts::LN_2).collect();
        let y: Vec<f64> = vals.iter().map(|v| v.ln()).collect();
        fit_slope(&x, &y)
    };
    for gamma in [0.3, 0.5, 0.7] {
        let c = project_kink(t0, gamma, lmax);
        let u = HarmonicFunction::extend_zonal(&ZonalExpansion::new(3, &p3, c).map_err(abort(S))?).map_err(abort(S))?;
        let f = move |t: f64| (t - t0).abs().powf(gamma);
        let sups: Vec<(f64, f64, f64)> =
            window.par_iter().map(|&m| lipschitz_sups(&u, &f, &dirs, 1.0 - 0.5f64.powi(m as i32))).collect();
        let k0: Vec<f64> = sups.iter().map(|s| s.0).collect();
        let k1: Vec<f64> = sups.iter().map(|s| s.1).collect();
        rec.within(format!("gamma{gamma}_k0_slope"), fit(&k0, &window), gamma, tol.slope_band);
        rec.within(format!("gamma{gamma}_k1_slope"), fit(&k1, &window), gamma, tol.slope_band);
    }

    // Smooth data saturates at exponent one.
    let z = ZonalExpansion::random(3, &p3, cfg.lmax, 2.0, &mut rng).map_err(abort(S))?;
    let zc = z.clone();
    let u = HarmonicFunction::extend_zonal(&z).map_err(abort(S))?;
    let f = move |t: f64| zc.profile(t);
    let ms: Vec<usize> = (6..=12).collect();
    let sups: Vec<(f64, f64, f64)> = ms.iter().map(|&m| lipschitz_sups(&u, &f, &dirs, 1.0 - 0.5f64.powi(m as i32))).collect();
    rec.info("smooth_k0_slope", fit(&sups.iter().map(|s| s.0).collect::<Vec<_>>(), &ms));
    rec.info("smooth_k1_slope", fit(&sups.iter().map(|s| s.1).collect::<Vec<_>>(), &ms));

    // Kernel gradient growth along the axis.
    for n in [3, 4, 5] {
        let xi = pole(n);
        let ms: Vec<usize> = (6..=cfg.ladder_depth).collect();
        let vals: Vec<f64> = ms
            .iter()
            .map(|&m| {
                let r = 1.0 - 0.5f64.powi(m as i32);
                (0..=200)
                    .map(|i| {
                        let th = (1.0 - r) * 5.0 * i as f64 / 200.0;
                        let mut x = vec![0.0; n];
                        x[0] = r * th.sin();
                        x[n - 1] = r * th.cos();
                        norm(&poisson_hyp_gradient(&x, &xi))
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        rec.within(format!("kernel_gradient_slope_n{n}"), fit(&vals, &ms), -(n as f64), tol.kernel_slope_band);
    }

    // Zygmund-type bound: (1 - r)|N^3 u| stays bounded along the ladder.
    let c2 = project_kink(t0, 2.0, lmax);
    let u2 = HarmonicFunction::extend_zonal(&ZonalExpansion::new(3, &p3, c2).map_err(abort(S))?).map_err(abort(S))?;
    let f2 = move |t: f64| (t - t0).powi(2);
    for (name, uu) in [("smooth", &u), ("kink_gamma2", &u2)] {
        let ms: Vec<usize> = (1..=cfg.ladder_depth).collect();
        let vals: Vec<f64> =
            ms.par_iter().map(|&m| lipschitz_sups(uu, &f2, &dirs, 1.0 - 0.5f64.powi(m as i32)).2).collect();
        let sup = vals.iter().fold(0.0f64, |a, b| a.max(*b));
        let half = ms.len() / 2;
        let tail: Vec<f64> = vals[half..].iter().map(|v| v.log2()).collect();
        let xs: Vec<f64> = ms[half..].iter().map(|&m| m as f64).collect();
        rec.info(format!("zygmund_{name}_sup"), sup);
        rec.le(format!("zygmund_{name}_tail_log2_slope"), fit_slope(&xs, &tail), tol.slope_band);
    }
    Ok(rec.finish(S, cfg.seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn npow_recursion_k2_matches_hand_derivation() {
        let n = 5;
        let e = NPowerRecursion::build(n, 2).unwrap();
        let close = |p: &RPoly, want: &[f64]| {
            let len = p.0.len().max(want.len());
            (0..len).all(|i| (p.0.get(i).copied().unwrap_or(0.0) - want.get(i).copied().unwrap_or(0.0)).abs() < 1e-14)
        };
        assert!(close(&e.p(1), &[0.0, 0.0, 2.0]));
        assert!(close(&e.q(2, 0), &[n as f64 - 4.0, 0.0, 1.0]));
        assert!(close(&e.q(1, 0), &[0.0, 0.0, -(n as f64 - 2.0)]));
        assert!(close(&e.q(1, 2), &[-1.0]));
        assert!(close(&e.q(0, 2), &[0.0, 0.0, 1.0]));
        assert!(NPowerRecursion::build(n, 3).is_err());
    }

    #[test]
    fn kink_projection_reproduces_smooth_profile() {
        // gamma = 2 is a polynomial, so the projection is exact.
        let c = project_kink(0.3, 2.0, 4);
        let z = ZonalExpansion::new(3, &[0.0, 0.0, 1.0], c).unwrap();
        for t in [-0.9, 0.0, 0.3, 0.8] {
            assert!((z.profile(t) - (t - 0.3f64).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn zonal_jet_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [3, 4, 5] {
            let z = ZonalExpansion::random(n, &pole(n), 6, 1.0, &mut rng).unwrap();
            let u = HarmonicFunction::extend_zonal(&z).unwrap();
            let exact = PartialsField { u: &u, k: 2 };
            for r in [0.2, 0.7] {
                let d = random_unit(n, &mut rng);
                let a = exact.shell_values(r, &[d.clone()]).unwrap()[0];
                let b = exact.at(&d.iter().map(|c| c * r).collect::<Vec<_>>());
                assert!((a - b).abs() < 1e-5 * a.abs().max(1.0), "n={n} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn slope_fit() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-15);
    }
}
