use hyperharm_core::config::{BoundaryFile, RunConfig};
use hyperharm_core::functionals::{self, FunctionalGrid, FunctionalKind, GForm, OpField};
use hyperharm_core::geometry::{sphere_quadrature, GridKind};
use hyperharm_core::harmonic::{self, HarmonicFunction, ModeOp, Sph3Coeffs, ZonalExpansion};
use hyperharm_core::kernels::{self, KernelError, PoissonSeries, SeriesOptions};
use hyperharm_core::verify;
use pyo3::exceptions::{PyRuntimeWarning, PyValueError};
use pyo3::prelude::*;
use std::ffi::CString;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyfunction]
fn poisson_euclid(n: usize, r: f64, t: f64) -> PyResult<f64> {
    if n < 3 || !(0.0..1.0).contains(&r) {
        return Err(PyValueError::new_err("need n >= 3 and 0 <= r < 1"));
    }
    Ok(kernels::poisson_euclid_rt(n, r, t))
}

#[pyfunction]
fn poisson_hyp(n: usize, r: f64, t: f64) -> PyResult<f64> {
    if n < 3 || !(0.0..1.0).contains(&r) {
        return Err(PyValueError::new_err("need n >= 3 and 0 <= r < 1"));
    }
    Ok(kernels::poisson_hyp_rt(n, r, t))
}

/// Series value of the delta-kernel and the number of terms used. A truncated
/// series returns its partial sum with a RuntimeWarning.
#[pyfunction]
#[pyo3(signature = (n, r, delta, t, tail_tol=1e-14, cap=4096))]
fn poisson_series(py: Python<'_>, n: usize, r: f64, delta: f64, t: f64, tail_tol: f64, cap: usize) -> PyResult<(f64, usize)> {
    let opts = SeriesOptions { tail_tol, cap, ..SeriesOptions::default() };
    let s = PoissonSeries::new(n, r, delta, opts).map_err(err)?;
    match s.eval(t) {
        Ok(v) => Ok((v.value, v.terms)),
        Err(KernelError::TruncationWarning { value, terms, last_term }) => {
            let msg = CString::new(format!("series truncated after {terms} terms (last term {last_term:e})")).unwrap();
            PyErr::warn(py, &py.get_type::<PyRuntimeWarning>(), &msg, 1)?;
            Ok((value, terms))
        }
        Err(e) => Err(err(e)),
    }
}

/// `sum_k P_k(r) (1-r^2)^k d_r^k P_e` for even n.
#[pyfunction]
fn lemma3_kernel(n: usize, r: f64, t: f64) -> PyResult<f64> {
    Ok(kernels::lemma3_build(n).map_err(err)?.reconstruct_kernel(r, t))
}

#[pyclass(name = "EtaKernel", frozen)]
struct PyEtaKernel {
    inner: kernels::EtaKernel,
}

#[pymethods]
impl PyEtaKernel {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(PyEtaKernel { inner: kernels::EtaKernel::new(n).map_err(err)? })
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    fn value(&self, r: f64, s: f64) -> f64 {
        self.inner.value(r, s)
    }

    fn mass(&self, r: f64) -> PyResult<f64> {
        self.inner.mass(r).map_err(err)
    }

    fn calibrate_at(&self, r: f64) -> PyResult<f64> {
        self.inner.calibrate_at(r).map_err(err)
    }

    /// Euclidean Poisson kernel at (r, t) rebuilt from the hyperbolic one.
    fn transfer_kernel(&self, r: f64, t: f64) -> PyResult<f64> {
        let n = self.inner.n;
        self.inner.transfer_radial(r, |rho| kernels::poisson_hyp_rt(n, rho, t)).map_err(err)
    }
}

#[pyclass(name = "HarmonicFunction", frozen)]
struct PyHarmonic {
    inner: HarmonicFunction,
}

#[pymethods]
impl PyHarmonic {
    /// Extension of zonal data `sum_l coeffs[l] Z_l(<zeta, pole>)`.
    #[staticmethod]
    fn zonal(n: usize, pole: Vec<f64>, coeffs: Vec<f64>) -> PyResult<Self> {
        let z = ZonalExpansion::new(n, &pole, coeffs).map_err(err)?;
        Ok(PyHarmonic { inner: HarmonicFunction::extend_zonal(&z).map_err(err)? })
    }

    /// Extension of n = 3 data given by real spherical-harmonic coefficients `a[l][m + l]`.
    #[staticmethod]
    fn sph3(coeffs: Vec<Vec<f64>>) -> PyResult<Self> {
        let s = Sph3Coeffs::new(coeffs).map_err(err)?;
        Ok(PyHarmonic { inner: HarmonicFunction::extend_sph3(&s).map_err(err)? })
    }

    /// Extension of a boundary-data JSON document.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let b = BoundaryFile::parse(text).map_err(err)?;
        Ok(PyHarmonic { inner: HarmonicFunction::extend(&b).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn lmax(&self) -> usize {
        self.inner.lmax()
    }

    fn dilate(&self, delta: f64) -> PyResult<Self> {
        Ok(PyHarmonic { inner: self.inner.dilate(delta).map_err(err)? })
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&x).map_err(err)
    }

    /// `N^k u(x)` with `N = r d/dr`.
    fn apply_n(&self, x: Vec<f64>, k: usize) -> PyResult<f64> {
        self.inner.apply_n(&x, k).map_err(err)
    }

    /// `Delta_sigma^j u(x)`.
    fn apply_lap_sigma(&self, x: Vec<f64>, j: u32) -> PyResult<f64> {
        self.inner.apply_lap_sigma(&x, j).map_err(err)
    }

    fn grad_sq(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.grad_sq(&x, ModeOp::IDENTITY).map_err(err)
    }

    /// Invariant Laplacian applied mode by mode (zero for the function itself).
    fn apply_d(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.apply_d(&x, ModeOp::IDENTITY).map_err(err)
    }

    /// Finite-difference residual of the delta-interpolating operator at x.
    fn fd_residual(&self, x: Vec<f64>, h: f64, delta: f64) -> PyResult<f64> {
        let f = |y: &[f64]| self.inner.eval(y).unwrap_or(f64::NAN);
        harmonic::fd_d_residual(&f, &x, h, delta).map_err(err)
    }

    fn boundary_value(&self, xi: Vec<f64>) -> PyResult<f64> {
        self.inner.boundary_value(&xi).map_err(err)
    }

    /// Per-node values of a functional and its quasi-norms.
    #[pyo3(signature = (kind, alpha=0.5, ps=vec![1.0], grid_degree=16, ladder_depth=18, g_form="squared"))]
    fn functional(
        &self,
        kind: &str,
        alpha: f64,
        ps: Vec<f64>,
        grid_degree: usize,
        ladder_depth: usize,
        g_form: &str,
    ) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let kind = FunctionalKind::parse(kind, alpha).map_err(err)?;
        let g_form: GForm = g_form.parse().map_err(err)?;
        let u = &self.inner;
        let grid_kind = match u.pole() {
            Some(p) if u.n != 3 => GridKind::Zonal(p.to_vec()),
            _ => GridKind::Full,
        };
        let grid = sphere_quadrature(u.n, grid_degree, grid_kind).map_err(err)?;
        let fg = FunctionalGrid { depth: ladder_depth, g_form, ..FunctionalGrid::default() };
        let res = functionals::compute(&OpField::new(u, ModeOp::IDENTITY), kind, &grid, &fg).map_err(err)?;
        let norms = ps.iter().map(|&p| res.lp_quasinorm(p)).collect();
        Ok((res.values, norms))
    }
}

/// Runs one suite (or `all`) and returns the reports as a JSON array.
#[pyfunction]
#[pyo3(signature = (suite, seed=42, config=None))]
fn run_verify(py: Python<'_>, suite: &str, seed: u64, config: Option<&str>) -> PyResult<String> {
    let mut cfg = match config {
        Some(text) => RunConfig::from_json(text).map_err(err)?,
        None => RunConfig::default(),
    };
    cfg.seed = seed;
    let names = vec![suite.to_string()];
    let mut reports = py.detach(|| verify::run_suites(&names, &cfg)).map_err(err)?;
    for r in &mut reports {
        r.runtime_s = None;
    }
    let parts: Vec<String> = reports.iter().map(|r| r.to_json()).collect();
    Ok(format!("[{}]", parts.join(",")))
}

#[pymodule]
fn hyperharm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(poisson_euclid, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_hyp, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_series, m)?)?;
    m.add_function(wrap_pyfunction!(lemma3_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    m.add_class::<PyEtaKernel>()?;
    m.add_class::<PyHarmonic>()?;
    m.add("SUITES", verify::SUITES.to_vec())?;
    Ok(())
}
