//! Python bindings: moments by every route, the Gaussian limit, the
//! eigenpolynomials, Monte Carlo, convergence studies and the self-checks.

use dashu_ratio::RBig;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sphereheat::eigenmethod::eigen_poly;
use sphereheat::gaussian_limit::{self, LimitKernelParams};
use sphereheat::heatop::Route;
use sphereheat::numeric::{Precision, Real};
use sphereheat::operators::SphereConfig;
use sphereheat::pde_appendix::{spectral_evolve_extrapolated, Grid, ParabolicVariant};
use sphereheat::polyalg::{MultiIndex, Polynomial};
use sphereheat::sphere_mc::{self, McConfig};
use sphereheat::study::{self, McSettings, StudySpec};
use sphereheat::verify::{run_verify, Suite};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn index(exponents: Vec<u32>) -> PyResult<MultiIndex> {
    MultiIndex::new(exponents).map_err(value_err)
}

/// A finite-N moment and its error bound (standard error for Monte Carlo).
#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct Moment {
    value: f64,
    error_bound: f64,
    route: String,
}

#[pymethods]
impl Moment {
    fn __repr__(&self) -> String {
        format!("Moment(value={:e}, error_bound={:e}, route='{}')", self.value, self.error_bound, self.route)
    }
}

/// E[x^alpha] under the sphere heat kernel started at the north pole.
#[pyfunction]
#[pyo3(signature = (n, t, exponents, route = "matexp", precision = "double", paths = 100_000, step = 1e-3, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn heat_moment(
    n: u32,
    t: f64,
    exponents: Vec<u32>,
    route: &str,
    precision: &str,
    paths: usize,
    step: f64,
    seed: u64,
) -> PyResult<Moment> {
    let alpha = index(exponents)?;
    let route: Route = route.parse().map_err(value_err)?;
    let precision: Precision = precision.parse().map_err(value_err)?;
    let cfg = SphereConfig::new(n, t, alpha.vars(), alpha.degree()).map_err(value_err)?;
    let f = Polynomial::monomial(alpha, RBig::ONE);
    let r =
        study::compute_moment(&cfg, &f, route, precision, &McSettings { paths, step, seed }).map_err(runtime_err)?;
    Ok(Moment { value: r.value, error_bound: r.error_bound, route: r.route.name().to_string() })
}

/// E[x^alpha] under the N → ∞ Gaussian kernel.
#[pyfunction]
fn gaussian_moment(exponents: Vec<u32>, t: f64) -> PyResult<f64> {
    gaussian_limit::gaussian_moment(&index(exponents)?, t).map_err(value_err)
}

/// Density of the limit kernel at x (len(x) = k).
#[pyfunction]
fn limit_density(t: f64, x: Vec<f64>) -> PyResult<f64> {
    let params = LimitKernelParams::new(t, x.len()).map_err(value_err)?;
    gaussian_limit::limit_density(&params, &x).map_err(value_err)
}

/// (coefficients, eigenvalue) of the degree-n eigenpolynomial of D; the
/// coefficient list runs over x̃^n, x̃^(n-2), ... as exact fraction strings.
#[pyfunction]
fn eigen_polynomial(degree: u32, n: u32) -> PyResult<(Vec<String>, String)> {
    let p = eigen_poly(degree, n).map_err(value_err)?;
    Ok((p.coeffs.iter().map(ToString::to_string).collect(), p.eigenvalue.to_string()))
}

/// Same as `eigen_polynomial` with float coefficients.
#[pyfunction]
fn eigen_polynomial_f64(degree: u32, n: u32) -> PyResult<(Vec<f64>, f64)> {
    let p = eigen_poly(degree, n).map_err(value_err)?;
    Ok((p.coeffs.iter().map(f64::from_rational).collect(), f64::from_rational(&p.eigenvalue)))
}

/// Monte Carlo (mean, stderr) for each monomial; with `coupled`, the
/// estimate at step h is returned alongside its bias allowance instead.
#[pyfunction]
#[pyo3(signature = (n, t, monomials, paths = 100_000, step = 1e-3, seed = 0, coupled = false))]
fn mc_moments(
    n: u32,
    t: f64,
    monomials: Vec<Vec<u32>>,
    paths: usize,
    step: f64,
    seed: u64,
    coupled: bool,
) -> PyResult<Vec<(f64, f64)>> {
    let alphas = monomials.into_iter().map(index).collect::<PyResult<Vec<_>>>()?;
    let k = alphas.iter().map(MultiIndex::vars).max().unwrap_or(1);
    let degree = alphas.iter().map(MultiIndex::degree).max().unwrap_or(0);
    let cfg = SphereConfig::new(n, t, k, degree).map_err(value_err)?;
    let alphas: Vec<MultiIndex> = alphas.iter().map(|a| a.widen(k)).collect();
    let mc = McConfig::new(cfg, step, paths, seed).map_err(value_err)?;
    if coupled {
        let est = sphere_mc::mc_moments_coupled(&mc, &alphas).map_err(runtime_err)?;
        Ok(est.iter().map(|e| (e.coarse.mean, 3.0 * e.coarse.stderr + e.bias_allowance())).collect())
    } else {
        let est = sphere_mc::mc_moments(&mc, &alphas).map_err(runtime_err)?;
        Ok(est.iter().map(|e| (e.mean, e.stderr)).collect())
    }
}

/// Convergence sweep; returns the CSV text.
#[pyfunction]
#[pyo3(signature = (monomials, n_values, t_values, routes = vec!["matexp".to_string()], precision = "double"))]
fn run_study(
    monomials: Vec<Vec<u32>>,
    n_values: Vec<u32>,
    t_values: Vec<f64>,
    routes: Vec<String>,
    precision: &str,
) -> PyResult<String> {
    let spec = StudySpec {
        monomials: monomials.into_iter().map(index).collect::<PyResult<_>>()?,
        n_values,
        t_values,
        routes: routes.iter().map(|r| r.parse()).collect::<Result<_, _>>().map_err(value_err)?,
        precision: precision.parse().map_err(value_err)?,
        mc: McSettings::default(),
        out: None,
    };
    let out = study::run_study(&spec).map_err(|e| if e.is_usage() { value_err(e) } else { runtime_err(e) })?;
    out.to_csv().map_err(runtime_err)
}

/// Runs a self-check suite ("operators", "eigen", "gaussian", "pde", "mc"
/// or "all"); returns (passed, report).
#[pyfunction]
#[pyo3(signature = (suite = "all"))]
fn verify(py: Python<'_>, suite: &str) -> PyResult<(bool, String)> {
    let suite: Suite = suite.parse().map_err(value_err)?;
    let report = py.detach(|| run_verify(suite));
    Ok((report.passed(), report.to_string()))
}

/// Max deviation of the extrapolated spectral solution from the closed form.
#[pyfunction]
#[pyo3(signature = (t, first_coordinate = true, eps = 1e-3))]
fn pde_deviation(t: f64, first_coordinate: bool, eps: f64) -> PyResult<f64> {
    let v = if first_coordinate { ParabolicVariant::FirstCoordinate } else { ParabolicVariant::OtherCoordinate };
    let u = spectral_evolve_extrapolated(v, eps, t, &Grid::default()).map_err(runtime_err)?;
    Ok(u.max_deviation(|x| v.closed_form(t, x)))
}

#[pymodule]
fn sphereheat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Moment>()?;
    m.add_function(wrap_pyfunction!(heat_moment, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_moment, m)?)?;
    m.add_function(wrap_pyfunction!(limit_density, m)?)?;
    m.add_function(wrap_pyfunction!(eigen_polynomial, m)?)?;
    m.add_function(wrap_pyfunction!(eigen_polynomial_f64, m)?)?;
    m.add_function(wrap_pyfunction!(mc_moments, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(pde_deviation, m)?)?;
    Ok(())
}
