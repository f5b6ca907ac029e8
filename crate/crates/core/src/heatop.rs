//! The heat operator on the shifted sphere, H̃f = (exp{(t/2)Δ_S} f)(p̃),
//! computed from the exact Laplacian matrix by a truncated power series with
//! a proven tail bound, or by a scaling-and-squaring matrix exponential.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::linalg::{expm, DenseMatrix};
use crate::numeric::{ExtFloat, Precision, Real};
use crate::operators::{
    basis, build_euler, build_second_derivatives, build_sphere_laplacian, OperatorError, OperatorMatrix, SphereConfig,
};
use crate::polyalg::{MultiIndex, PolyError, Polynomial};

/// Upper limit on series terms before giving up.
pub const MAX_SERIES_TERMS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeatError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("series did not reach tolerance {tol:e} within {terms} terms (tail bound {bound:e})")]
    SeriesDidNotConverge { terms: usize, bound: f64, tol: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("polynomial degree {degree} exceeds the degree cap {cap}")]
    DegreeTooHigh { degree: usize, cap: usize },
    #[error("polynomial uses {got} variables but the configuration keeps {k}")]
    TooManyVariables { got: usize, k: usize },
    #[error("route {0} is not available here")]
    UnsupportedRoute(Route),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Route {
    Series,
    Matexp,
    Eigen,
    MonteCarlo,
    ClosedForm,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Series => "series",
            Route::Matexp => "matexp",
            Route::Eigen => "eigen",
            Route::MonteCarlo => "mc",
            Route::ClosedForm => "closed_form",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Route {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "series" => Ok(Route::Series),
            "matexp" => Ok(Route::Matexp),
            "eigen" => Ok(Route::Eigen),
            "mc" | "montecarlo" => Ok(Route::MonteCarlo),
            "closed_form" => Ok(Route::ClosedForm),
            other => Err(format!("unknown route '{other}'")),
        }
    }
}

/// A heat-kernel moment together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentResult {
    pub value: f64,
    pub route: Route,
    /// Tail bound plus rounding estimate for the deterministic routes,
    /// standard error for Monte Carlo.
    pub error_bound: f64,
    pub config: SphereConfig,
    /// Set when the integrand is a single monomial.
    pub monomial: Option<MultiIndex>,
}

/// Partial sum of Σ ((t/2) op)^n f / n! on a coefficient vector.
#[derive(Debug, Clone)]
pub struct SeriesOutcome<T> {
    pub coeffs: Vec<T>,
    /// Proven bound on the 1-norm of the omitted tail.
    pub tail_bound: f64,
    pub terms: usize,
    /// Coordinate-wise sum of |term| over all terms; a rounding scale.
    pub abs_sum: Vec<f64>,
}

/// Applies the truncated exponential series to `f` until the geometric tail
/// majorant ‖f‖₁ Σ_{n>n₀} a^n/n!, a = (t/2)‖op‖₁, drops below `tol`.
pub fn heat_apply_series_vec<T: Real>(
    op: &DenseMatrix<T>,
    t: f64,
    f: Vec<T>,
    tol: f64,
) -> Result<SeriesOutcome<T>, HeatError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(HeatError::BadTolerance(tol));
    }
    let a = 0.5 * t * op.norm1();
    let f_norm: f64 = f.iter().map(|x| x.to_f64().abs()).sum();
    let half_t = T::from_f64(0.5 * t);
    let mut abs_sum: Vec<f64> = f.iter().map(|x| x.to_f64().abs()).collect();
    let mut sum = f.clone();
    let mut term = f;
    // power = a^n / n! for the last term included
    let mut power = 1.0f64;
    let mut n = 0usize;
    loop {
        let next = power * a / (n + 1) as f64;
        let tail = if a == 0.0 || f_norm == 0.0 {
            0.0
        } else if ((n + 2) as f64) > a {
            f_norm * next / (1.0 - a / (n + 2) as f64)
        } else {
            f64::INFINITY
        };
        if tail <= tol {
            return Ok(SeriesOutcome { coeffs: sum, tail_bound: tail, terms: n + 1, abs_sum });
        }
        if n + 1 >= MAX_SERIES_TERMS {
            return Err(HeatError::SeriesDidNotConverge { terms: n + 1, bound: tail, tol });
        }
        n += 1;
        let scale = half_t.clone() / T::from_int(n as i64);
        term = op.matvec(&term).into_iter().map(|x| x * scale.clone()).collect();
        for ((s, x), acc) in sum.iter_mut().zip(&term).zip(abs_sum.iter_mut()) {
            *s = s.clone() + x.clone();
            *acc += x.to_f64().abs();
        }
        power = next;
    }
}

/// Series route on an exact polynomial, in double precision.
pub fn heat_apply_series(
    op: &OperatorMatrix,
    t: f64,
    f: &Polynomial,
    tol: f64,
) -> Result<SeriesOutcome<f64>, HeatError> {
    let coeffs: Vec<f64> =
        f.widen(op.indexer().vars()).to_coefficients(op.indexer())?.iter().map(f64::from_rational).collect();
    heat_apply_series_vec(&op.to_dense::<f64>(), t, coeffs, tol)
}

/// exp((t/2) op) as a dense matrix in the precision of `T`.
pub fn heat_apply_matexp<T: Real>(op: &OperatorMatrix, t: f64) -> DenseMatrix<T> {
    expm(&op.to_dense::<T>().scale(&T::from_f64(0.5 * t)))
}

/// Values of the basis monomials at the north pole (x̃ = √N, y = 0).
fn north_pole_values<T: Real>(op: &OperatorMatrix, cfg: &SphereConfig) -> Vec<T> {
    let root = cfg.north_pole_in::<T>();
    op.indexer()
        .monomials()
        .iter()
        .map(|alpha| if alpha.tail_degree() == 0 { root.powi(alpha.get(0)) } else { T::zero() })
        .collect()
}

fn single_monomial(f: &Polynomial) -> Option<MultiIndex> {
    let mut terms = f.terms();
    match (terms.next(), terms.next()) {
        (Some((alpha, c)), None) if *c == dashu_ratio::RBig::ONE => Some(alpha.clone()),
        _ => None,
    }
}

/// Absolute tolerance of the series route in double precision.
pub const SERIES_TOL: f64 = 1e-14;
/// Absolute tolerance of the series route in extended precision.
pub const EXTENDED_SERIES_TOL: f64 = 1e-40;

/// Finite-N heat-kernel moment of a polynomial in the unshifted coordinates
/// (x1, ..., xk), using the full sphere Laplacian.
pub fn heat_moment(
    cfg: &SphereConfig,
    f: &Polynomial,
    route: Route,
    precision: Precision,
) -> Result<MomentResult, HeatError> {
    let degree = check_polynomial(cfg, f)?;
    let op = build_sphere_laplacian(cfg, degree)?;
    heat_moment_with(cfg, &op, f, route, precision)
}

pub(crate) fn check_polynomial(cfg: &SphereConfig, f: &Polynomial) -> Result<usize, HeatError> {
    if f.vars() > cfg.k {
        return Err(HeatError::TooManyVariables { got: f.vars(), k: cfg.k });
    }
    let degree = f.degree();
    if degree > cfg.degree {
        return Err(HeatError::DegreeTooHigh { degree, cap: cfg.degree });
    }
    Ok(degree)
}

/// Moment with a caller-supplied operator on the (x̃, y) basis, e.g. the
/// decoupled D + E.
pub fn heat_moment_with(
    cfg: &SphereConfig,
    op: &OperatorMatrix,
    f: &Polynomial,
    route: Route,
    precision: Precision,
) -> Result<MomentResult, HeatError> {
    let (value, error_bound) = match precision {
        Precision::Double => moment_in::<f64>(cfg, op, f, route)?,
        Precision::Extended => moment_in::<ExtFloat>(cfg, op, f, route)?,
    };
    Ok(MomentResult { value, route, error_bound, config: *cfg, monomial: single_monomial(f) })
}

fn moment_in<T: Real>(
    cfg: &SphereConfig,
    op: &OperatorMatrix,
    f: &Polynomial,
    route: Route,
) -> Result<(f64, f64), HeatError> {
    let indexer = op.indexer();
    let f = f.widen(indexer.vars());
    let g = f.shift_first_variable_real(&cfg.m_in::<T>(), indexer)?;
    let ev = north_pole_values::<T>(op, cfg);
    let ev_abs: Vec<f64> = ev.iter().map(|x| x.to_f64().abs()).collect();
    let ev_max = ev_abs.iter().copied().fold(0.0, f64::max);
    let dim = indexer.dimension() as f64;
    let u = T::UNIT_ROUNDOFF;
    match route {
        Route::Series => {
            let target = if u < 1e-30 { EXTENDED_SERIES_TOL } else { SERIES_TOL };
            let tol = target / ev_max.max(1.0);
            let out = heat_apply_series_vec(&op.to_dense::<T>(), cfg.t, g, tol)?;
            let value = dot(&ev, &out.coeffs);
            let magnitude: f64 = ev_abs.iter().zip(&out.abs_sum).map(|(e, s)| e * s).sum();
            let rounding = 16.0 * (out.terms as f64 + dim) * u * magnitude;
            Ok((value.to_f64(), out.tail_bound * ev_max + rounding))
        }
        Route::Matexp => {
            let m = heat_apply_matexp::<T>(op, cfg.t);
            let v = m.matvec(&g);
            let value = dot(&ev, &v);
            let g_abs: Vec<f64> = g.iter().map(|x| x.to_f64().abs()).collect();
            let m_abs = m.to_f64();
            let mut magnitude = 0.0;
            for (i, e) in ev_abs.iter().enumerate() {
                if *e == 0.0 {
                    continue;
                }
                for (j, gj) in g_abs.iter().enumerate() {
                    magnitude += e * m_abs.get(i, j).abs() * gj;
                }
            }
            Ok((value.to_f64(), 64.0 * dim * u * magnitude.max(1.0)))
        }
        other => Err(HeatError::UnsupportedRoute(other)),
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Defect of the splitting exp(X + Y) = exp(X) exp(((1 - e^{-t})/t) Y) for
/// X = -(t/2) y·∂y and Y = (t/2) Σ∂j² over x2..xk, measured in the induced
/// 1-norm. The identity holds because [X, Y] = tY.
pub fn bch_defect(k: usize, degree: usize, t: f64) -> Result<f64, HeatError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(HeatError::Operator(OperatorError::BadTime(t)));
    }
    let indexer = basis(k, degree)?;
    let euler = build_euler(&indexer, 1..k)?.to_dense::<f64>();
    let lap = build_second_derivatives(&indexer, 1..k)?.to_dense::<f64>();
    let x = euler.scale(&(-0.5 * t));
    let y = lap.scale(&(0.5 * t));
    let lhs = expm(&x.add(&y));
    let rhs = expm(&x).matmul(&expm(&y.scale(&(-(-t).exp_m1() / t))));
    Ok(lhs.sub(&rhs).norm1())
}
