//! Closed-form route for moments of the first coordinate.
//!
//! D has one eigen-polynomial per degree,
//!
//! ```text
//! p_n(x̃) = Σ_j (-N/4)^j n^(2j, falling) / (j! (N/2 + n - 2)^(j, falling)) x̃^(n-2j)
//! λ_n   = -n (1 + (n-2)/N)
//! ```
//!
//! so e^{tD/2} x̃ⁿ follows from expanding x̃ⁿ in the p's, scaling each by
//! e^{tλ/2}, and evaluating at x̃ = √N. Every coefficient is rational; the
//! transcendental factors e^{-t/2}, e^{t/(2N)} and √N are carried
//! symbolically in an [`ExpSum`] and only evaluated at the end.

use std::collections::BTreeMap;

use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;
use thiserror::Error;

use crate::combinat::{binomial, factorial, falling, gaussian_moment_factor, rising};
use crate::gaussian_limit::var_first;
use crate::heatop::{MomentResult, Route};
use crate::numeric::{ExtFloat, Precision, Real};
use crate::operators::{build_D, OperatorError, SphereConfig};
use crate::polyalg::{MultiIndex, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("falling factorial in the denominator vanishes for N = {n}, degree {degree}")]
    Degenerate { n: u32, degree: u32 },
    #[error("sphere parameter N = {0} is below 2")]
    NTooSmall(u32),
    #[error("eigenvalues are not pairwise distinct up to degree {0}")]
    RepeatedEigenvalue(u32),
    #[error("p_{degree} fails the eigen-relation for N = {n}")]
    EigenRelation { n: u32, degree: u32 },
    #[error("the eigen route needs each term to involve a single coordinate; got {0}")]
    MixedTerm(MultiIndex),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

fn q(num: i64, den: u64) -> RBig {
    RBig::from_parts(IBig::from(num), UBig::from(den))
}

fn half_n(n: u32) -> RBig {
    q(n as i64, 2)
}

/// λ_n = -n(1 + (n-2)/N).
pub fn eigenvalue(degree: u32, n: u32) -> RBig {
    let d = degree as i64;
    -(RBig::from(d) * (RBig::ONE + q(d - 2, n as u64)))
}

/// Falling factorial that must not vanish.
fn nonzero_falling(z: &RBig, j: u64, n: u32, degree: u32) -> Result<RBig, EigenError> {
    let f = falling(z, j);
    if f == RBig::ZERO {
        return Err(EigenError::Degenerate { n, degree });
    }
    Ok(f)
}

fn check_n(n: u32) -> Result<(), EigenError> {
    if n < 2 {
        return Err(EigenError::NTooSmall(n));
    }
    Ok(())
}

/// Monic eigen-polynomial of D.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPolynomial {
    pub degree: u32,
    pub n: u32,
    /// coeffs[j] multiplies x̃^(degree - 2j).
    pub coeffs: Vec<RBig>,
    pub eigenvalue: RBig,
}

impl EigenPolynomial {
    pub fn to_polynomial(&self) -> Polynomial {
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| (MultiIndex::new(vec![self.degree - 2 * j as u32]).expect("one variable"), c.clone()));
        Polynomial::from_terms(1, terms).expect("one variable")
    }
}

/// Builds p_n from the coefficient formula and checks D p_n = λ_n p_n
/// exactly before returning it.
pub fn eigen_poly(degree: u32, n: u32) -> Result<EigenPolynomial, EigenError> {
    check_n(n)?;
    let shift = half_n(n) + RBig::from(degree as i64 - 2);
    let quarter = q(-(n as i64), 4);
    let mut coeffs = Vec::with_capacity(degree as usize / 2 + 1);
    for j in 0..=(degree / 2) as u64 {
        let num = quarter.pow(j as isize) * falling(&RBig::from(degree), 2 * j);
        let den = RBig::from(factorial(j)) * nonzero_falling(&shift, j, n, degree)?;
        coeffs.push(num / den);
    }
    let p = EigenPolynomial { degree, n, coeffs, eigenvalue: eigenvalue(degree, n) };
    let d = build_D(n, degree as usize)?;
    let poly = p.to_polynomial();
    if d.apply(&poly)? != poly.scale(&p.eigenvalue) {
        return Err(EigenError::EigenRelation { n, degree });
    }
    Ok(p)
}

/// λ_0..λ_ℓ pairwise distinct; required before diagonalising D on degree <= ℓ.
pub fn check_distinct_eigenvalues(max_degree: u32, n: u32) -> Result<(), EigenError> {
    let values: Vec<RBig> = (0..=max_degree).map(|d| eigenvalue(d, n)).collect();
    for (i, a) in values.iter().enumerate() {
        if values[i + 1..].contains(a) {
            return Err(EigenError::RepeatedEigenvalue(max_degree));
        }
    }
    Ok(())
}

/// p_n(√N)/N^{n/2} computed three ways.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtNEvaluation {
    pub degree: u32,
    pub n: u32,
    /// Σ_j a_j N^{-j} from the coefficient formula.
    pub direct: RBig,
    /// ((N-1)/2)^(⌊n/2⌋, rising) / (N/2 + n - 2)^(⌊n/2⌋, falling)
    pub intermediate: RBig,
    /// (N-1)^(n, rising) / (2^n (N/2)^(n, rising)); disagrees with the other two
    /// for n >= 1 and is only reported.
    pub simplified: RBig,
}

impl SqrtNEvaluation {
    pub fn intermediate_matches(&self) -> bool {
        self.intermediate == self.direct
    }

    pub fn simplified_matches(&self) -> bool {
        self.simplified == self.direct
    }
}

pub fn eigen_poly_at_sqrt_n(degree: u32, n: u32) -> Result<SqrtNEvaluation, EigenError> {
    let p = eigen_poly(degree, n)?;
    let inv_n = q(1, n as u64);
    let direct = p.coeffs.iter().enumerate().fold(RBig::ZERO, |acc, (j, a)| acc + a * inv_n.pow(j as isize));
    let half = (degree / 2) as u64;
    let intermediate = rising(&q(n as i64 - 1, 2), half)
        / nonzero_falling(&(half_n(n) + RBig::from(degree as i64 - 2)), half, n, degree)?;
    let simplified = rising(&RBig::from(n as i64 - 1), degree as u64)
        / (RBig::from(UBig::ONE << degree as usize) * rising(&half_n(n), degree as u64));
    Ok(SqrtNEvaluation { degree, n, direct, intermediate, simplified })
}

/// p_{n+1}(√N) / (√N p_n(√N)), a rational number.
pub fn sqrt_n_ratio(degree: u32, n: u32) -> Result<RBig, EigenError> {
    let lo = eigen_poly_at_sqrt_n(degree, n)?.direct;
    let hi = eigen_poly_at_sqrt_n(degree + 1, n)?.direct;
    Ok(hi / lo)
}

/// (N + n - 2)/(N + 2n - 2): the value of [`sqrt_n_ratio`] for either parity.
pub fn sqrt_n_ratio_closed(degree: u32, n: u32) -> RBig {
    let (d, n) = (degree as i64, n as i64);
    RBig::from(n + d - 2) / RBig::from(n + 2 * d - 2)
}

/// Coefficients c_j with x̃ⁿ = Σ_j c_j p_{n-2j}.
pub fn monomial_in_eigenbasis(degree: u32, n: u32) -> Result<Vec<RBig>, EigenError> {
    check_n(n)?;
    let quarter = q(n as i64, 4);
    (0..=(degree / 2) as u64)
        .map(|j| {
            let z = half_n(n) + RBig::from(degree as i64 - j as i64 - 1);
            let den = RBig::from(factorial(j)) * nonzero_falling(&z, j, n, degree)?;
            Ok(quarter.pow(j as isize) * falling(&RBig::from(degree), 2 * j) / den)
        })
        .collect()
}

/// Key of one term c · e^{-s t/2} · e^{q t/(2N)} · N^{p/2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExpKey {
    pub s: i64,
    pub q: i64,
    pub p: i64,
}

/// Finite sum of rational multiples of e^{-s t/2} e^{q t/(2N)} N^{p/2}.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpSum {
    terms: BTreeMap<ExpKey, RBig>,
}

impl ExpSum {
    pub fn add(&mut self, key: ExpKey, c: RBig) {
        if c == RBig::ZERO {
            return;
        }
        let slot = self.terms.entry(key).or_insert(RBig::ZERO);
        *slot += c;
        if *slot == RBig::ZERO {
            self.terms.remove(&key);
        }
    }

    pub fn add_scaled(&mut self, other: &ExpSum, c: &RBig) {
        for (k, v) in &other.terms {
            self.add(*k, v * c);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExpKey, &RBig)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Value at (t, N) together with Σ |term|, the scale of any cancellation.
    pub fn evaluate<T: Real>(&self, t: f64, n: u32) -> (T, f64) {
        let t = T::from_f64(t);
        let root = T::from_int(n as i64).sqrt();
        let inv_2n = T::from_rational(&q(1, 2 * n as u64));
        let half = T::from_rational(&q(1, 2));
        let mut acc = T::zero();
        let mut magnitude = 0.0;
        for (key, c) in &self.terms {
            let exponent =
                -(T::from_int(key.s) * half.clone() * t.clone()) + T::from_int(key.q) * inv_2n.clone() * t.clone();
            let mut term = T::from_rational(c) * exponent.exp();
            let power = root.powi(key.p.unsigned_abs() as u32);
            term = if key.p >= 0 { term * power } else { term / power };
            magnitude += term.to_f64().abs();
            acc = acc + term;
        }
        (acc, magnitude)
    }
}

/// e^{tD/2}(x̃ - m)ⁿ at x̃ = √N as an [`ExpSum`]: the double sum over the
/// binomial index i and the eigenbasis index j.
pub fn moment_x1_terms(degree: u32, n: u32) -> Result<ExpSum, EigenError> {
    check_n(n)?;
    check_distinct_eigenvalues(degree, n)?;
    let mut sum = ExpSum::default();
    for i in 0..=degree {
        let rest = degree - i;
        let sign = if i % 2 == 0 { RBig::ONE } else { -RBig::ONE };
        let outer = sign * RBig::from(binomial(degree as u64, i as u64));
        let coeffs = monomial_in_eigenbasis(rest, n)?;
        for (j, c) in coeffs.iter().enumerate() {
            let r = rest - 2 * j as u32;
            let at_root = eigen_poly_at_sqrt_n(r, n)?.intermediate;
            let (i64_i, r64) = (i as i64, r as i64);
            let key = ExpKey { s: i64_i + r64, q: i64_i - r64 * (r64 - 2), p: i64_i + r64 };
            sum.add(key, &outer * c * at_root);
        }
    }
    Ok(sum)
}

fn evaluate_moment(sum: &ExpSum, cfg: &SphereConfig, precision: Precision) -> (f64, f64) {
    match precision {
        Precision::Double => {
            let (v, mag) = sum.evaluate::<f64>(cfg.t, cfg.n);
            (v, 16.0 * (sum.len() as f64 + 1.0) * f64::UNIT_ROUNDOFF * mag)
        }
        Precision::Extended => {
            let (v, mag) = sum.evaluate::<ExtFloat>(cfg.t, cfg.n);
            (
                v.to_f64(),
                16.0 * (sum.len() as f64 + 1.0) * ExtFloat::UNIT_ROUNDOFF * mag + f64::EPSILON * v.to_f64().abs(),
            )
        }
    }
}

/// Finite-N moment of x1ⁿ from the eigen expansion.
pub fn heat_moment_x1_eigen(degree: u32, cfg: &SphereConfig, precision: Precision) -> Result<MomentResult, EigenError> {
    let sum = moment_x1_terms(degree, cfg.n)?;
    let (value, error_bound) = evaluate_moment(&sum, cfg, precision);
    let mut alpha = vec![0u32; cfg.k.max(1)];
    alpha[0] = degree;
    Ok(MomentResult { value, route: Route::Eigen, error_bound, config: *cfg, monomial: MultiIndex::new(alpha).ok() })
}

/// e^{tE/2} xⱼⁿ at xⱼ = 0 for one coordinate j >= 2. On polynomials in a
/// single xⱼ, E has the same form as D, so the same eigen-polynomials apply,
/// evaluated at 0 and without any shift.
pub fn moment_tail_terms(degree: u32, n: u32) -> Result<ExpSum, EigenError> {
    check_n(n)?;
    check_distinct_eigenvalues(degree, n)?;
    let mut sum = ExpSum::default();
    for (j, c) in monomial_in_eigenbasis(degree, n)?.iter().enumerate() {
        let r = degree - 2 * j as u32;
        if r % 2 == 1 {
            continue;
        }
        let at_zero = eigen_poly(r, n)?.coeffs[r as usize / 2].clone();
        let r = r as i64;
        sum.add(ExpKey { s: r, q: -r * (r - 2), p: 0 }, c * at_zero);
    }
    Ok(sum)
}

/// Moment by the eigen route of a polynomial whose terms each involve one
/// coordinate only (x1ⁿ or xⱼⁿ); products of coordinates are rejected.
pub fn heat_moment_eigen(cfg: &SphereConfig, f: &Polynomial, precision: Precision) -> Result<MomentResult, EigenError> {
    let mut sum = ExpSum::default();
    for (alpha, c) in f.terms() {
        let used: Vec<u32> = alpha.exponents().iter().copied().filter(|&e| e > 0).collect();
        let terms = match used.as_slice() {
            [] => moment_x1_terms(0, cfg.n)?,
            [d] if alpha.get(0) > 0 => moment_x1_terms(*d, cfg.n)?,
            [d] => moment_tail_terms(*d, cfg.n)?,
            _ => return Err(EigenError::MixedTerm(alpha.clone())),
        };
        sum.add_scaled(&terms, c);
    }
    let single = match (f.term_count(), f.terms().next()) {
        (1, Some((alpha, c))) if *c == RBig::ONE => Some(alpha.clone()),
        _ => None,
    };
    let (value, error_bound) = evaluate_moment(&sum, cfg, precision);
    Ok(MomentResult { value, route: Route::Eigen, error_bound, config: *cfg, monomial: single })
}

/// N → ∞ limit of the x1ⁿ moment: (n-1)!! (1 - e^{-t} - t e^{-t})^{n/2} for
/// even n, zero for odd n.
pub fn limit_moment_x1(degree: u32, t: f64) -> f64 {
    if degree % 2 == 1 {
        return 0.0;
    }
    let factor = gaussian_moment_factor(degree as u64).to_f64().value();
    factor * var_first(t).powi(degree as i32 / 2)
}

/// t₀(h) = (N-1)^(h, rising) / (2^h (N/2)^(h+j, rising)), exactly.
pub fn t0_exact(j: u32, h: u32, n: u32) -> RBig {
    rising(&RBig::from(n as i64 - 1), h as u64)
        / (RBig::from(UBig::ONE << h as usize) * rising(&half_n(n), (h + j) as u64))
}

/// Polynomials u_0..u_L in h with t₀(h) = Σ_ℓ u_ℓ(h) / N^{ℓ+j}.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub j: u32,
    pub u: Vec<Polynomial>,
}

impl SeriesCoefficients {
    /// Partial sum Σ_{ℓ<=L} u_ℓ(h) / N^{ℓ+j}, exactly.
    pub fn partial_sum(&self, h: u32, n: u32, order: usize) -> RBig {
        let inv_n = q(1, n as u64);
        self.u
            .iter()
            .take(order + 1)
            .enumerate()
            .map(|(l, u)| {
                u.eval_exact(&[RBig::from(h)]).expect("one variable") * inv_n.pow((l + self.j as usize) as isize)
            })
            .fold(RBig::ZERO, |a, b| a + b)
    }

    /// Coefficient of h^{2ℓ} in u_ℓ.
    pub fn leading_coefficient(&self, l: usize) -> RBig {
        self.u[l].coeff(&MultiIndex::new(vec![2 * l as u32]).expect("one variable"))
    }
}

/// r(n_lo)/r(n_hi) for the remainder r(N) = t₀(h) - Σ_{ℓ<=L} u_ℓ(h)/N^{ℓ+j};
/// None when the truncation is already exact at both N.
pub fn t0_remainder_ratio(series: &SeriesCoefficients, h: u32, order: usize, n_lo: u32, n_hi: u32) -> Option<f64> {
    let r = |n: u32| t0_exact(series.j, h, n) - series.partial_sum(h, n, order);
    let (lo, hi) = (r(n_lo), r(n_hi));
    if hi == RBig::ZERO {
        return None;
    }
    Some((lo / hi).to_f64().value())
}

/// (-1)^ℓ 2^{j-ℓ} / ℓ!
pub fn expected_leading_coefficient(j: u32, l: u32) -> RBig {
    let sign = if l.is_multiple_of(2) { RBig::ONE } else { -RBig::ONE };
    let two = RBig::from(2u8);
    sign * two.pow(j as isize - l as isize) / RBig::from(factorial(l as u64))
}

/// Solves U(h+1) - U(h) = r(h) with U(0) = start.
fn antidifference(r: &Polynomial, start: RBig) -> Polynomial {
    let d = r.degree();
    let rc: Vec<RBig> = (0..=d).map(|k| r.coeff(&MultiIndex::new(vec![k as u32]).expect("one variable"))).collect();
    // b[i] multiplies h^i, i = 1..=d+1
    let mut b = vec![RBig::ZERO; d + 2];
    for k in (0..=d).rev() {
        let mut acc = rc[k].clone();
        for (i, bi) in b.iter().enumerate().skip(k + 2) {
            acc -= bi * RBig::from(binomial(i as u64, k as u64));
        }
        b[k + 1] = acc / RBig::from(k as u64 + 1);
    }
    b[0] = start;
    let terms = b.into_iter().enumerate().map(|(i, c)| (MultiIndex::new(vec![i as u32]).expect("one variable"), c));
    Polynomial::from_terms(1, terms).expect("one variable")
}

/// Substitutes h -> h + 1.
fn shift_by_one(p: &Polynomial) -> Polynomial {
    p.shift_first_variable(&-RBig::ONE)
}

/// Builds u_0..u_L from the recurrence
///
/// u_ℓ(h+1) - u_ℓ(h) = (h - 1) u_{ℓ-1}(h) - (2h + 2j) u_{ℓ-1}(h+1),
///
/// which is what (N + 2h + 2j) t₀(h+1) = (N + h - 1) t₀(h) gives order by
/// order in 1/N, with u_ℓ(0) read off the expansion of t₀(0) = 1/(N/2)^(j, rising).
pub fn t0_series(j: u32, order: usize) -> SeriesCoefficients {
    let h = Polynomial::variable(1, 0);
    let one = Polynomial::one(1);
    let h_minus_one = &h - &one;
    let two_h_plus_2j = &h.scale(&RBig::from(2u8)) + &Polynomial::constant(1, RBig::from(2 * j as u64));
    let starts = t0_initial_coefficients(j, order);
    let mut u: Vec<Polynomial> = Vec::with_capacity(order + 1);
    for (l, start) in starts.into_iter().enumerate() {
        let rhs = match l {
            0 => Polynomial::zero(1),
            _ => {
                let prev = &u[l - 1];
                &(&h_minus_one * prev) - &(&two_h_plus_2j * &shift_by_one(prev))
            }
        };
        u.push(antidifference(&rhs, start));
    }
    SeriesCoefficients { j, u }
}

/// Coefficients of N^{-(ℓ+j)} in 1/(N/2)^(j, rising) = 2^j N^{-j} Π_{i<j} 1/(1 + 2i/N).
fn t0_initial_coefficients(j: u32, order: usize) -> Vec<RBig> {
    let mut series = vec![RBig::ZERO; order + 1];
    series[0] = RBig::from(UBig::ONE << j as usize);
    for i in 1..j as i64 {
        let x = RBig::from(-2 * i);
        let factor: Vec<RBig> = (0..=order).map(|r| x.pow(r as isize)).collect();
        let mut next = vec![RBig::ZERO; order + 1];
        for (a, sa) in series.iter().enumerate() {
            for (b, fb) in factor.iter().enumerate().take(order + 1 - a) {
                next[a + b] += sa * fb;
            }
        }
        series = next;
    }
    series
}

/// The recurrence as printed alongside the t₀ lemma,
/// (N + 2h + j + 2) t₀(h+1) - (N + h) t₀(h); nonzero in general.
pub fn printed_recurrence_residual(j: u32, h: u32, n: u32) -> RBig {
    let nn = RBig::from(n);
    (&nn + RBig::from(2 * h as u64 + j as u64 + 2)) * t0_exact(j, h + 1, n) - (&nn + RBig::from(h)) * t0_exact(j, h, n)
}

/// (N + 2h + 2j) t₀(h+1) - (N + h - 1) t₀(h); identically zero.
pub fn recurrence_residual(j: u32, h: u32, n: u32) -> RBig {
    let nn = RBig::from(n);
    (&nn + RBig::from(2 * (h + j) as u64)) * t0_exact(j, h + 1, n)
        - (&nn + RBig::from(h as i64 - 1)) * t0_exact(j, h, n)
}
