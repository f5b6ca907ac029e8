//! Exact matrices of the shifted-sphere Laplacian and its pieces on the
//! graded monomial basis.
//!
//! With x̃ the first coordinate measured from the sphere's centre and
//! y = (x2, ..., xk), the Laplacian of the sphere of radius √N acting on
//! polynomials in (x̃, y) splits as
//!
//! ```text
//! Δ_S = D + E - (2/N) (x̃∂x̃)(y·∂y)
//! D   = ∂x̃² - (1 - 2/N) x̃∂x̃ - (1/N) (x̃∂x̃)²
//! E   = Σ ∂j² - (1 - 2/N) y·∂y - (1/N) (y·∂y)²
//! ```
//!
//! None of these raise the degree, so each restricts to a square matrix on
//! polynomials of degree <= ℓ. Columns are built by applying the generator
//! rules to one basis monomial at a time.

use std::fmt;
use std::sync::Arc;

use dashu_int::{IBig, UBig};
use dashu_ratio::RBig;
use thiserror::Error;

use crate::linalg::DenseMatrix;
use crate::numeric::Real;
use crate::polyalg::{BasisIndexer, MultiIndex, PolyError, Polynomial};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("sphere parameter N = {n} must be at least {min}")]
    NTooSmall { n: u32, min: u32 },
    #[error("need N > k (got N = {n}, k = {k})")]
    TooManyVariables { n: u32, k: usize },
    #[error("time must be finite and nonnegative, got {0}")]
    BadTime(f64),
    #[error("operator dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Parameters of a heat-kernel computation: sphere parameter N, time t,
/// number of retained coordinates k and degree cap ℓ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereConfig {
    pub n: u32,
    pub t: f64,
    pub k: usize,
    pub degree: usize,
}

impl SphereConfig {
    pub fn new(n: u32, t: f64, k: usize, degree: usize) -> Result<Self, OperatorError> {
        if n < 2 {
            return Err(OperatorError::NTooSmall { n, min: 2 });
        }
        if k == 0 {
            return Err(PolyError::NoVariables.into());
        }
        if (n as usize) <= k {
            return Err(OperatorError::TooManyVariables { n, k });
        }
        if !t.is_finite() || t < 0.0 {
            return Err(OperatorError::BadTime(t));
        }
        Ok(SphereConfig { n, t, k, degree })
    }

    /// Mean of the first centred coordinate, m(t,N) = √N exp((t/2)(1/N - 1)).
    pub fn m(&self) -> f64 {
        self.m_in::<f64>()
    }

    pub fn m_in<T: Real>(&self) -> T {
        let rate = RBig::from_parts(IBig::from(1i64 - self.n as i64), UBig::from(2 * self.n as u64));
        let exponent = T::from_rational(&rate) * T::from_f64(self.t);
        self.north_pole_in::<T>() * exponent.exp()
    }

    /// x̃-coordinate of the north pole, √N.
    pub fn north_pole(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    pub fn north_pole_in<T: Real>(&self) -> T {
        T::from_int(self.n as i64).sqrt()
    }

    pub fn with_t(&self, t: f64) -> Self {
        SphereConfig { t, ..*self }
    }

    pub fn with_n(&self, n: u32) -> Self {
        SphereConfig { n, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorParams {
    /// Sphere parameter, absent for N-independent operators.
    pub n: Option<u32>,
    pub vars: usize,
    pub degree: usize,
}

/// A linear map on polynomials of degree <= ℓ in k variables, stored as an
/// exact rational matrix. Column j holds the image of basis monomial j.
#[derive(Clone)]
pub struct OperatorMatrix {
    entries: Vec<RBig>,
    indexer: Arc<BasisIndexer>,
    label: String,
    params: OperatorParams,
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorMatrix")
            .field("label", &self.label)
            .field("params", &self.params)
            .field("dim", &self.dim())
            .finish()
    }
}

impl PartialEq for OperatorMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.indexer.vars() == other.indexer.vars() && self.entries == other.entries
    }
}

type Terms = Vec<(MultiIndex, RBig)>;

impl OperatorMatrix {
    /// Builds the matrix whose column j is `action` applied to monomial j.
    pub fn from_action<F>(
        indexer: Arc<BasisIndexer>,
        label: &str,
        n: Option<u32>,
        action: F,
    ) -> Result<Self, OperatorError>
    where
        F: Fn(&MultiIndex) -> Terms,
    {
        let dim = indexer.dimension();
        let mut entries = vec![RBig::ZERO; dim * dim];
        for (j, alpha) in indexer.monomials().iter().enumerate() {
            for (beta, c) in action(alpha) {
                let i = indexer.monomial_index(&beta)?;
                entries[i * dim + j] += c;
            }
        }
        let params = OperatorParams { n, vars: indexer.vars(), degree: indexer.max_degree() };
        Ok(OperatorMatrix { entries, indexer, label: label.to_string(), params })
    }

    pub fn zero(indexer: Arc<BasisIndexer>, label: &str) -> Self {
        let dim = indexer.dimension();
        let params = OperatorParams { n: None, vars: indexer.vars(), degree: indexer.max_degree() };
        OperatorMatrix { entries: vec![RBig::ZERO; dim * dim], indexer, label: label.to_string(), params }
    }

    pub fn dim(&self) -> usize {
        self.indexer.dimension()
    }

    pub fn indexer(&self) -> &Arc<BasisIndexer> {
        &self.indexer
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> OperatorParams {
        self.params
    }

    pub fn entry(&self, i: usize, j: usize) -> &RBig {
        &self.entries[i * self.dim() + j]
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    /// Image of basis monomial j as a polynomial.
    pub fn column(&self, j: usize) -> Polynomial {
        let col: Vec<RBig> = (0..self.dim()).map(|i| self.entry(i, j).clone()).collect();
        Polynomial::from_coefficients(&self.indexer, &col)
    }

    pub fn apply(&self, p: &Polynomial) -> Result<Polynomial, OperatorError> {
        let v = p.widen(self.indexer.vars()).to_coefficients(&self.indexer)?;
        let dim = self.dim();
        let mut out = vec![RBig::ZERO; dim];
        for (j, c) in v.iter().enumerate() {
            if *c == RBig::ZERO {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                let a = &self.entries[i * dim + j];
                if *a != RBig::ZERO {
                    *o += a * c;
                }
            }
        }
        Ok(Polynomial::from_coefficients(&self.indexer, &out))
    }

    fn check_same_basis(&self, other: &Self) -> Result<(), OperatorError> {
        if self.dim() != other.dim() || self.indexer.vars() != other.indexer.vars() {
            return Err(OperatorError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check_same_basis(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Ok(self.derived(entries, &format!("({} + {})", self.label, other.label)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check_same_basis(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Ok(self.derived(entries, &format!("({} - {})", self.label, other.label)))
    }

    pub fn scale(&self, c: &RBig) -> Self {
        let entries = self.entries.iter().map(|a| a * c).collect();
        self.derived(entries, &format!("{c}*{}", self.label))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check_same_basis(other)?;
        let n = self.dim();
        let mut entries = vec![RBig::ZERO; n * n];
        for i in 0..n {
            for l in 0..n {
                let a = &self.entries[i * n + l];
                if *a == RBig::ZERO {
                    continue;
                }
                for j in 0..n {
                    let b = &other.entries[l * n + j];
                    if *b != RBig::ZERO {
                        entries[i * n + j] += a * b;
                    }
                }
            }
        }
        Ok(self.derived(entries, &format!("{}·{}", self.label, other.label)))
    }

    fn derived(&self, entries: Vec<RBig>, label: &str) -> Self {
        OperatorMatrix { entries, indexer: self.indexer.clone(), label: label.to_string(), params: self.params }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|a| *a == RBig::ZERO)
    }

    /// True when no column has a component of higher degree than its monomial.
    pub fn is_degree_nonincreasing(&self) -> bool {
        let monos = self.indexer.monomials();
        (0..self.dim())
            .all(|j| (0..self.dim()).all(|i| *self.entry(i, j) == RBig::ZERO || monos[i].degree() <= monos[j].degree()))
    }

    /// Square block of the matrix on the monomials of exact degree d.
    pub fn degree_block(&self, d: usize) -> Vec<Vec<RBig>> {
        let range = self.indexer.degree_range(d);
        range.clone().map(|i| range.clone().map(|j| self.entry(i, j).clone()).collect()).collect()
    }

    pub fn to_dense<T: Real>(&self) -> DenseMatrix<T> {
        DenseMatrix::from_rows(self.dim(), self.entries.iter().map(T::from_rational).collect())
    }

    /// Largest absolute entry of self - other, as f64.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, OperatorError> {
        self.check_same_basis(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).to_f64().value().abs()).fold(0.0, f64::max))
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        let n = self.dim();
        (0..n).map(|j| (0..n).map(|i| self.entries[i * n + j].to_f64().value().abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// AB - BA, exactly.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix, OperatorError> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    Ok(ab.sub(&ba)?.with_label(&format!("[{}, {}]", a.label, b.label)))
}

fn inv_n(n: u32) -> RBig {
    RBig::from_parts(IBig::ONE, UBig::from(n))
}

fn second_derivative_terms(alpha: &MultiIndex, vars: impl Iterator<Item = usize>) -> Terms {
    vars.filter_map(|i| {
        let e = alpha.get(i);
        (e >= 2).then(|| (alpha.with(i, e - 2), RBig::from(e as u64 * (e as u64 - 1))))
    })
    .collect()
}

/// -(1 - 2/N) s - (1/N) s² for Euler eigenvalue s.
fn radial_part(n: u32, s: usize) -> RBig {
    let s = RBig::from(s);
    let one_minus = RBig::ONE - RBig::from(2u8) * inv_n(n);
    -(one_minus * &s) - inv_n(n) * &s * &s
}

/// Basis for `vars` variables up to degree ℓ, shareable between operators.
pub fn basis(vars: usize, degree: usize) -> Result<Arc<BasisIndexer>, OperatorError> {
    Ok(Arc::new(BasisIndexer::new(vars, degree)?))
}

fn check_n(n: u32) -> Result<(), OperatorError> {
    if n < 2 {
        return Err(OperatorError::NTooSmall { n, min: 2 });
    }
    Ok(())
}

/// D on polynomials in the single variable x̃ of degree <= ℓ.
#[allow(non_snake_case)]
pub fn build_D(n: u32, degree: usize) -> Result<OperatorMatrix, OperatorError> {
    build_d_on(n, &basis(1, degree)?)
}

/// D acting on the first variable of a joint basis.
pub fn build_d_on(n: u32, indexer: &Arc<BasisIndexer>) -> Result<OperatorMatrix, OperatorError> {
    check_n(n)?;
    OperatorMatrix::from_action(indexer.clone(), "D", Some(n), |alpha| {
        let mut terms = second_derivative_terms(alpha, 0..1);
        terms.push((alpha.clone(), radial_part(n, alpha.get(0) as usize)));
        terms
    })
}

/// E on the joint basis of (x̃, x2, ..., xk), acting on x2..xk. For k = 1
/// there are no such variables and E is the zero operator.
#[allow(non_snake_case)]
pub fn build_E(n: u32, k: usize, degree: usize) -> Result<OperatorMatrix, OperatorError> {
    build_e_on(n, &basis(k, degree)?)
}

pub fn build_e_on(n: u32, indexer: &Arc<BasisIndexer>) -> Result<OperatorMatrix, OperatorError> {
    check_n(n)?;
    let k = indexer.vars();
    if k >= 2 && (n as usize) <= k {
        return Err(OperatorError::TooManyVariables { n, k });
    }
    OperatorMatrix::from_action(indexer.clone(), "E", Some(n), |alpha| {
        if k < 2 {
            return Vec::new();
        }
        let mut terms = second_derivative_terms(alpha, 1..k);
        terms.push((alpha.clone(), radial_part(n, alpha.tail_degree())));
        terms
    })
}

/// Euler operator Σ_{i in vars} xi ∂i.
pub fn build_euler(indexer: &Arc<BasisIndexer>, vars: std::ops::Range<usize>) -> Result<OperatorMatrix, OperatorError> {
    let label = if vars.start == 0 && vars.end == 1 { "x̃∂x̃" } else { "y·∂y" };
    OperatorMatrix::from_action(indexer.clone(), label, None, |alpha| {
        let s: u32 = vars.clone().map(|i| alpha.get(i)).sum();
        vec![(alpha.clone(), RBig::from(s))]
    })
}

/// Σ_{i in vars} ∂i².
pub fn build_second_derivatives(
    indexer: &Arc<BasisIndexer>,
    vars: std::ops::Range<usize>,
) -> Result<OperatorMatrix, OperatorError> {
    OperatorMatrix::from_action(indexer.clone(), "Σ∂²", None, |alpha| second_derivative_terms(alpha, vars.clone()))
}

/// The coupling term -(2/N)(x̃∂x̃)(y·∂y), formed as a product of the two
/// exact Euler matrices.
pub fn build_mixed_on(n: u32, indexer: &Arc<BasisIndexer>) -> Result<OperatorMatrix, OperatorError> {
    check_n(n)?;
    let k = indexer.vars();
    let first = build_euler(indexer, 0..1)?;
    let rest = build_euler(indexer, 1..k)?;
    let scale = -(RBig::from(2u8) * inv_n(n));
    Ok(first.matmul(&rest)?.scale(&scale).with_label("mixed"))
}

/// Full shifted-sphere Laplacian on polynomials in (x̃, x2, ..., xk) of
/// degree <= ℓ.
pub fn build_sphere_laplacian(cfg: &SphereConfig, degree: usize) -> Result<OperatorMatrix, OperatorError> {
    let indexer = basis(cfg.k, degree)?;
    let d = build_d_on(cfg.n, &indexer)?;
    let e = build_e_on(cfg.n, &indexer)?;
    let mixed = build_mixed_on(cfg.n, &indexer)?;
    Ok(d.add(&e)?.add(&mixed)?.with_label("Δ_S"))
}

/// D + E without the coupling term; differs from Δ_S by O(1/N).
pub fn build_decoupled_laplacian(cfg: &SphereConfig, degree: usize) -> Result<OperatorMatrix, OperatorError> {
    let indexer = basis(cfg.k, degree)?;
    let d = build_d_on(cfg.n, &indexer)?;
    let e = build_e_on(cfg.n, &indexer)?;
    Ok(d.add(&e)?.with_label("D+E"))
}

/// The N → ∞ limit of E: Σ ∂j² - y·∂y over x2..xk.
pub fn build_hermite_limit(k: usize, degree: usize) -> Result<OperatorMatrix, OperatorError> {
    let indexer = basis(k, degree)?;
    OperatorMatrix::from_action(indexer, "Hermite", None, |alpha| {
        if k < 2 {
            return Vec::new();
        }
        let mut terms = second_derivative_terms(alpha, 1..k);
        terms.push((alpha.clone(), -RBig::from(alpha.tail_degree())));
        terms
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::ratio;

    fn mono(k: usize, e: &[u32]) -> Polynomial {
        Polynomial::monomial(MultiIndex::new(e.to_vec()).unwrap().widen(k), RBig::ONE)
    }

    fn r(n: i64) -> RBig {
        RBig::from(n)
    }

    #[test]
    fn d_examples() {
        for n in [2u32, 3, 7, 100] {
            let d = build_D(n, 4).unwrap();
            let x = mono(1, &[1]);
            assert_eq!(d.apply(&x).unwrap(), x.scale(&(r(-1) + inv_n(n))));
            let x2 = mono(1, &[2]);
            let expect = &Polynomial::constant(1, r(2)) - &x2.scale(&r(2));
            assert_eq!(d.apply(&x2).unwrap(), expect);
            assert!(d.apply(&Polynomial::one(1)).unwrap().is_zero());
        }
    }

    #[test]
    fn d_column_formula() {
        // D x̃^n = n(n-1) x̃^{n-2} + λ_n x̃^n with λ_n = -n(1 + (n-2)/N)
        let n_sphere = 9u32;
        let d = build_D(n_sphere, 8).unwrap();
        for n in 0..=8i64 {
            let lambda = -(r(n) * (RBig::ONE + (r(n) - r(2)) * inv_n(n_sphere)));
            let mut expect = mono(1, &[n as u32]).scale(&lambda);
            if n >= 2 {
                expect = &expect + &mono(1, &[n as u32 - 2]).scale(&r(n * (n - 1)));
            }
            assert_eq!(d.column(n as usize), expect);
            assert_eq!(d.degree_block(n as usize), vec![vec![lambda]]);
        }
    }

    #[test]
    fn e_examples() {
        let n = 11u32;
        let e = build_E(n, 3, 4).unwrap();
        let x2 = mono(3, &[0, 1]);
        assert_eq!(e.apply(&x2).unwrap(), x2.scale(&(r(-1) + inv_n(n))));
        let x2sq = mono(3, &[0, 2]);
        assert_eq!(e.apply(&x2sq).unwrap(), &Polynomial::constant(3, r(2)) - &x2sq.scale(&r(2)));
        let x2x3 = mono(3, &[0, 1, 1]);
        assert_eq!(e.apply(&x2x3).unwrap(), x2x3.scale(&r(-2)));
        // x̃ passes through untouched
        assert!(e.apply(&mono(3, &[3])).unwrap().is_zero());
        assert!(build_E(n, 1, 3).unwrap().is_zero());
        assert!(matches!(build_E(3, 3, 2), Err(OperatorError::TooManyVariables { .. })));
    }

    #[test]
    fn laplacian_examples() {
        let cfg = SphereConfig::new(10, 1.0, 2, 3).unwrap();
        let lap = build_sphere_laplacian(&cfg, 3).unwrap();
        let x1 = mono(2, &[1]);
        assert_eq!(lap.apply(&x1).unwrap(), x1.scale(&ratio(-9, 10)));
        let x1x2 = mono(2, &[1, 1]);
        assert_eq!(lap.apply(&x1x2).unwrap(), x1x2.scale(&r(-2)));
        assert!(lap.apply(&Polynomial::one(2)).unwrap().is_zero());
        assert!(matches!(
            build_sphere_laplacian(&SphereConfig { n: 3, t: 1.0, k: 3, degree: 2 }, 2),
            Err(OperatorError::TooManyVariables { .. })
        ));
    }

    #[test]
    fn laplacian_matches_ambient_formula() {
        // Δ_S = Σ∂² - (1/N)[(r∂r)² + (N-2) r∂r] with r∂r the full Euler operator
        let cfg = SphereConfig::new(7, 1.0, 3, 4).unwrap();
        let lap = build_sphere_laplacian(&cfg, 4).unwrap();
        let idx = lap.indexer().clone();
        let ambient = OperatorMatrix::from_action(idx, "ambient", Some(7), |alpha| {
            let mut terms = second_derivative_terms(alpha, 0..3);
            let s = RBig::from(alpha.degree());
            let c = -(inv_n(7)) * (&s * &s + RBig::from(5u8) * &s);
            terms.push((alpha.clone(), c));
            terms
        })
        .unwrap();
        assert_eq!(lap, ambient);
    }

    #[test]
    fn hermite_examples_and_limit() {
        let h = build_hermite_limit(2, 3).unwrap();
        let x2 = mono(2, &[0, 1]);
        assert_eq!(h.apply(&x2).unwrap(), -&x2);
        let x2sq = mono(2, &[0, 2]);
        assert_eq!(h.apply(&x2sq).unwrap(), &Polynomial::constant(2, r(2)) - &x2sq.scale(&r(2)));
        // E_N - Hermite is exactly proportional to 1/N, so N * diff is constant
        let diffs: Vec<f64> =
            [10u32, 20, 40].iter().map(|&n| build_E(n, 2, 3).unwrap().max_abs_diff(&h).unwrap()).collect();
        assert!((diffs[0] / diffs[1] - 2.0).abs() < 1e-12);
        assert!((diffs[1] / diffs[2] - 2.0).abs() < 1e-12);
        let scaled: Vec<OperatorMatrix> = [8u32, 16, 32, 64]
            .iter()
            .map(|&n| build_E(n, 3, 4).unwrap().sub(&build_hermite_limit(3, 4).unwrap()).unwrap().scale(&r(n as i64)))
            .collect();
        for s in &scaled[1..] {
            assert_eq!(s, &scaled[0]);
        }
    }

    #[test]
    fn d_and_e_commute() {
        for (n, k, l) in [(4u32, 3usize, 5usize), (10, 3, 5), (6, 2, 6), (50, 4, 4)] {
            let idx = basis(k, l).unwrap();
            let d = build_d_on(n, &idx).unwrap();
            let e = build_e_on(n, &idx).unwrap();
            assert!(commutator(&d, &e).unwrap().is_zero(), "N={n} k={k} l={l}");
        }
    }

    #[test]
    fn commutation_relation_second_derivative_euler() {
        // ∂²(x∂ xⁿ) - x∂(∂² xⁿ) = 2n(n-1)xⁿ⁻², so [∂², x∂] = 2∂²
        let idx = basis(1, 7).unwrap();
        let dd = build_second_derivatives(&idx, 0..1).unwrap();
        let eu = build_euler(&idx, 0..1).unwrap();
        assert_eq!(commutator(&dd, &eu).unwrap(), dd.scale(&r(2)));
        let idx = basis(3, 5).unwrap();
        let lap_y = build_second_derivatives(&idx, 1..3).unwrap();
        let eu_y = build_euler(&idx, 1..3).unwrap();
        assert_eq!(commutator(&eu_y, &lap_y).unwrap(), lap_y.scale(&r(-2)));
        assert!(commutator(&dd, &dd).unwrap().is_zero());
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let a = build_D(5, 3).unwrap();
        let b = build_D(5, 4).unwrap();
        assert!(matches!(commutator(&a, &b), Err(OperatorError::DimensionMismatch(4, 5))));
    }

    #[test]
    fn closure_under_degree() {
        for (n, k, l) in [(5u32, 2usize, 6usize), (12, 3, 5)] {
            let cfg = SphereConfig::new(n, 1.0, k, l).unwrap();
            let ops = [
                build_sphere_laplacian(&cfg, l).unwrap(),
                build_decoupled_laplacian(&cfg, l).unwrap(),
                build_hermite_limit(k, l).unwrap(),
                build_mixed_on(n, &basis(k, l).unwrap()).unwrap(),
            ];
            for op in &ops {
                assert!(op.is_degree_nonincreasing(), "{}", op.label());
                // closure for every column: the image lives in the same variables
                for j in 0..op.dim() {
                    assert_eq!(op.column(j).vars(), k);
                }
            }
        }
    }

    #[test]
    fn d_diagonal_blocks_carry_eigenvalues() {
        for n_sphere in [3u32, 5, 10, 100] {
            let d = build_D(n_sphere, 10).unwrap();
            for n in 0..=10i64 {
                let lambda = -(r(n) * (RBig::ONE + (r(n) - r(2)) * inv_n(n_sphere)));
                assert_eq!(d.entry(n as usize, n as usize), &lambda);
            }
        }
    }

    #[test]
    fn sphere_config_validation() {
        assert!(SphereConfig::new(1, 1.0, 1, 2).is_err());
        assert!(SphereConfig::new(3, 1.0, 3, 2).is_err());
        assert!(SphereConfig::new(4, -1.0, 3, 2).is_err());
        assert!(SphereConfig::new(4, f64::NAN, 1, 2).is_err());
        let cfg = SphereConfig::new(16, 0.0, 2, 2).unwrap();
        assert_eq!(cfg.m(), 4.0);
        let later = cfg.with_t(1.0);
        assert!((later.m() - 4.0 * (-0.5f64 * 15.0 / 16.0).exp()).abs() < 1e-15);
        assert!(later.m() < cfg.m());
    }
}
