//! Exact multivariate polynomials with rational coefficients and the graded
//! monomial basis of polynomials of bounded degree.
//!
//! Variable 1 is the first sphere coordinate (shifted or not, depending on
//! context); variables 2..k are the remaining retained coordinates.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_ratio::RBig;
use thiserror::Error;

use crate::combinat::binomial;
use crate::numeric::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("expected {expected} variables, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("monomial of degree {degree} lies outside the basis of degree <= {max}")]
    OutOfBasis { degree: usize, max: usize },
    #[error("basis position {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },
    #[error("a multi-index needs at least one variable")]
    NoVariables,
    #[error("cannot parse multi-index '{0}'")]
    Parse(String),
}

/// Exponent vector (n1, ..., nk).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self, PolyError> {
        if exponents.is_empty() {
            return Err(PolyError::NoVariables);
        }
        Ok(MultiIndex(exponents))
    }

    pub fn zeros(vars: usize) -> Self {
        MultiIndex(vec![0; vars.max(1)])
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn vars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// Exponent of variable `i` (0-based); zero beyond the stored length.
    pub fn get(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn with(&self, i: usize, exponent: u32) -> Self {
        let mut e = self.0.clone();
        e[i] = exponent;
        MultiIndex(e)
    }

    /// Pads with zero exponents up to `vars` variables.
    pub fn widen(&self, vars: usize) -> Self {
        let mut e = self.0.clone();
        if e.len() < vars {
            e.resize(vars, 0);
        }
        MultiIndex(e)
    }

    /// Total degree of the variables 2..k.
    pub fn tail_degree(&self) -> usize {
        self.0[1..].iter().map(|&e| e as usize).sum()
    }

    fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for MultiIndex {
    type Err = PolyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let exps: Result<Vec<u32>, _> =
            s.trim().trim_matches(|c| c == '(' || c == ')').split(',').map(|p| p.trim().parse::<u32>()).collect();
        MultiIndex::new(exps.map_err(|_| PolyError::Parse(s.to_string()))?)
    }
}

/// Graded-lexicographic numbering of the monomials of degree <= `max_degree`
/// in `vars` variables. Lower total degree comes first; within a degree a
/// larger exponent of an earlier variable comes first, so x1 precedes x2.
#[derive(Debug, Clone)]
pub struct BasisIndexer {
    vars: usize,
    max_degree: usize,
    monomials: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
    degree_starts: Vec<usize>,
}

impl BasisIndexer {
    pub fn new(vars: usize, max_degree: usize) -> Result<Self, PolyError> {
        if vars == 0 {
            return Err(PolyError::NoVariables);
        }
        let mut monomials = Vec::new();
        let mut degree_starts = Vec::with_capacity(max_degree + 2);
        for d in 0..=max_degree {
            degree_starts.push(monomials.len());
            let mut buf = vec![0u32; vars];
            push_degree(&mut monomials, &mut buf, 0, d as u32);
        }
        degree_starts.push(monomials.len());
        let positions = monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        Ok(BasisIndexer { vars, max_degree, monomials, positions, degree_starts })
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn dimension(&self) -> usize {
        self.monomials.len()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    /// Positions of the monomials of total degree exactly `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_starts[d]..self.degree_starts[d + 1]
    }

    pub fn monomial_index(&self, alpha: &MultiIndex) -> Result<usize, PolyError> {
        if alpha.vars() != self.vars {
            return Err(PolyError::LengthMismatch { expected: self.vars, got: alpha.vars() });
        }
        self.positions.get(alpha).copied().ok_or(PolyError::OutOfBasis { degree: alpha.degree(), max: self.max_degree })
    }

    pub fn index_to_monomial(&self, index: usize) -> Result<&MultiIndex, PolyError> {
        self.monomials.get(index).ok_or(PolyError::IndexOutOfRange { index, dimension: self.dimension() })
    }
}

fn push_degree(out: &mut Vec<MultiIndex>, buf: &mut [u32], pos: usize, remaining: u32) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for e in (0..=remaining).rev() {
        buf[pos] = e;
        push_degree(out, buf, pos + 1, remaining - e);
    }
    buf[pos] = 0;
}

/// Sparse polynomial with exact rational coefficients. Zero coefficients are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    vars: usize,
    terms: BTreeMap<MultiIndex, RBig>,
}

impl Polynomial {
    pub fn zero(vars: usize) -> Self {
        Polynomial { vars: vars.max(1), terms: BTreeMap::new() }
    }

    pub fn constant(vars: usize, c: RBig) -> Self {
        Self::monomial(MultiIndex::zeros(vars), c)
    }

    pub fn one(vars: usize) -> Self {
        Self::constant(vars, RBig::ONE)
    }

    pub fn monomial(alpha: MultiIndex, c: RBig) -> Self {
        let mut p = Polynomial::zero(alpha.vars());
        p.add_term(alpha, c);
        p
    }

    /// The coordinate function x_{i+1} (0-based `i`).
    pub fn variable(vars: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::zeros(vars).with(i, 1), RBig::ONE)
    }

    pub fn from_terms<I>(vars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (MultiIndex, RBig)>,
    {
        let mut p = Polynomial::zero(vars);
        for (alpha, c) in terms {
            if alpha.vars() != p.vars {
                return Err(PolyError::LengthMismatch { expected: p.vars, got: alpha.vars() });
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    /// Polynomial with coefficient vector `coeffs` over `indexer`.
    pub fn from_coefficients(indexer: &BasisIndexer, coeffs: &[RBig]) -> Self {
        let mut p = Polynomial::zero(indexer.vars());
        for (alpha, c) in indexer.monomials().iter().zip(coeffs) {
            p.add_term(alpha.clone(), c.clone());
        }
        p
    }

    pub fn to_coefficients(&self, indexer: &BasisIndexer) -> Result<Vec<RBig>, PolyError> {
        let mut out = vec![RBig::ZERO; indexer.dimension()];
        for (alpha, c) in &self.terms {
            out[indexer.monomial_index(alpha)?] = c.clone();
        }
        Ok(out)
    }

    pub(crate) fn add_term(&mut self, alpha: MultiIndex, c: RBig) {
        if c == RBig::ZERO {
            return;
        }
        let entry = self.terms.entry(alpha);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + &c;
                if sum == RBig::ZERO {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &RBig)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> RBig {
        self.terms.get(alpha).cloned().unwrap_or(RBig::ZERO)
    }

    /// Total degree; the zero polynomial has degree 0 here.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// Same polynomial viewed in `vars` >= current variables.
    pub fn widen(&self, vars: usize) -> Self {
        let vars = vars.max(self.vars);
        Polynomial { vars, terms: self.terms.iter().map(|(a, c)| (a.widen(vars), c.clone())).collect() }
    }

    pub fn scale(&self, c: &RBig) -> Self {
        if *c == RBig::ZERO {
            return Polynomial::zero(self.vars);
        }
        Polynomial { vars: self.vars, terms: self.terms.iter().map(|(a, v)| (a.clone(), v * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Polynomial::one(self.vars), |acc, _| &acc * self)
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, point: &[RBig]) -> Result<RBig, PolyError> {
        self.check_point(point.len())?;
        let mut acc = RBig::ZERO;
        for (alpha, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(alpha.exponents()) {
                if e > 0 {
                    term *= x.pow(e as isize);
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Evaluation at a real point in the working precision of `T`.
    pub fn eval<T: Real>(&self, point: &[T]) -> Result<T, PolyError> {
        self.check_point(point.len())?;
        let mut acc = T::zero();
        for (alpha, c) in &self.terms {
            let mut term = T::from_rational(c);
            for (x, &e) in point.iter().zip(alpha.exponents()) {
                if e > 0 {
                    term = term * x.powi(e);
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    fn check_point(&self, len: usize) -> Result<(), PolyError> {
        if len != self.vars {
            return Err(PolyError::LengthMismatch { expected: self.vars, got: len });
        }
        Ok(())
    }

    /// Substitutes x1 = x̃1 - m and expands binomially, so the result is the
    /// same function written in the shifted first variable.
    pub fn shift_first_variable(&self, m: &RBig) -> Polynomial {
        let neg_m = -m;
        let mut out = Polynomial::zero(self.vars);
        for (alpha, c) in &self.terms {
            let a = alpha.get(0);
            for i in 0..=a {
                let coeff = c * RBig::from(binomial(a as u64, i as u64)) * neg_m.pow((a - i) as isize);
                out.add_term(alpha.with(0, i), coeff);
            }
        }
        out
    }

    /// Floating-point version of [`Polynomial::shift_first_variable`] for an
    /// irrational shift. The result is a coefficient vector over `indexer`.
    pub fn shift_first_variable_real<T: Real>(&self, m: &T, indexer: &BasisIndexer) -> Result<Vec<T>, PolyError> {
        if self.vars != indexer.vars() {
            return Err(PolyError::LengthMismatch { expected: indexer.vars(), got: self.vars });
        }
        let neg_m = -m.clone();
        let mut out = vec![T::zero(); indexer.dimension()];
        for (alpha, c) in &self.terms {
            let a = alpha.get(0);
            let c = T::from_rational(c);
            for i in 0..=a {
                let idx = indexer.monomial_index(&alpha.with(0, i))?;
                let b = T::from_rational(&RBig::from(binomial(a as u64, i as u64)));
                let term = c.clone() * b * neg_m.powi(a - i);
                out[idx] = out[idx].clone() + term;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        // highest degree first reads more naturally
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then(b.0.cmp(a.0)));
        for (alpha, c) in terms {
            let negative = *c < RBig::ZERO;
            let mag = if negative { -c } else { c.clone() };
            if first {
                if negative {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if negative { " - " } else { " + " })?;
            }
            first = false;
            let vars: Vec<String> = alpha
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == RBig::ONE {
                f.write_str(&vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let vars = self.vars.max(rhs.vars);
        let mut out = self.widen(vars);
        for (a, c) in &rhs.terms {
            out.add_term(a.widen(vars), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial { vars: self.vars, terms: self.terms.iter().map(|(a, c)| (a.clone(), -c)).collect() }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let vars = self.vars.max(rhs.vars);
        let mut out = Polynomial::zero(vars);
        for (a, c) in &self.terms {
            let a = a.widen(vars);
            for (b, d) in &rhs.terms {
                out.add_term(a.add(&b.widen(vars)), c * d);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::ratio;
    use proptest::prelude::*;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec()).unwrap()
    }

    fn r(n: i64) -> RBig {
        RBig::from(n)
    }

    #[test]
    fn graded_lex_positions() {
        let b = BasisIndexer::new(2, 2).unwrap();
        assert_eq!(b.monomial_index(&mi(&[0, 0])).unwrap(), 0);
        assert_eq!(b.monomial_index(&mi(&[1, 0])).unwrap(), 1);
        assert_eq!(b.monomial_index(&mi(&[0, 1])).unwrap(), 2);
        assert_eq!(b.monomial_index(&mi(&[2, 0])).unwrap(), 3);
        assert_eq!(b.monomial_index(&mi(&[1, 1])).unwrap(), 4);
        assert_eq!(b.monomial_index(&mi(&[0, 2])).unwrap(), 5);
    }

    #[test]
    fn brute_force_graded_lex_enumeration() {
        // independent ordering: sort every exponent vector of degree <= l by
        // (degree ascending, exponents descending lexicographically)
        for k in 1..=3usize {
            for l in 0..=4usize {
                let b = BasisIndexer::new(k, l).unwrap();
                let mut all = Vec::new();
                let bound = (l + 1) as u32;
                let total = (bound as usize).pow(k as u32);
                for code in 0..total {
                    let mut c = code;
                    let mut e = Vec::with_capacity(k);
                    for _ in 0..k {
                        e.push((c % bound as usize) as u32);
                        c /= bound as usize;
                    }
                    let m = MultiIndex(e);
                    if m.degree() <= l {
                        all.push(m);
                    }
                }
                all.sort_by(|a, b| a.degree().cmp(&b.degree()).then(b.0.cmp(&a.0)));
                assert_eq!(b.monomials(), &all[..], "k={k} l={l}");
                for (i, alpha) in all.iter().enumerate() {
                    assert_eq!(b.monomial_index(alpha).unwrap(), i);
                    assert_eq!(b.index_to_monomial(i).unwrap(), alpha);
                }
            }
        }
    }

    #[test]
    fn dimension_is_binomial() {
        for k in 1..=4usize {
            for l in 0..=8usize {
                let b = BasisIndexer::new(k, l).unwrap();
                assert_eq!(RBig::from(b.dimension()), RBig::from(binomial((k + l) as u64, k as u64)));
            }
        }
    }

    #[test]
    fn out_of_basis_and_length_errors() {
        let b = BasisIndexer::new(2, 2).unwrap();
        assert_eq!(b.monomial_index(&mi(&[2, 1])), Err(PolyError::OutOfBasis { degree: 3, max: 2 }));
        assert!(matches!(b.monomial_index(&mi(&[1])), Err(PolyError::LengthMismatch { .. })));
        assert!(b.index_to_monomial(6).is_err());
        assert!(BasisIndexer::new(0, 3).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let x = Polynomial::variable(1, 0);
        let p = &x.pow(2) - &Polynomial::one(1);
        assert_eq!(p.eval_exact(&[r(3)]).unwrap(), r(8));
        assert_eq!(x.eval::<f64>(&[4f64.sqrt()]).unwrap(), 2.0);
        let y2 = Polynomial::variable(2, 1).pow(2);
        assert_eq!(y2.eval_exact(&[r(0), r(0)]).unwrap(), r(0));
        assert!(matches!(y2.eval_exact(&[r(0)]), Err(PolyError::LengthMismatch { .. })));
    }

    #[test]
    fn shift_examples() {
        let m = ratio(5, 3);
        let x = Polynomial::variable(2, 0);
        let xt = Polynomial::variable(2, 0);
        let shifted = x.shift_first_variable(&m);
        assert_eq!(shifted, &xt - &Polynomial::constant(2, m.clone()));
        let sq = x.pow(2).shift_first_variable(&m);
        let expect = &(&xt.pow(2) - &xt.scale(&(r(2) * &m))) + &Polynomial::constant(2, &m * &m);
        assert_eq!(sq, expect);
        let y3 = Polynomial::variable(2, 1).pow(3);
        assert_eq!(y3.shift_first_variable(&m), y3);
    }

    #[test]
    fn real_shift_matches_exact_shift() {
        let b = BasisIndexer::new(2, 4).unwrap();
        let p = &Polynomial::variable(2, 0).pow(3) * &Polynomial::variable(2, 1);
        let m = ratio(7, 4);
        let exact = p.shift_first_variable(&m).to_coefficients(&b).unwrap();
        let real = p.shift_first_variable_real(&1.75f64, &b).unwrap();
        for (e, x) in exact.iter().zip(real) {
            assert!((e.to_f64().value() - x).abs() < 1e-14);
        }
    }

    #[test]
    fn coefficient_round_trip_and_display() {
        let b = BasisIndexer::new(2, 3).unwrap();
        let p = &Polynomial::variable(2, 0).pow(2).scale(&ratio(3, 2)) - &Polynomial::variable(2, 1);
        let v = p.to_coefficients(&b).unwrap();
        assert_eq!(Polynomial::from_coefficients(&b, &v), p);
        assert_eq!(p.to_string(), "3/2*x1^2 - x2");
        assert_eq!(Polynomial::zero(1).to_string(), "0");
    }

    #[test]
    fn multi_index_parsing() {
        assert_eq!("2,0".parse::<MultiIndex>().unwrap(), mi(&[2, 0]));
        assert_eq!("(1, 2, 3)".parse::<MultiIndex>().unwrap(), mi(&[1, 2, 3]));
        assert!("a,1".parse::<MultiIndex>().is_err());
        assert_eq!(mi(&[4, 0, 1]).to_string(), "4,0,1");
    }

    fn arb_poly(vars: usize) -> impl Strategy<Value = Polynomial> {
        let term = (proptest::collection::vec(0u32..3, vars), -6i64..7, 1u64..5);
        proptest::collection::vec(term, 0..5).prop_map(move |ts| {
            Polynomial::from_terms(vars, ts.into_iter().map(|(e, n, d)| (MultiIndex(e), ratio(n, d)))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_poly(3), b in arb_poly(3), c in arb_poly(3)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert!((&a - &a).is_zero());
            for (_, coeff) in (&a * &b).terms() {
                prop_assert!(*coeff != RBig::ZERO);
            }
        }

        #[test]
        fn shift_inverts(p in arb_poly(2), n in -20i64..20, d in 1u64..9) {
            let m = ratio(n, d);
            let back = p.shift_first_variable(&m).shift_first_variable(&-&m);
            prop_assert_eq!(back, p);
        }

        #[test]
        fn shift_preserves_values(p in arb_poly(2), n in -20i64..20, x in -10i64..10, y in -5i64..5) {
            let m = ratio(n, 3);
            let shifted = p.shift_first_variable(&m);
            let original = p.eval_exact(&[RBig::from(x) - &m, RBig::from(y)]).unwrap();
            prop_assert_eq!(shifted.eval_exact(&[RBig::from(x), RBig::from(y)]).unwrap(), original);
        }
    }
}
