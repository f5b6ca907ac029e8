//! The N → ∞ limit of the heat kernel seen from the north pole: a centred
//! Gaussian on ℝᵏ with variance 1 - e^{-t} - te^{-t} in the radial direction
//! and 1 - e^{-t} in each tangential one.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;
use thiserror::Error;

use crate::combinat::gaussian_moment_factor;
use crate::polyalg::MultiIndex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error("time must be positive and finite, got {0}")]
    BadTime(f64),
    #[error("dimension k must be at least 1")]
    NoVariables,
    #[error("point has {got} coordinates, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("need 1 <= m <= k <= 4, got m = {m}, k = {k}")]
    BadMarginal { k: usize, m: usize },
}

/// 1 - e^{-t} - t e^{-t}. Near zero the direct formula cancels badly, so the
/// series Σ_{n>=2} (-1)ⁿ (n-1) tⁿ / n! is summed instead; it starts at t²/2.
pub fn var_first(t: f64) -> f64 {
    if t.abs() < 0.1 {
        let mut term = -t; // (-t)ⁿ/n! at n = 1
        let mut sum = 0.0;
        for n in 2..30 {
            term *= -t / n as f64;
            sum += (n - 1) as f64 * term;
        }
        return sum;
    }
    -(-t).exp_m1() - t * (-t).exp()
}

/// 1 - e^{-t}.
pub fn var_rest(t: f64) -> f64 {
    -(-t).exp_m1()
}

/// c_{t,k} = (2π)^{-k/2} var_first^{-1/2} var_rest^{(1-k)/2}.
pub fn normalizing_constant(t: f64, k: usize) -> f64 {
    (2.0 * PI).powf(-(k as f64) / 2.0) * var_first(t).powf(-0.5) * var_rest(t).powf((1.0 - k as f64) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitKernelParams {
    pub t: f64,
    pub k: usize,
    pub var_first: f64,
    pub var_rest: f64,
    pub norm_const: f64,
}

impl LimitKernelParams {
    pub fn new(t: f64, k: usize) -> Result<Self, LimitError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(LimitError::BadTime(t));
        }
        if k == 0 {
            return Err(LimitError::NoVariables);
        }
        Ok(Self { t, k, var_first: var_first(t), var_rest: var_rest(t), norm_const: normalizing_constant(t, k) })
    }

    fn variance(&self, i: usize) -> f64 {
        if i == 0 {
            self.var_first
        } else {
            self.var_rest
        }
    }
}

pub fn limit_density(params: &LimitKernelParams, x: &[f64]) -> Result<f64, LimitError> {
    if x.len() != params.k {
        return Err(LimitError::LengthMismatch { expected: params.k, got: x.len() });
    }
    let quad: f64 = x.iter().enumerate().map(|(i, xi)| xi * xi / params.variance(i)).sum();
    Ok(params.norm_const * (-0.5 * quad).exp())
}

fn odd_or_moment(n: u32, variance: f64) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    gaussian_moment_factor(n as u64).to_f64().value() * variance.powi(n as i32 / 2)
}

/// E[x^α] under the limit measure.
pub fn gaussian_moment(alpha: &MultiIndex, t: f64) -> Result<f64, LimitError> {
    let params = LimitKernelParams::new(t, alpha.vars())?;
    Ok(alpha.exponents().iter().enumerate().map(|(i, &n)| odd_or_moment(n, params.variance(i))).product())
}

/// E[x^α] for the standard Gaussian on ℝᵏ.
pub fn standard_gaussian_moment(alpha: &MultiIndex) -> f64 {
    alpha.exponents().iter().map(|&n| odd_or_moment(n, 1.0)).product()
}

/// |gaussian_moment(α, t) - standard Gaussian moment|; for large t the limit
/// measure forgets the delta start and becomes the standard Gaussian.
pub fn classical_limit_check(alpha: &MultiIndex, t_large: f64) -> Result<f64, LimitError> {
    Ok((gaussian_moment(alpha, t_large)? - standard_gaussian_moment(alpha)).abs())
}

/// Tensor Gauss–Hermite rule over the coordinates in `dims`, with each axis
/// scaled to its own variance: ∫ g(x) dx ≈ Σ Π(w √(2σ²) e^{y²}) g(√(2σ²) y).
struct TensorRule {
    nodes: Vec<(f64, f64)>,
}

impl TensorRule {
    fn new(points: usize) -> Self {
        let rule = GaussHermite::new(NonZeroUsize::new(points.max(1)).expect("nonzero"));
        Self { nodes: rule.as_node_weight_pairs().to_vec() }
    }

    fn integrate<F>(&self, variances: &[f64], mut g: F) -> f64
    where
        F: FnMut(&[f64]) -> f64,
    {
        let dims = variances.len();
        let scales: Vec<f64> = variances.iter().map(|v| (2.0 * v).sqrt()).collect();
        let mut idx = vec![0usize; dims];
        let mut x = vec![0.0; dims];
        let mut total = 0.0;
        loop {
            let mut w = 1.0;
            for d in 0..dims {
                let (y, wy) = self.nodes[idx[d]];
                x[d] = scales[d] * y;
                w *= wy * scales[d] * (y * y).exp();
            }
            total += w * g(&x);
            let mut d = 0;
            while d < dims {
                idx[d] += 1;
                if idx[d] < self.nodes.len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == dims {
                return total;
            }
        }
    }
}

const QUAD_POINTS: usize = 40;

/// ∫ density over ℝᵏ by tensor Gauss–Hermite quadrature.
pub fn quadrature_mass(params: &LimitKernelParams) -> f64 {
    let vars: Vec<f64> = (0..params.k).map(|i| params.variance(i)).collect();
    TensorRule::new(QUAD_POINTS).integrate(&vars, |x| limit_density(params, x).expect("length checked"))
}

/// ∫ x^α density by tensor Gauss–Hermite quadrature.
pub fn quadrature_moment(alpha: &MultiIndex, t: f64) -> Result<f64, LimitError> {
    let params = LimitKernelParams::new(t, alpha.vars())?;
    let vars: Vec<f64> = (0..params.k).map(|i| params.variance(i)).collect();
    Ok(TensorRule::new(QUAD_POINTS).integrate(&vars, |x| {
        let mono: f64 = x.iter().zip(alpha.exponents()).map(|(xi, &n)| xi.powi(n as i32)).product();
        mono * limit_density(&params, x).expect("length checked")
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport {
    pub k: usize,
    pub m: usize,
    pub t: f64,
    pub points_checked: usize,
    pub max_deviation: f64,
}

impl MarginalReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

/// Integrates the k-variable density over x_{m+1..k} and compares with the
/// m-variable density on grid^m.
pub fn marginal_compatibility(k: usize, m: usize, t: f64, grid: &[f64]) -> Result<MarginalReport, LimitError> {
    if !(1 <= m && m <= k && k <= 4) {
        return Err(LimitError::BadMarginal { k, m });
    }
    let full = LimitKernelParams::new(t, k)?;
    let marginal = LimitKernelParams::new(t, m)?;
    let rule = TensorRule::new(QUAD_POINTS);
    let tail_vars = vec![full.var_rest; k - m];
    let mut idx = vec![0usize; m];
    let mut head = vec![0.0; m];
    let mut point = vec![0.0; k];
    let mut max_deviation: f64 = 0.0;
    let mut points_checked = 0;
    loop {
        for d in 0..m {
            head[d] = grid[idx[d]];
        }
        let integrated = if k == m {
            limit_density(&full, &head)?
        } else {
            rule.integrate(&tail_vars, |tail| {
                point[..m].copy_from_slice(&head);
                point[m..].copy_from_slice(tail);
                limit_density(&full, &point).expect("length checked")
            })
        };
        max_deviation = max_deviation.max((integrated - limit_density(&marginal, &head)?).abs());
        points_checked += 1;
        let mut d = 0;
        while d < m {
            idx[d] += 1;
            if idx[d] < grid.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == m || grid.is_empty() {
            break;
        }
    }
    Ok(MarginalReport { k, m, t, points_checked, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec()).unwrap()
    }

    #[test]
    fn density_examples() {
        for t in [0.25, 1.0, 4.0] {
            let p = LimitKernelParams::new(t, 1).unwrap();
            let expect = (2.0 * PI * (1.0 - (-t).exp() - t * (-t).exp())).powf(-0.5);
            assert!((limit_density(&p, &[0.0]).unwrap() - expect).abs() < 1e-12 * expect);
            let p2 = LimitKernelParams::new(t, 3).unwrap();
            let x = [0.3, -0.7, 1.1];
            let nx = [-0.3, 0.7, -1.1];
            assert_eq!(limit_density(&p2, &x).unwrap(), limit_density(&p2, &nx).unwrap());
            assert!(limit_density(&p2, &x).unwrap() < limit_density(&p2, &[0.0; 3]).unwrap());
        }
        assert!(matches!(LimitKernelParams::new(0.0, 1), Err(LimitError::BadTime(_))));
        assert!(matches!(LimitKernelParams::new(-1.0, 1), Err(LimitError::BadTime(_))));
        let p = LimitKernelParams::new(1.0, 2).unwrap();
        assert!(limit_density(&p, &[0.0]).is_err());
    }

    #[test]
    fn normalization() {
        for k in 1..=3 {
            for t in [0.25, 1.0, 4.0] {
                let p = LimitKernelParams::new(t, k).unwrap();
                assert!((quadrature_mass(&p) - 1.0).abs() <= 1e-8, "k={k} t={t}");
            }
        }
    }

    #[test]
    fn moment_examples() {
        let t = 1.0f64;
        assert!((gaussian_moment(&mi(&[0, 2]), t).unwrap() - (1.0 - (-t).exp())).abs() < 1e-15);
        assert_eq!(gaussian_moment(&mi(&[1, 1]), t).unwrap(), 0.0);
        let e = (-1.0f64).exp();
        let expect = (1.0 - 2.0 * e) * (1.0 - e);
        assert!((gaussian_moment(&mi(&[2, 2]), t).unwrap() - expect).abs() < 1e-15);
        assert!((quadrature_moment(&mi(&[2, 2]), t).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn moments_match_quadrature() {
        for k in 1..=3usize {
            let indexer = crate::polyalg::BasisIndexer::new(k, 6).unwrap();
            for alpha in indexer.monomials() {
                for t in [0.5, 2.0] {
                    let a = gaussian_moment(alpha, t).unwrap();
                    let b = quadrature_moment(alpha, t).unwrap();
                    assert!((a - b).abs() <= 1e-7, "{alpha} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn classical_limit() {
        let t = 30.0f64;
        let v = gaussian_moment(&mi(&[2, 0]), t).unwrap();
        assert!((v - (1.0 - (-t).exp() - t * (-t).exp())).abs() <= 1e-12);
        // 31 e^{-30} ≈ 2.9e-12 is what separates it from 1
        assert!(classical_limit_check(&mi(&[2, 0]), t).unwrap() <= 3e-12);
        assert!(classical_limit_check(&mi(&[0, 2]), 30.0).unwrap() <= 1e-12);
        assert!(classical_limit_check(&mi(&[4, 0]), 200.0).unwrap() <= 1e-12);
        assert_eq!(standard_gaussian_moment(&mi(&[4, 0])), 3.0);
        let indexer = crate::polyalg::BasisIndexer::new(2, 6).unwrap();
        for alpha in indexer.monomials() {
            assert!(classical_limit_check(alpha, 30.0).unwrap() <= 1e-7);
        }
        // at t = 20 the sixth moment is still 45·21·e^{-20} ≈ 2e-6 away
        let gap = classical_limit_check(&mi(&[6, 0]), 20.0).unwrap();
        assert!(gap > 1e-7 && gap < 3e-6);
    }

    #[test]
    fn marginals() {
        let r = marginal_compatibility(2, 1, 1.0, &[0.0]).unwrap();
        assert!(r.max_deviation <= 1e-10);
        let r = marginal_compatibility(3, 2, 0.5, &[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(r.points_checked, 9);
        assert!(r.passes(1e-7));
        let r = marginal_compatibility(2, 2, 0.5, &[-1.0, 1.0]).unwrap();
        assert_eq!(r.max_deviation, 0.0);
        let r = marginal_compatibility(4, 1, 2.0, &[-0.5, 0.5]).unwrap();
        assert!(r.passes(1e-7));
        assert!(marginal_compatibility(5, 1, 1.0, &[0.0]).is_err());
        assert!(marginal_compatibility(2, 3, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn small_time_variance() {
        let t = 1e-2f64;
        let v = var_first(t);
        assert!((v / (t * t / 2.0) - 1.0).abs() < 0.01);
        // switch-over point agrees with the direct formula
        let direct = 1.0 - (-0.1f64).exp() - 0.1 * (-0.1f64).exp();
        assert!((var_first(0.1 - 1e-15) - direct).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn variances_ordered_and_monotone(t in 1e-3f64..30.0, dt in 1e-3f64..1.0) {
            let (a, b) = (var_first(t), var_rest(t));
            prop_assert!(0.0 < a && a < b && b <= 1.0);
            prop_assert!(var_first(t + dt) > a);
            prop_assert!(var_rest(t + dt) >= b);
        }
    }
}
