//! The limiting kernel factors into one-dimensional solutions of
//!
//! ```text
//! g_t = ½(a(t) g_xx + x g_x + g),   a(t) = 1 - e^{-t} (first coordinate) or 1 (others)
//! ```
//!
//! started from a point mass. With ĝ(ξ) = ∫ g e^{-iξx} dx the equation becomes
//! ĝ_t + (ξ/2) ĝ_ξ = -½ a ξ² ĝ, whose characteristics ξ(t) = ξ₀ e^{t/2} give
//!
//! ```text
//! ĝ(t, ξ) = ĝ(0, ξ e^{-t/2}) · exp(-½ A(t) ξ²),   A(t) = e^{-t} ∫₀ᵗ a(s) e^s ds.
//! ```
//!
//! A(t) is 1 - e^{-t} - te^{-t} or 1 - e^{-t}: the Gaussian variances of the
//! limit measure.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::gaussian_limit::{var_first, var_rest};

/// Smallest time at which finite-difference residuals are checked.
pub const T_MIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("time must be positive and finite, got {0}")]
    BadTime(f64),
    #[error("mesh size must be positive and finite, got {0}")]
    BadMesh(f64),
    #[error("time {t} is below the residual threshold {min}")]
    TimeTooSmall { t: f64, min: f64 },
    #[error("initial variance must lie in (0, 0.01], got {0}")]
    BadEpsilon(f64),
    #[error("grid too coarse: dx = {dx:e} resolves the dilated initial width {width:e} with only {ratio:.2} samples")]
    GridTooCoarse { dx: f64, width: f64, ratio: f64 },
    #[error("domain half-width {half_width} is below 10 standard deviations ({needed})")]
    DomainTooSmall { half_width: f64, needed: f64 },
    #[error("grid needs at least 16 points, got {0}")]
    TooFewPoints(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParabolicVariant {
    /// a(t) = 1 - e^{-t}
    FirstCoordinate,
    /// a(t) = 1
    OtherCoordinate,
}

impl ParabolicVariant {
    pub fn diffusion_coeff(self, t: f64) -> f64 {
        match self {
            Self::FirstCoordinate => -(-t).exp_m1(),
            Self::OtherCoordinate => 1.0,
        }
    }

    /// A(t), the variance reached from a point mass.
    pub fn variance(self, t: f64) -> f64 {
        match self {
            Self::FirstCoordinate => var_first(t),
            Self::OtherCoordinate => var_rest(t),
        }
    }

    /// Centred Gaussian with variance A(t).
    pub fn closed_form(self, t: f64, x: f64) -> f64 {
        gaussian(self.variance(t), x)
    }
}

fn gaussian(var: f64, x: f64) -> f64 {
    (-(x * x) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// |g_t - ½(a g_xx + x g_x + g)| on the closed form, all derivatives by
/// central differences of width h.
pub fn residual(variant: ParabolicVariant, t: f64, x: f64, h: f64) -> Result<f64, PdeError> {
    if !t.is_finite() {
        return Err(PdeError::BadTime(t));
    }
    if t < T_MIN {
        return Err(PdeError::TimeTooSmall { t, min: T_MIN });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(PdeError::BadMesh(h));
    }
    let g = |t: f64, x: f64| variant.closed_form(t, x);
    let g0 = g(t, x);
    let g_t = (g(t + h, x) - g(t - h, x)) / (2.0 * h);
    let g_x = (g(t, x + h) - g(t, x - h)) / (2.0 * h);
    let g_xx = (g(t, x + h) - 2.0 * g0 + g(t, x - h)) / (h * h);
    let rhs = 0.5 * (variant.diffusion_coeff(t) * g_xx + x * g_x + g0);
    Ok((g_t - rhs).abs())
}

/// ĝ(t, ξ) from the characteristics, for initial transform `initial`.
pub fn characteristic_transport<F>(variant: ParabolicVariant, xi: f64, t: f64, initial: F) -> Result<f64, PdeError>
where
    F: Fn(f64) -> f64,
{
    if !(t > 0.0 && t.is_finite()) {
        return Err(PdeError::BadTime(t));
    }
    Ok(initial(xi * (-0.5 * t).exp()) * (-0.5 * variant.variance(t) * xi * xi).exp())
}

/// Analytic transform of the closed form, exp(-½ A(t) ξ²).
pub fn closed_form_transform(variant: ParabolicVariant, t: f64, xi: f64) -> f64 {
    (-0.5 * variant.variance(t) * xi * xi).exp()
}

/// Inverse transform of the point-mass solution, (1/2π) ∫ ĝ(t, ξ) e^{iξx} dξ,
/// by the trapezoid rule; the integrand is even and decays like a Gaussian,
/// so this is spectrally accurate.
pub fn inverse_transport(variant: ParabolicVariant, t: f64, x: f64) -> Result<f64, PdeError> {
    let v = variant.variance(t);
    let cutoff = (80.0 / v).sqrt();
    let period = 2.0 * (x.abs() + 14.0 * v.sqrt());
    let d_xi = 2.0 * PI / period;
    let n = (cutoff / d_xi).ceil() as usize;
    let mut sum = characteristic_transport(variant, 0.0, t, |_| 1.0)?;
    for j in 1..=n {
        let xi = j as f64 * d_xi;
        sum += 2.0 * characteristic_transport(variant, xi, t, |_| 1.0)? * (xi * x).cos();
    }
    Ok(sum * d_xi / (2.0 * PI))
}

/// Periodic grid x_j = -L + j·2L/n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub half_width: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(half_width: f64, points: usize) -> Result<Self, PdeError> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(PdeError::BadMesh(half_width));
        }
        if points < 16 {
            return Err(PdeError::TooFewPoints(points));
        }
        Ok(Self { half_width, points })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| -self.half_width + j as f64 * self.dx()).collect()
    }

    /// Angular frequencies in FFT order.
    fn frequencies(&self) -> Vec<f64> {
        let n = self.points as i64;
        let base = PI / self.half_width;
        (0..n).map(|j| if j <= n / 2 { j } else { j - n } as f64 * base).collect()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self { half_width: 20.0, points: 16384 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub dx: f64,
}

impl SpectralSolution {
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx
    }

    pub fn variance(&self) -> f64 {
        self.nodes.iter().zip(&self.values).map(|(x, u)| x * x * u).sum::<f64>() * self.dx / self.mass()
    }

    /// max_j |u_j - f(x_j)|
    pub fn max_deviation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.values).map(|(x, u)| (u - f(*x)).abs()).fold(0.0, f64::max)
    }
}

/// Evolves a centred Gaussian of variance ε to time t. The transported
/// initial transform ĝ(0, ξe^{-t/2}) is the transform of the dilated profile
/// e^{t/2} g₀(e^{t/2} y), which is sampled, transformed, multiplied by
/// exp(-½ A(t) ξ²) and transformed back.
pub fn spectral_evolve(variant: ParabolicVariant, eps: f64, t: f64, grid: &Grid) -> Result<SpectralSolution, PdeError> {
    if !(eps > 0.0 && eps <= 0.01) {
        return Err(PdeError::BadEpsilon(eps));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PdeError::BadTime(t));
    }
    let width = (eps * (-t).exp()).sqrt();
    let dx = grid.dx();
    // Aliasing of the sampled profile: the zero mode picks up exp(-2(width·π/dx)²),
    // the others exp(-½(width² + A)(π/dx)²) once damped by the heat factor.
    let ratio = width * PI / dx;
    let final_sd = (width * width + variant.variance(t)).sqrt();
    if ratio < 3.7 || final_sd * PI / dx < 7.5 {
        return Err(PdeError::GridTooCoarse { dx, width, ratio });
    }
    if grid.half_width < 10.0 * final_sd {
        return Err(PdeError::DomainTooSmall { half_width: grid.half_width, needed: 10.0 * final_sd });
    }
    let nodes = grid.nodes();
    let n = grid.points;
    let mut buf: Vec<Complex<f64>> = nodes.iter().map(|&y| Complex::new(gaussian(width * width, y), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let a = variant.variance(t);
    for (c, xi) in buf.iter_mut().zip(grid.frequencies()) {
        *c *= (-0.5 * a * xi * xi).exp();
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let values = buf.iter().map(|c| c.re / n as f64).collect();
    Ok(SpectralSolution { nodes, values, dx })
}

/// Richardson extrapolation ε → 0 from runs at ε, ε/2 and ε/4, cancelling
/// the O(ε) and O(ε²) terms: (8u(ε/4) - 6u(ε/2) + u(ε))/3.
pub fn spectral_evolve_extrapolated(
    variant: ParabolicVariant,
    eps: f64,
    t: f64,
    grid: &Grid,
) -> Result<SpectralSolution, PdeError> {
    let u1 = spectral_evolve(variant, eps, t, grid)?;
    let u2 = spectral_evolve(variant, 0.5 * eps, t, grid)?;
    let u4 = spectral_evolve(variant, 0.25 * eps, t, grid)?;
    let values =
        u4.values.iter().zip(&u2.values).zip(&u1.values).map(|((a, b), c)| (8.0 * a - 6.0 * b + c) / 3.0).collect();
    Ok(SpectralSolution { nodes: u1.nodes, values, dx: u1.dx })
}

/// One first-coordinate factor times k - 1 other-coordinate factors.
pub fn product_kernel(t: f64, x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let v = if i == 0 { ParabolicVariant::FirstCoordinate } else { ParabolicVariant::OtherCoordinate };
            v.closed_form(t, xi)
        })
        .product()
}
