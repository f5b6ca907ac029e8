//! Monte Carlo oracle: Brownian motion with generator ½Δ on the sphere of
//! radius √N, started at the north pole, by a tangential-Gaussian step
//! followed by a radial rescale. The scheme has O(h) bias; a coupled run at
//! h and h/2 measures it.
//!
//! Every path draws from its own ChaCha8 stream (seed, path index) and paths
//! are reduced in fixed-size chunks in index order, so estimates are
//! bit-identical for any thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::operators::SphereConfig;
use crate::polyalg::MultiIndex;

pub const BIAS_NOTE: &str = "tangential-projection walk; discretisation bias O(step)";

const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("step must be positive, finite and at most t, got {0}")]
    BadStep(f64),
    #[error("need at least one path")]
    NoPaths,
    #[error("monomial {alpha} has {got} variables, configuration keeps {k}")]
    TooManyVariables { alpha: MultiIndex, got: usize, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub cfg: SphereConfig,
    pub step: f64,
    pub paths: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(cfg: SphereConfig, step: f64, paths: usize, seed: u64) -> Result<Self, McError> {
        if !(step > 0.0 && step.is_finite()) || (cfg.t > 0.0 && step > cfg.t) {
            return Err(McError::BadStep(step));
        }
        if paths == 0 {
            return Err(McError::NoPaths);
        }
        Ok(Self { cfg, step, paths, seed })
    }

    /// ⌈t/h⌉, ignoring rounding noise in the quotient.
    pub fn steps(&self) -> usize {
        if self.cfg.t == 0.0 {
            return 0;
        }
        ((self.cfg.t / self.step) * (1.0 - 1e-12)).ceil() as usize
    }

    /// t / ⌈t/h⌉, the step actually taken.
    pub fn effective_step(&self) -> f64 {
        match self.steps() {
            0 => 0.0,
            s => self.cfg.t / s as f64,
        }
    }

    fn rng(&self, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path as u64);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    pub step: f64,
    pub bias_note: &'static str,
}

/// Walker state in x̃-coordinates on the sphere of radius √N.
struct Walker {
    x: Vec<f64>,
    z: Vec<f64>,
    radius: f64,
}

impl Walker {
    fn new(n: u32) -> Self {
        let radius = (n as f64).sqrt();
        let mut x = vec![0.0; n as usize];
        x[0] = radius;
        Self { x, z: vec![0.0; n as usize], radius }
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) {
        for zi in self.z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
    }

    /// x <- (x + √h P_x z) · √N / |x + √h P_x z|, with P_x the tangent projection.
    fn step(&mut self, sqrt_h: f64) {
        let n = self.radius * self.radius;
        let dot: f64 = self.x.iter().zip(&self.z).map(|(a, b)| a * b).sum::<f64>() / n;
        for (xi, zi) in self.x.iter_mut().zip(&self.z) {
            *xi += sqrt_h * (zi - dot * *xi);
        }
        let norm = self.x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let s = self.radius / norm;
        self.x.iter_mut().for_each(|xi| *xi *= s);
    }

    fn norm(&self) -> f64 {
        self.x.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// First k coordinates with x1 = x̃1 - m.
    fn observe(&self, k: usize, m: f64) -> Vec<f64> {
        let mut out = self.x[..k].to_vec();
        out[0] -= m;
        out
    }
}

/// One endpoint in unshifted coordinates (x1, ..., xk).
pub fn simulate_endpoint(mc: &McConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w = Walker::new(mc.cfg.n);
    let sqrt_h = mc.effective_step().sqrt();
    for _ in 0..mc.steps() {
        w.draw(rng);
        w.step(sqrt_h);
    }
    w.observe(mc.cfg.k, mc.cfg.m())
}

/// Largest relative deviation of ‖x̃‖ from √N along one path.
pub fn radius_drift(mc: &McConfig, path: usize) -> f64 {
    let mut rng = mc.rng(path);
    let mut w = Walker::new(mc.cfg.n);
    let sqrt_h = mc.effective_step().sqrt();
    let mut worst: f64 = 0.0;
    for _ in 0..mc.steps() {
        w.draw(&mut rng);
        w.step(sqrt_h);
        worst = worst.max((w.norm() / w.radius - 1.0).abs());
    }
    worst
}

fn check_monomials(mc: &McConfig, alphas: &[MultiIndex]) -> Result<(), McError> {
    for a in alphas {
        if a.vars() > mc.cfg.k {
            return Err(McError::TooManyVariables { alpha: a.clone(), got: a.vars(), k: mc.cfg.k });
        }
    }
    Ok(())
}

fn monomial(x: &[f64], alpha: &MultiIndex) -> f64 {
    alpha.exponents().iter().zip(x).map(|(&e, v)| v.powi(e as i32)).product()
}

/// Running Σv and Σv² for a fixed list of observables.
#[derive(Clone)]
struct Sums {
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Sums {
    fn new(n: usize) -> Self {
        Self { s1: vec![0.0; n], s2: vec![0.0; n] }
    }

    fn push(&mut self, i: usize, v: f64) {
        self.s1[i] += v;
        self.s2[i] += v * v;
    }

    fn merge(mut self, other: &Sums) -> Self {
        for i in 0..self.s1.len() {
            self.s1[i] += other.s1[i];
            self.s2[i] += other.s2[i];
        }
        self
    }

    fn estimate(&self, i: usize, paths: usize, step: f64) -> McEstimate {
        let n = paths as f64;
        let mean = self.s1[i] / n;
        let var = if paths > 1 { ((self.s2[i] - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        McEstimate { mean, stderr: (var / n).sqrt(), paths, step, bias_note: BIAS_NOTE }
    }
}

/// Chunked map over path indices, reduced in chunk order.
fn reduce_paths<F>(paths: usize, observables: usize, per_path: F) -> Sums
where
    F: Fn(usize, &mut Sums) + Sync,
{
    let chunks = paths.div_ceil(CHUNK);
    let partial: Vec<Sums> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = Sums::new(observables);
            for p in c * CHUNK..((c + 1) * CHUNK).min(paths) {
                per_path(p, &mut s);
            }
            s
        })
        .collect();
    partial.iter().fold(Sums::new(observables), |acc, s| acc.merge(s))
}

/// Estimates of several monomials from one set of paths.
pub fn mc_moments(mc: &McConfig, alphas: &[MultiIndex]) -> Result<Vec<McEstimate>, McError> {
    check_monomials(mc, alphas)?;
    let sums = reduce_paths(mc.paths, alphas.len(), |p, s| {
        let x = simulate_endpoint(mc, &mut mc.rng(p));
        for (i, a) in alphas.iter().enumerate() {
            s.push(i, monomial(&x, a));
        }
    });
    Ok((0..alphas.len()).map(|i| sums.estimate(i, mc.paths, mc.effective_step())).collect())
}

pub fn mc_moment(mc: &McConfig, alpha: &MultiIndex) -> Result<McEstimate, McError> {
    Ok(mc_moments(mc, std::slice::from_ref(alpha))?[0])
}

/// Paired runs at step h and h/2 driven by the same Brownian increments:
/// the coarse walker takes (z1 + z2)/√2 where the fine one takes z1 then z2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledEstimate {
    /// Step h.
    pub coarse: McEstimate,
    /// Step h/2.
    pub fine: McEstimate,
    /// coarse - fine, per path; ≈ half the O(h) bias of the coarse run.
    pub difference: McEstimate,
    /// 2·fine - coarse, per path; first-order bias removed.
    pub extrapolated: McEstimate,
}

impl CoupledEstimate {
    /// Bias allowance for the coarse run: twice the measured coarse - fine
    /// gap plus three of its standard errors.
    pub fn bias_allowance(&self) -> f64 {
        2.0 * (self.difference.mean.abs() + 3.0 * self.difference.stderr)
    }
}

pub fn mc_moments_coupled(mc: &McConfig, alphas: &[MultiIndex]) -> Result<Vec<CoupledEstimate>, McError> {
    check_monomials(mc, alphas)?;
    let n_obs = alphas.len();
    let steps = mc.steps();
    let h = mc.effective_step();
    let (sqrt_h, sqrt_half) = (h.sqrt(), (0.5 * h).sqrt());
    let (k, m) = (mc.cfg.k, mc.cfg.m());
    let sums = reduce_paths(mc.paths, 4 * n_obs, |p, s| {
        let mut rng = mc.rng(p);
        let mut coarse = Walker::new(mc.cfg.n);
        let mut fine = Walker::new(mc.cfg.n);
        for _ in 0..steps {
            fine.draw(&mut rng);
            coarse.z.copy_from_slice(&fine.z);
            fine.step(sqrt_half);
            fine.draw(&mut rng);
            for (c, f) in coarse.z.iter_mut().zip(&fine.z) {
                *c = (*c + f) * std::f64::consts::FRAC_1_SQRT_2;
            }
            fine.step(sqrt_half);
            coarse.step(sqrt_h);
        }
        let (xc, xf) = (coarse.observe(k, m), fine.observe(k, m));
        for (i, a) in alphas.iter().enumerate() {
            let (vc, vf) = (monomial(&xc, a), monomial(&xf, a));
            s.push(i, vc);
            s.push(n_obs + i, vf);
            s.push(2 * n_obs + i, vc - vf);
            s.push(3 * n_obs + i, 2.0 * vf - vc);
        }
    });
    Ok((0..n_obs)
        .map(|i| CoupledEstimate {
            coarse: sums.estimate(i, mc.paths, h),
            fine: sums.estimate(n_obs + i, mc.paths, 0.5 * h),
            difference: sums.estimate(2 * n_obs + i, mc.paths, h),
            extrapolated: sums.estimate(3 * n_obs + i, mc.paths, 0.5 * h),
        })
        .collect())
}
