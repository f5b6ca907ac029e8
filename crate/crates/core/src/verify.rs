//! Invariant suites behind `sphereheat verify`. Each check records what was
//! measured so the report doubles as a diff when something breaks.

use std::fmt;
use std::str::FromStr;

use dashu_ratio::RBig;

use crate::eigenmethod::{
    check_distinct_eigenvalues, eigen_poly, eigen_poly_at_sqrt_n, expected_leading_coefficient, heat_moment_x1_eigen,
    monomial_in_eigenbasis, printed_recurrence_residual, recurrence_residual, sqrt_n_ratio, sqrt_n_ratio_closed,
    t0_remainder_ratio, t0_series,
};
use crate::gaussian_limit::{
    classical_limit_check, gaussian_moment, marginal_compatibility, quadrature_mass, quadrature_moment, var_first,
    LimitKernelParams,
};
use crate::heatop::{bch_defect, heat_moment, Route};
use crate::numeric::Precision;
use crate::operators::{
    basis, build_D, build_E, build_d_on, build_e_on, build_euler, build_hermite_limit, build_second_derivatives,
    build_sphere_laplacian, commutator, SphereConfig,
};
use crate::pde_appendix::{
    inverse_transport, residual, spectral_evolve, spectral_evolve_extrapolated, Grid, ParabolicVariant,
};
use crate::polyalg::{MultiIndex, Polynomial};
use crate::sphere_mc::{mc_moments, mc_moments_coupled, McConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Operators,
    Eigen,
    Gaussian,
    Pde,
    Mc,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Operators, Suite::Eigen, Suite::Gaussian, Suite::Pde, Suite::Mc];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Operators => "operators",
            Suite::Eigen => "eigen",
            Suite::Gaussian => "gaussian",
            Suite::Pde => "pde",
            Suite::Mc => "mc",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}' (operators, eigen, gaussian, pde, mc, all)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// Passes, but records a known disagreement with a published formula.
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    fn push(&mut self, suite: Suite, name: &str, ok: bool, detail: String) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.checks.push(Check { suite, name: name.into(), status, detail });
    }

    fn warn(&mut self, suite: Suite, name: &str, detail: String) {
        self.checks.push(Check { suite, name: name.into(), status: Status::Warn, detail });
    }

    fn error(&mut self, suite: Suite, name: &str, e: impl fmt::Display) {
        self.push(suite, name, false, format!("error: {e}"));
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Warn => "WARN",
                Status::Fail => "FAIL",
            };
            writeln!(f, "{tag} [{}] {}: {}", c.suite, c.name, c.detail)?;
        }
        let fails = self.checks.iter().filter(|c| c.status == Status::Fail).count();
        write!(f, "{} checks, {} failed", self.checks.len(), fails)
    }
}

pub fn run_verify(suite: Suite) -> VerifyReport {
    let mut r = VerifyReport::default();
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    for s in suites {
        match s {
            Suite::Operators => operators(&mut r),
            Suite::Eigen => eigen(&mut r),
            Suite::Gaussian => gaussian(&mut r),
            Suite::Pde => pde(&mut r),
            Suite::Mc => mc(&mut r),
            Suite::All => unreachable!(),
        }
    }
    r
}

macro_rules! tri {
    ($r:expr, $suite:expr, $name:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => {
                $r.error($suite, $name, err);
                return;
            }
        }
    };
}

fn operators(r: &mut VerifyReport) {
    let s = Suite::Operators;
    for (n, k, l) in [(10u32, 3usize, 5usize), (5, 2, 6), (64, 3, 4)] {
        let ix = tri!(r, s, "[D,E] = 0", basis(k, l));
        let d = tri!(r, s, "[D,E] = 0", build_d_on(n, &ix));
        let e = tri!(r, s, "[D,E] = 0", build_e_on(n, &ix));
        let c = tri!(r, s, "[D,E] = 0", commutator(&d, &e));
        r.push(s, "[D,E] = 0", c.is_zero(), format!("exact on N={n}, k={k}, degree<={l}"));
    }
    {
        let ix = tri!(r, s, "[∂², x∂]", basis(1, 8));
        let d2 = tri!(r, s, "[∂², x∂]", build_second_derivatives(&ix, 0..1));
        let eu = tri!(r, s, "[∂², x∂]", build_euler(&ix, 0..1));
        let c = tri!(r, s, "[∂², x∂]", commutator(&d2, &eu));
        r.push(s, "[∂², x∂] = 2∂²", c == d2.scale(&RBig::from(2u8)), "exact on degree<=8".into());
        r.warn(
            s,
            "[∂², x∂] = ∂² as printed",
            format!("does not hold: the commutator is 2∂² (equal to ∂²: {})", c == d2),
        );
    }
    {
        let mut ok = true;
        for (n, k, l) in [(8u32, 2usize, 6usize), (20, 3, 5)] {
            let cfg = tri!(r, s, "closure", SphereConfig::new(n, 1.0, k, l));
            let lap = tri!(r, s, "closure", build_sphere_laplacian(&cfg, l));
            ok &= lap.is_degree_nonincreasing();
        }
        r.push(s, "closure", ok, "Δ_S maps degree<=ℓ into itself".into());
    }
    {
        let mut ok = true;
        for n in [3u32, 10, 100] {
            let d = tri!(r, s, "eigenvalue read-off", build_D(n, 10));
            for deg in 0..=10usize {
                let block = d.degree_block(deg);
                ok &= block.len() == 1 && block[0][0] == crate::eigenmethod::eigenvalue(deg as u32, n);
            }
        }
        r.push(s, "eigenvalue read-off", ok, "diagonal of D equals -n(1+(n-2)/N), n<=10".into());
    }
    {
        let h = tri!(r, s, "Hermite limit", build_hermite_limit(3, 5));
        let mut scaled = Vec::new();
        for n in [8u32, 16, 32, 64] {
            let e = tri!(r, s, "Hermite limit", build_E(n, 3, 5));
            scaled.push(n as f64 * tri!(r, s, "Hermite limit", e.max_abs_diff(&h)));
        }
        let spread = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        r.push(s, "Hermite limit", spread < 1e-9, format!("N·max|E_N - H| = {scaled:?}"));
    }
    {
        let mut worst: f64 = 0.0;
        for t in [0.5, 1.0, 2.0] {
            worst = worst.max(tri!(r, s, "BCH splitting", bch_defect(2, 6, t)));
        }
        r.push(s, "BCH splitting", worst <= 1e-10, format!("max 1-norm defect {worst:.3e} on k=2, degree<=6"));
    }
}

fn eigen(r: &mut VerifyReport) {
    let s = Suite::Eigen;
    {
        let mut ok = true;
        for n in [3u32, 5, 10, 100] {
            for deg in 0..=12 {
                ok &= eigen_poly(deg, n).is_ok();
            }
            ok &= check_distinct_eigenvalues(12, n).is_ok();
        }
        r.push(s, "D p_n = λ_n p_n", ok, "exact for n<=12, N in {3,5,10,100}".into());
    }
    {
        let mut ok = true;
        for n in [3u32, 5, 10, 100] {
            for deg in 0..=12u32 {
                let c = tri!(r, s, "inverse expansion", monomial_in_eigenbasis(deg, n));
                let mut rebuilt = Polynomial::zero(1);
                for (j, cj) in c.iter().enumerate() {
                    let p = tri!(r, s, "inverse expansion", eigen_poly(deg - 2 * j as u32, n));
                    rebuilt = &rebuilt + &p.to_polynomial().scale(cj);
                }
                ok &= rebuilt == Polynomial::monomial(MultiIndex::new(vec![deg]).expect("one variable"), RBig::ONE);
            }
        }
        r.push(s, "inverse expansion", ok, "x̃ⁿ = Σ c_j p_{n-2j} exactly, n<=12".into());
    }
    {
        let mut ok = true;
        let mut simplified_mismatch = Vec::new();
        for n in 2..=100u32 {
            for deg in 0..=12u32 {
                let e = tri!(r, s, "value at √N", eigen_poly_at_sqrt_n(deg, n));
                ok &= e.intermediate_matches();
                if n == 10 && !e.simplified_matches() {
                    simplified_mismatch.push(deg);
                }
            }
        }
        r.push(s, "value at √N", ok, "rising/falling product form equals direct evaluation, n<=12, 2<=N<=100".into());
        r.warn(
            s,
            "simplified value at √N",
            format!("(N-1)^(n,rising)/(2^n (N/2)^(n,rising)) disagrees with direct evaluation at N=10 for n in {simplified_mismatch:?}"),
        );
    }
    {
        let mut ok = true;
        for n in [3u32, 7, 10, 50, 100] {
            for deg in 0..=10 {
                ok &= tri!(r, s, "successive ratio", sqrt_n_ratio(deg, n)) == sqrt_n_ratio_closed(deg, n);
            }
        }
        r.push(s, "successive ratio", ok, "p_{n+1}(√N)/(√N p_n(√N)) = (N+n-2)/(N+2n-2) for both parities".into());
    }
    {
        let mut ok = true;
        let mut ratios = Vec::new();
        for j in 0..=2u32 {
            let series = t0_series(j, 5);
            for l in 0..=4usize {
                ok &= series.leading_coefficient(l) == expected_leading_coefficient(j, l as u32);
            }
            for h in 0..=6u32 {
                ok &= recurrence_residual(j, h, 50) == RBig::ZERO;
                for l in 0..=3usize {
                    if let Some(q) = t0_remainder_ratio(&series, h, l, 50, 100) {
                        ratios.push(q / 2f64.powi(l as i32 + 1 + j as i32));
                    }
                }
            }
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        ok &= lo >= 0.75 && hi <= 1.25;
        r.push(
            s,
            "t₀ power series",
            ok,
            format!("leading coefficients exact; remainder ratio / 2^(L+1+j) in [{lo:.3}, {hi:.3}]"),
        );
        let printed = printed_recurrence_residual(0, 0, 50);
        r.warn(
            s,
            "t₀ recurrence as printed",
            format!("(N+2h+j+2)t₀(h+1) - (N+h)t₀(h) at j=h=0, N=50 is {printed}, not 0"),
        );
    }
    {
        let mut worst: f64 = 0.0;
        for n in [8u32, 32, 64] {
            for t in [0.5, 1.0, 2.0] {
                let cfg = tri!(r, s, "eigen vs matexp", SphereConfig::new(n, t, 1, 8));
                for deg in 0..=8u32 {
                    let e = tri!(r, s, "eigen vs matexp", heat_moment_x1_eigen(deg, &cfg, Precision::Extended));
                    let f = Polynomial::monomial(MultiIndex::new(vec![deg]).expect("one variable"), RBig::ONE);
                    let m = tri!(r, s, "eigen vs matexp", heat_moment(&cfg, &f, Route::Matexp, Precision::Extended));
                    worst = worst.max((e.value - m.value).abs());
                }
            }
        }
        r.push(s, "eigen vs matexp", worst <= 1e-9, format!("max |difference| {worst:.3e}, n<=8, N<=64"));
    }
}

fn gaussian(r: &mut VerifyReport) {
    let s = Suite::Gaussian;
    {
        let mut worst: f64 = 0.0;
        for k in 1..=3 {
            for t in [0.25, 1.0, 4.0] {
                let p = tri!(r, s, "normalisation", LimitKernelParams::new(t, k));
                worst = worst.max((quadrature_mass(&p) - 1.0).abs());
            }
        }
        r.push(s, "normalisation", worst <= 1e-8, format!("max |mass - 1| = {worst:.3e}"));
    }
    {
        let mut worst: f64 = 0.0;
        for k in 1..=3usize {
            let ix = tri!(r, s, "moments vs quadrature", crate::polyalg::BasisIndexer::new(k, 6));
            for alpha in ix.monomials() {
                for t in [0.5, 1.0, 2.0] {
                    let a = tri!(r, s, "moments vs quadrature", gaussian_moment(alpha, t));
                    let b = tri!(r, s, "moments vs quadrature", quadrature_moment(alpha, t));
                    worst = worst.max((a - b).abs());
                }
            }
        }
        r.push(s, "moments vs quadrature", worst <= 1e-7, format!("max deviation {worst:.3e}, |α|<=6, k<=3"));
    }
    {
        let mut worst: f64 = 0.0;
        let ix = tri!(r, s, "classical limit", crate::polyalg::BasisIndexer::new(3, 6));
        for alpha in ix.monomials() {
            worst = worst.max(tri!(r, s, "classical limit", classical_limit_check(alpha, 30.0)));
        }
        r.push(s, "classical limit", worst <= 1e-7, format!("max |moment(t=30) - standard| = {worst:.3e}"));
    }
    {
        let a = tri!(r, s, "marginals", marginal_compatibility(3, 2, 0.5, &[-1.0, 0.0, 1.0]));
        let b = tri!(r, s, "marginals", marginal_compatibility(2, 1, 1.0, &[-1.0, 0.0, 1.0]));
        let worst = a.max_deviation.max(b.max_deviation);
        r.push(s, "marginals", worst <= 1e-7, format!("max deviation {worst:.3e}"));
    }
    {
        let t = 1e-2;
        let rel = var_first(t) / (t * t / 2.0) - 1.0;
        r.push(s, "small-t variance", rel.abs() < 0.01, format!("var_first(1e-2)/(t²/2) - 1 = {rel:.3e}"));
        r.warn(
            s,
            "small-t variance as t³/6",
            format!("var_first(1e-2)/(t³/6) = {:.1}", var_first(t) / (t * t * t / 6.0)),
        );
    }
}

fn pde(r: &mut VerifyReport) {
    let s = Suite::Pde;
    use ParabolicVariant::*;
    {
        let mut ratios = Vec::new();
        for v in [FirstCoordinate, OtherCoordinate] {
            for t in [0.1, 1.0, 4.0] {
                for x in [0.0, 1.0, -1.0, 3.0, -3.0] {
                    let h = 0.02 * v.variance(t).sqrt();
                    let r1 = tri!(r, s, "residual order", residual(v, t, x, h));
                    let r2 = tri!(r, s, "residual order", residual(v, t, x, 0.5 * h));
                    if r1 > 1e-9 {
                        ratios.push(r1 / r2);
                    }
                }
            }
        }
        let ok = ratios.iter().all(|q| (3.5..=4.5).contains(q));
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        r.push(s, "residual order", ok, format!("{} refinement ratios in [{lo:.3}, {hi:.3}]", ratios.len()));
        let a = tri!(r, s, "residual size", residual(OtherCoordinate, 1.0, 0.0, 1e-3));
        let b = tri!(r, s, "residual size", residual(FirstCoordinate, 1.0, 1.0, 1e-3));
        r.push(s, "residual size", a <= 1e-5 && b <= 1e-5, format!("h=1e-3: {a:.3e}, {b:.3e}"));
    }
    {
        let mut worst: f64 = 0.0;
        for v in [FirstCoordinate, OtherCoordinate] {
            for t in [0.1, 1.0, 4.0] {
                for x in [-2.0, 0.0, 0.5, 3.0] {
                    worst = worst
                        .max((tri!(r, s, "Fourier inversion", inverse_transport(v, t, x)) - v.closed_form(t, x)).abs());
                }
            }
        }
        r.push(s, "Fourier inversion", worst <= 1e-8, format!("max deviation {worst:.3e}"));
    }
    {
        let grid = Grid::default();
        let mut worst: f64 = 0.0;
        let mut mass: f64 = 0.0;
        for v in [FirstCoordinate, OtherCoordinate] {
            for t in [0.5, 1.0, 2.0] {
                let u = tri!(r, s, "spectral evolution", spectral_evolve_extrapolated(v, 1e-3, t, &grid));
                worst = worst.max(u.max_deviation(|x| v.closed_form(t, x)));
            }
            let m0 = tri!(r, s, "mass", spectral_evolve(v, 1e-3, 0.0, &grid)).mass();
            for t in [0.25, 1.0, 4.0] {
                mass = mass.max((tri!(r, s, "mass", spectral_evolve(v, 1e-3, t, &grid)).mass() - m0).abs());
            }
        }
        r.push(s, "spectral evolution", worst <= 1e-5, format!("ε-extrapolated max deviation {worst:.3e}"));
        r.push(s, "mass", mass <= 1e-8, format!("max drift {mass:.3e}"));
    }
}

fn mc(r: &mut VerifyReport) {
    let s = Suite::Mc;
    let alphas: Vec<MultiIndex> = [[1u32, 0], [0, 2], [2, 0], [1, 1]]
        .iter()
        .map(|e| MultiIndex::new(e.to_vec()).expect("two variables"))
        .collect();
    for n in [4u32, 8] {
        let cfg = tri!(r, s, "agreement", SphereConfig::new(n, 1.0, 2, 2));
        let mcfg = tri!(r, s, "agreement", McConfig::new(cfg, 0.02, 20_000, 11));
        let est = tri!(r, s, "agreement", mc_moments_coupled(&mcfg, &alphas));
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for (a, e) in alphas.iter().zip(&est) {
            let f = Polynomial::monomial(a.clone(), RBig::ONE);
            let exact = tri!(r, s, "agreement", heat_moment(&cfg, &f, Route::Matexp, Precision::Double)).value;
            let dev = (e.coarse.mean - exact).abs();
            ok &= dev <= 3.0 * e.coarse.stderr + e.bias_allowance();
            worst = worst.max(dev / (3.0 * e.coarse.stderr + e.bias_allowance()));
        }
        r.push(s, "agreement", ok, format!("N={n}, t=1, h=0.02, 2e4 paths: worst deviation / allowance {worst:.3}"));
    }
    {
        let cfg = tri!(r, s, "symmetry", SphereConfig::new(6, 1.0, 3, 2));
        let mcfg = tri!(r, s, "symmetry", McConfig::new(cfg, 0.05, 20_000, 5));
        let alphas = [MultiIndex::new(vec![0, 2, 0]).expect("3"), MultiIndex::new(vec![0, 0, 2]).expect("3")];
        let e = tri!(r, s, "symmetry", mc_moments(&mcfg, &alphas));
        let dev = (e[0].mean - e[1].mean).abs();
        let tol = 3.0 * (e[0].stderr.powi(2) + e[1].stderr.powi(2)).sqrt();
        r.push(s, "symmetry", dev <= tol, format!("|E x2² - E x3²| = {dev:.3e} vs {tol:.3e}"));
    }
    {
        let cfg = tri!(r, s, "determinism", SphereConfig::new(5, 0.5, 2, 2));
        let mcfg = tri!(r, s, "determinism", McConfig::new(cfg, 0.05, 2000, 9));
        let a = tri!(r, s, "determinism", mc_moments(&mcfg, &alphas));
        let b = tri!(r, s, "determinism", mc_moments(&mcfg, &alphas));
        r.push(s, "determinism", a == b, "identical seed gives bit-identical estimates".into());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_parse() {
        for s in ["operators", "eigen", "gaussian", "pde", "mc", "all"] {
            assert_eq!(s.parse::<Suite>().unwrap().name(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn cheap_suites_pass() {
        for s in [Suite::Operators, Suite::Gaussian, Suite::Pde] {
            let rep = run_verify(s);
            assert!(rep.passed(), "{rep}");
        }
    }

    #[test]
    fn eigen_suite_reports_expected_warnings() {
        let rep = run_verify(Suite::Eigen);
        assert!(rep.passed(), "{rep}");
        let warn = rep.checks.iter().find(|c| c.name == "simplified value at √N").unwrap();
        assert_eq!(warn.status, Status::Warn);
        assert!(warn.detail.contains("[1, 2"));
    }
}
