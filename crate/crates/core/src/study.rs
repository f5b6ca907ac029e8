//! Convergence studies: sweep (monomial, N, t, route), compare each finite-N
//! moment with its Gaussian limit, fit the decay rate in N, and write CSV.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::eigenmethod::{heat_moment_eigen, EigenError};
use crate::gaussian_limit::{gaussian_moment, LimitError};
use crate::heatop::{heat_moment, HeatError, MomentResult, Route};
use crate::numeric::Precision;
use crate::operators::{OperatorError, SphereConfig};
use crate::polyalg::{MultiIndex, PolyError, Polynomial};
use crate::sphere_mc::{mc_moment, McConfig, McError};

pub const CSV_HEADER: [&str; 9] =
    ["monomial", "N", "t", "route", "value", "limit", "abs_error", "stderr", "fitted_rate"];

/// Errors at or below this are treated as exact agreement and left out of
/// rate fits.
pub const EXACT_FLOOR: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl StudyError {
    pub fn is_usage(&self) -> bool {
        matches!(self, Self::Usage(_) | Self::Poly(PolyError::Parse(_)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub paths: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { paths: 100_000, step: 1e-3, seed: 0 }
    }
}

/// Closed forms for the moments of degree <= 2.
pub fn closed_form_moment(cfg: &SphereConfig, alpha: &MultiIndex) -> Option<f64> {
    let (n, t) = (cfg.n as f64, cfg.t);
    let odd = alpha.exponents().iter().any(|e| e % 2 == 1);
    match alpha.degree() {
        0 => Some(1.0),
        _ if odd => Some(0.0),
        2 if alpha.get(0) == 2 => Some(1.0 + (n - 1.0) * (-t).exp() - n * (-t * (1.0 - 1.0 / n)).exp()),
        2 => Some(-(-t).exp_m1()),
        _ => None,
    }
}

/// One moment by any route.
pub fn compute_moment(
    cfg: &SphereConfig,
    f: &Polynomial,
    route: Route,
    precision: Precision,
    mc: &McSettings,
) -> Result<MomentResult, StudyError> {
    match route {
        Route::Series | Route::Matexp => Ok(heat_moment(cfg, f, route, precision)?),
        Route::Eigen => Ok(heat_moment_eigen(cfg, f, precision)?),
        Route::MonteCarlo | Route::ClosedForm => {
            let alpha = single_monomial(f)
                .ok_or_else(|| StudyError::Usage(format!("route {route} takes a single monomial")))?;
            if route == Route::ClosedForm {
                let value = closed_form_moment(cfg, &alpha)
                    .ok_or_else(|| StudyError::Usage(format!("no closed form for monomial {alpha}")))?;
                return Ok(MomentResult {
                    value,
                    route,
                    error_bound: 1e-15 * value.abs().max(1.0),
                    config: *cfg,
                    monomial: Some(alpha),
                });
            }
            let est =
                mc_moment(&McConfig::new(*cfg, mc.step.min(cfg.t.max(f64::MIN_POSITIVE)), mc.paths, mc.seed)?, &alpha)?;
            Ok(MomentResult { value: est.mean, route, error_bound: est.stderr, config: *cfg, monomial: Some(alpha) })
        }
    }
}

fn single_monomial(f: &Polynomial) -> Option<MultiIndex> {
    let mut it = f.terms();
    match (it.next(), it.next()) {
        (Some((a, c)), None) if *c == dashu_ratio::RBig::ONE => Some(a.clone()),
        _ => None,
    }
}

/// Least-squares slope of ln(error) against ln(N), negated; None with fewer
/// than two usable points.
pub fn fit_rate(points: &[(u32, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > EXACT_FLOOR && e.is_finite())
        .map(|(n, e)| ((*n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(-sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub monomials: Vec<MultiIndex>,
    pub n_values: Vec<u32>,
    pub t_values: Vec<f64>,
    pub routes: Vec<Route>,
    pub precision: Precision,
    pub mc: McSettings,
    pub out: Option<PathBuf>,
}

impl StudySpec {
    pub fn validate(&self) -> Result<(), StudyError> {
        let usage = |m: String| Err(StudyError::Usage(m));
        if self.monomials.is_empty() || self.n_values.is_empty() || self.t_values.is_empty() || self.routes.is_empty() {
            return usage("study needs at least one monomial, N, t and route".into());
        }
        let k = self.monomials.iter().map(|a| a.vars()).max().unwrap_or(1);
        if let Some(n) = self.n_values.iter().find(|&&n| n as usize <= k || n < 2) {
            return usage(format!("N = {n} must exceed the number of variables ({k}) and be at least 2"));
        }
        if let Some(t) = self.t_values.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return usage(format!("t = {t} must be positive"));
        }
        if self.routes.contains(&Route::MonteCarlo)
            && (self.mc.paths == 0 || self.mc.step.is_nan() || self.mc.step <= 0.0)
        {
            return usage("Monte Carlo needs paths >= 1 and a positive step".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub monomial: MultiIndex,
    pub n: u32,
    pub t: f64,
    pub route: Route,
    /// None when the route failed for this point.
    pub value: Option<f64>,
    pub limit: f64,
    pub abs_error: Option<f64>,
    pub stderr: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub failure: Option<String>,
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl ConvergenceRow {
    fn record(&self) -> [String; 9] {
        let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
        [
            self.monomial.to_string(),
            self.n.to_string(),
            fmt17(self.t),
            self.route.name().to_string(),
            self.value.map(fmt17).unwrap_or_else(|| "failed".into()),
            fmt17(self.limit),
            opt(self.abs_error),
            opt(self.stderr),
            opt(self.fitted_rate),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub rows: Vec<ConvergenceRow>,
}

impl StudyOutput {
    pub fn to_csv(&self) -> Result<String, StudyError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record(r.record())?;
        }
        let bytes = w.into_inner().map_err(|e| StudyError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.value.is_none()).count()
    }

    /// One line per N-sweep with its fitted rate.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in self.rows.iter().filter(|r| r.fitted_rate.is_some() || r.failure.is_some()) {
            match (&r.failure, r.fitted_rate) {
                (Some(f), _) => {
                    out.push_str(&format!("({}) N={} t={} {}: failed: {f}\n", r.monomial, r.n, r.t, r.route))
                }
                (None, Some(rate)) => {
                    out.push_str(&format!("({}) t={} {}: fitted rate {rate:.4}\n", r.monomial, r.t, r.route))
                }
                _ => {}
            }
        }
        out
    }
}

/// Evaluates the whole grid in parallel; rows come back in canonical
/// (monomial, N, t, route) order whatever the completion order.
pub fn run_study(spec: &StudySpec) -> Result<StudyOutput, StudyError> {
    spec.validate()?;
    let mut n_values = spec.n_values.clone();
    n_values.sort_unstable();
    n_values.dedup();
    let mut t_values = spec.t_values.clone();
    t_values.sort_by(|a, b| a.total_cmp(b));
    t_values.dedup();
    let mut tasks = Vec::new();
    for (mi, alpha) in spec.monomials.iter().enumerate() {
        for &n in &n_values {
            for &t in &t_values {
                for &route in &spec.routes {
                    tasks.push((mi, alpha.clone(), n, t, route));
                }
            }
        }
    }
    let mut rows: Vec<ConvergenceRow> = tasks
        .par_iter()
        .map(|(_, alpha, n, t, route)| study_point(spec, alpha, *n, *t, *route))
        .collect::<Result<_, _>>()?;

    // fitted rate on the last row of each N-sweep
    let mut sweeps: BTreeMap<(usize, u64, Route), Vec<usize>> = BTreeMap::new();
    for (i, (mi, _, _, t, route)) in tasks.iter().enumerate() {
        sweeps.entry((*mi, t.to_bits(), *route)).or_default().push(i);
    }
    for idx in sweeps.values() {
        let points: Vec<(u32, f64)> = idx.iter().filter_map(|&i| rows[i].abs_error.map(|e| (rows[i].n, e))).collect();
        let last = *idx.last().expect("nonempty sweep");
        rows[last].fitted_rate = fit_rate(&points);
    }
    Ok(StudyOutput { rows })
}

fn study_point(
    spec: &StudySpec,
    alpha: &MultiIndex,
    n: u32,
    t: f64,
    route: Route,
) -> Result<ConvergenceRow, StudyError> {
    let limit = gaussian_moment(alpha, t)?;
    let cfg = SphereConfig::new(n, t, alpha.vars(), alpha.degree())?;
    let f = Polynomial::monomial(alpha.clone(), dashu_ratio::RBig::ONE);
    let mut row = ConvergenceRow {
        monomial: alpha.clone(),
        n,
        t,
        route,
        value: None,
        limit,
        abs_error: None,
        stderr: None,
        fitted_rate: None,
        failure: None,
    };
    match compute_moment(&cfg, &f, route, spec.precision, &spec.mc) {
        Ok(m) => {
            row.value = Some(m.value);
            row.abs_error = Some((m.value - limit).abs());
            if route == Route::MonteCarlo {
                row.stderr = Some(m.error_bound);
            }
        }
        Err(e) => row.failure = Some(e.to_string()),
    }
    Ok(row)
}

/// key=value lines; blank lines and lines starting with '#' are skipped.
/// Repeated keys accumulate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, Vec<String>>,
}

impl ConfigFile {
    pub fn get(&self, key: &str) -> Option<&[String]> {
        self.entries.get(key).map(|v| v.as_slice())
    }

    pub fn last(&self, key: &str) -> Option<&str> {
        self.get(key).and_then(|v| v.last()).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl FromStr for ConfigFile {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (lineno, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| StudyError::Usage(format!("config line {}: expected key=value", lineno + 1)))?;
            entries.entry(k.trim().to_string()).or_default().push(v.trim().to_string());
        }
        Ok(Self { entries })
    }
}

/// Comma- or whitespace-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, StudyError>
where
    T::Err: fmt::Display,
{
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| StudyError::Usage(format!("cannot parse '{p}': {e}"))))
        .collect()
}

/// Monomials separated by ';' (each one comma-separated exponents).
pub fn parse_monomials(s: &str) -> Result<Vec<MultiIndex>, StudyError> {
    s.split(';').map(str::trim).filter(|p| !p.is_empty()).map(|p| Ok(p.parse::<MultiIndex>()?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec()).unwrap()
    }

    fn spec(monomials: Vec<MultiIndex>, routes: Vec<Route>) -> StudySpec {
        StudySpec {
            monomials,
            n_values: vec![8, 16, 32, 64],
            t_values: vec![1.0],
            routes,
            precision: Precision::Double,
            mc: McSettings::default(),
            out: None,
        }
    }

    #[test]
    fn rate_fit() {
        let pts: Vec<(u32, f64)> = [8u32, 16, 32, 64].iter().map(|&n| (n, 3.0 / n as f64)).collect();
        assert!((fit_rate(&pts).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fit_rate(&[(8, 0.0), (16, 0.0)]), None);
        assert_eq!(fit_rate(&[(8, 1.0)]), None);
    }

    #[test]
    fn eigen_study_of_x1_squared() {
        let out = run_study(&spec(vec![mi(&[2, 0])], vec![Route::Eigen])).unwrap();
        assert_eq!(out.rows.len(), 4);
        let errs: Vec<f64> = out.rows.iter().map(|r| r.abs_error.unwrap()).collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 2.0).abs() < 0.3);
        }
        let rate = out.rows[3].fitted_rate.unwrap();
        assert!((rate - 1.0).abs() <= 0.15);
        assert!(out.rows[..3].iter().all(|r| r.fitted_rate.is_none()));
    }

    #[test]
    fn exact_and_zero_rows() {
        let out =
            run_study(&spec(vec![mi(&[0, 2]), mi(&[1, 0]), mi(&[1, 1])], vec![Route::Matexp, Route::Eigen])).unwrap();
        for r in &out.rows {
            match (r.monomial.exponents(), r.route) {
                ([0, 2], _) => assert!(r.abs_error.unwrap() <= 1e-12),
                ([1, 1], Route::Eigen) => assert!(r.failure.is_some() && r.value.is_none()),
                _ => assert!(r.value.unwrap().abs() <= 1e-12),
            }
        }
        assert_eq!(out.failures(), 4);
        let csv = out.to_csv().unwrap();
        assert!(csv.starts_with("monomial,N,t,route,value,limit,abs_error,stderr,fitted_rate\n"));
        assert!(csv.contains("\"1,1\",8,1.0000000000000000e0,eigen,failed,"));
    }

    #[test]
    fn csv_is_reproducible() {
        let mut s = spec(vec![mi(&[2, 0]), mi(&[0, 2])], vec![Route::Matexp, Route::MonteCarlo]);
        s.n_values = vec![4, 8];
        s.mc = McSettings { paths: 500, step: 0.05, seed: 3 };
        let a = run_study(&s).unwrap().to_csv().unwrap();
        let b = run_study(&s).unwrap().to_csv().unwrap();
        assert_eq!(a, b);
        assert!(a.lines().skip(1).all(|l| l.split(',').count() >= 10));
    }

    #[test]
    fn closed_forms_match_exact_routes() {
        for alpha in [mi(&[0, 0]), mi(&[1, 0]), mi(&[2, 0]), mi(&[0, 2]), mi(&[1, 1]), mi(&[0, 1])] {
            let cfg = SphereConfig::new(12, 0.7, 2, 2).unwrap();
            let f = Polynomial::monomial(alpha.clone(), dashu_ratio::RBig::ONE);
            let c = compute_moment(&cfg, &f, Route::ClosedForm, Precision::Double, &McSettings::default()).unwrap();
            let m = compute_moment(&cfg, &f, Route::Matexp, Precision::Double, &McSettings::default()).unwrap();
            assert!((c.value - m.value).abs() < 1e-12, "{alpha}");
        }
        let cfg = SphereConfig::new(12, 0.7, 2, 4).unwrap();
        assert_eq!(closed_form_moment(&cfg, &mi(&[4, 0])), None);
    }

    #[test]
    fn validation() {
        let mut s = spec(vec![mi(&[2, 0, 0])], vec![Route::Matexp]);
        s.n_values = vec![3];
        assert!(matches!(run_study(&s), Err(StudyError::Usage(_))));
        let mut s = spec(vec![mi(&[2])], vec![Route::Matexp]);
        s.t_values = vec![0.0];
        assert!(run_study(&s).is_err());
        assert!(run_study(&spec(vec![], vec![Route::Matexp])).is_err());
    }

    #[test]
    fn config_parsing() {
        let cfg: ConfigFile =
            "# sweep\nN = 8,16\nt=1\nmonomial=2,0\nmonomial=0,2\n\nroutes=matexp, eigen\n".parse().unwrap();
        assert_eq!(parse_list::<u32>(cfg.last("N").unwrap()).unwrap(), vec![8, 16]);
        assert_eq!(cfg.get("monomial").unwrap().len(), 2);
        assert_eq!(parse_list::<Route>(cfg.last("routes").unwrap()).unwrap(), vec![Route::Matexp, Route::Eigen]);
        assert!("novalue".parse::<ConfigFile>().is_err());
        assert_eq!(parse_monomials("2,0; 0,2").unwrap(), vec![mi(&[2, 0]), mi(&[0, 2])]);
        assert!(parse_list::<u32>("8,x").is_err());
    }
}
